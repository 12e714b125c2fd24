#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gazeflow/vec3.hpp"

namespace gazeflow {

// ============================================================================
// Time
// ============================================================================

/// Integer microseconds since session start. Wall-clock time never enters the
/// analysis path, so replaying a recording is exact and deterministic.
struct Timestamp {
    std::int64_t micros = 0;

    constexpr double seconds() const { return static_cast<double>(micros) * 1e-6; }

    static constexpr Timestamp from_seconds(double s) {
        return Timestamp{static_cast<std::int64_t>(s * 1e6 + (s >= 0 ? 0.5 : -0.5))};
    }

    constexpr auto operator<=>(const Timestamp&) const = default;
};

/// (b - a) in seconds.
inline constexpr double seconds_between(Timestamp a, Timestamp b) {
    return static_cast<double>(b.micros - a.micros) * 1e-6;
}

// ============================================================================
// Samples
// ============================================================================

/// Per-signal validity flags reported by the tracker.
/// Serialized as a bitmask: bit0 direction, bit1 pupil, bit2 openness.
struct Validity {
    bool direction = false;
    bool pupil = false;
    bool openness = false;

    constexpr int to_mask() const {
        return (direction ? 1 : 0) | (pupil ? 2 : 0) | (openness ? 4 : 0);
    }
    static constexpr Validity from_mask(int mask) {
        return {(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0};
    }
    constexpr bool operator==(const Validity&) const = default;
};

/// One timestamped eye-tracker reading. Combined (cyclopean) gaze only; the
/// velocity math uses a single direction vector, so per-eye rays are not
/// modeled. Immutable value once constructed.
struct GazeSample {
    Timestamp timestamp;
    Vec3 gaze_direction;              // unit vector when validity.direction is set
    Vec3 gaze_origin_mm;              // HMD frame
    std::optional<double> pupil_left_mm;
    std::optional<double> pupil_right_mm;
    std::optional<double> openness_left;   // [0,1], 0 = fully closed
    std::optional<double> openness_right;
    Validity validity;

    /// Mean of the available pupil diameters; one-eyed data is accepted.
    std::optional<double> mean_pupil_mm() const {
        if (pupil_left_mm && pupil_right_mm) return (*pupil_left_mm + *pupil_right_mm) / 2.0;
        if (pupil_left_mm) return pupil_left_mm;
        return pupil_right_mm;
    }

    std::optional<double> mean_openness() const {
        if (openness_left && openness_right) return (*openness_left + *openness_right) / 2.0;
        if (openness_left) return openness_left;
        return openness_right;
    }
};

/// Outcome of validate_sample: which criteria the sample passes.
struct ValidityReport {
    bool direction_flag = false;      // tracker says the direction is usable
    bool direction_unit_norm = false; // |dir| = 1 within 1e-6
    bool pupil_in_range = false;      // absent or in (0, 10] mm
    bool openness_in_range = false;   // absent or in [0, 1]
    bool timestamp_monotone = false;  // strictly after the previous sample

    /// Direction may feed velocity computation. A set flag with a non-unit
    /// vector is a malformed sample, not a usable one.
    constexpr bool direction_usable() const { return direction_flag && direction_unit_norm; }

    constexpr bool all_ok() const {
        return direction_flag && direction_unit_norm && pupil_in_range &&
               openness_in_range && timestamp_monotone;
    }
};

/// Pure predicate; never throws. `prev` is the timestamp of the previous
/// sample in the stream, if any.
inline ValidityReport validate_sample(const GazeSample& s,
                                      std::optional<Timestamp> prev = std::nullopt) {
    ValidityReport r;
    r.direction_flag = s.validity.direction;
    r.direction_unit_norm = is_unit(s.gaze_direction);
    auto pupil_ok = [](const std::optional<double>& p) {
        return !p || (*p > 0.0 && *p <= 10.0);
    };
    auto openness_ok = [](const std::optional<double>& o) {
        return !o || (*o >= 0.0 && *o <= 1.0);
    };
    r.pupil_in_range = pupil_ok(s.pupil_left_mm) && pupil_ok(s.pupil_right_mm);
    r.openness_in_range = openness_ok(s.openness_left) && openness_ok(s.openness_right);
    r.timestamp_monotone = !prev || s.timestamp > *prev;
    return r;
}

/// A GazeSample annotated with the angle to its predecessor and the angular
/// velocity over that interval. The first sample of a stream, and the first
/// sample after a gap, starts a new run: theta = velocity = 0 and dt_s = 0.
struct VelocitySample {
    GazeSample sample;
    double theta_deg = 0.0;           // [0, 180]
    double velocity_deg_per_s = 0.0;  // theta_deg / dt_s
    double dt_s = 0.0;                // > 0 except at run starts
    bool first_of_run = false;
};

// ============================================================================
// Events
// ============================================================================

enum class EventKind { Fixation, Saccade, Blink, Gap };

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::Fixation: return "fixation";
        case EventKind::Saccade: return "saccade";
        case EventKind::Blink: return "blink";
        case EventKind::Gap: return "gap";
    }
    return "?";
}

struct FixationStats {
    Vec3 centroid_direction;          // unit
    Vec3 centroid_origin_mm;
    double dispersion_deg = 0.0;      // RMS angular distance from the centroid
    std::optional<double> mean_pupil_mm;
    std::int64_t sample_count = 0;
};

struct SaccadeStats {
    double peak_velocity_deg_s = 0.0;
    double mean_velocity_deg_s = 0.0;
    double amplitude_deg = 0.0;       // angle between start and end direction
};

struct BlinkStats {
    double closure_s = 0.0;
};

struct GapStats {
    std::int64_t samples_lost = 0;    // observed-but-unusable samples in the hole
};

/// A classified interval of the gaze stream. Events from one stream are
/// non-overlapping and time-ordered; adjacent events may share a boundary
/// timestamp (intervals are effectively half-open).
struct GazeEvent {
    EventKind kind = EventKind::Gap;
    Timestamp start;
    Timestamp end;
    double duration_s = 0.0;          // seconds_between(start, end)
    std::variant<FixationStats, SaccadeStats, BlinkStats, GapStats> stats;

    static GazeEvent make(EventKind k, Timestamp start, Timestamp end,
                          std::variant<FixationStats, SaccadeStats, BlinkStats, GapStats> st) {
        return {k, start, end, seconds_between(start, end), std::move(st)};
    }

    const FixationStats* fixation() const { return std::get_if<FixationStats>(&stats); }
    const SaccadeStats* saccade() const { return std::get_if<SaccadeStats>(&stats); }
    const BlinkStats* blink() const { return std::get_if<BlinkStats>(&stats); }
    const GapStats* gap() const { return std::get_if<GapStats>(&stats); }
};

// ============================================================================
// Areas of interest
// ============================================================================

struct SphereAoi {
    Vec3 center_mm;
    double radius_mm = 0.0;           // > 0
};

/// Convex planar polygon, >= 3 vertices, listed in order around the boundary.
struct PolygonAoi {
    std::vector<Vec3> vertices_mm;
};

struct AreaOfInterest {
    std::string id;
    std::variant<SphereAoi, PolygonAoi> shape;
};

}  // namespace gazeflow
