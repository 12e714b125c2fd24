#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gazeflow/source.hpp"
#include "gazeflow/types.hpp"

namespace gazeflow {

// ============================================================================
// Scenario description
// ============================================================================

struct FixateSegment {
    Vec3 target;          // unit direction
    double duration_s = 0.0;
};

struct SaccadeSegment {
    Vec3 target;          // unit direction reached at segment end
    double duration_s = 0.0;
};

struct BlinkSegment {
    double duration_s = 0.0;
};

struct DropoutSegment {
    double duration_s = 0.0;
};

using ScenarioSegment = std::variant<FixateSegment, SaccadeSegment, BlinkSegment, DropoutSegment>;

/// Script for the deterministic sample generator. Same scenario and seed
/// always produce byte-identical streams.
struct SyntheticScenario {
    std::vector<ScenarioSegment> segments;
    double sample_rate_hz = 120.0;
    double jitter_deg = 0.0;          // angular jitter std-dev per tangent axis
    double pupil_baseline_mm = 3.5;
    double pupil_noise_mm = 0.0;
    std::uint64_t rng_seed = 0;
};

struct LabeledInterval {
    EventKind kind = EventKind::Fixation;
    Timestamp start;
    Timestamp end;
};

/// The intervals the scenario script dictates: ordered, non-overlapping,
/// covering the whole timeline. The oracle for event-detection tests.
struct GroundTruthLabels {
    std::vector<LabeledInterval> intervals;
};

namespace detail {

/// Deterministic standard-normal draws (Box-Muller over mt19937_64), pinned
/// here so generated streams do not depend on the standard library's
/// distribution internals.
class GaussianRng {
public:
    explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}

    double normal(double stddev) {
        if (stddev <= 0.0) return 0.0;
        if (have_spare_) {
            have_spare_ = false;
            return spare_ * stddev;
        }
        double u1, u2;
        do {
            u1 = uniform01();
        } while (u1 <= 1e-300);
        u2 = uniform01();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * kPi * u2);
        have_spare_ = true;
        return mag * std::cos(2.0 * kPi * u2) * stddev;
    }

private:
    double uniform01() {
        return (engine_() >> 11) * 0x1.0p-53;  // 53 uniform bits in [0,1)
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Perturbs a unit direction by independent gaussian angles along two
/// tangent axes; the angular offset has per-axis std-dev jitter_deg.
inline Vec3 jitter_direction(const Vec3& dir, double jitter_deg, GaussianRng& rng) {
    if (jitter_deg <= 0.0) return dir;
    Vec3 ref = std::fabs(dir.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
    const Vec3 u = dir.cross(ref).normalized();
    const Vec3 v = dir.cross(u);
    const double a = rng.normal(jitter_deg) / kDegPerRad;
    const double b = rng.normal(jitter_deg) / kDegPerRad;
    return (dir + u * std::tan(a) + v * std::tan(b)).normalized();
}

}  // namespace detail

inline void validate_scenario(const SyntheticScenario& sc) {
    if (sc.segments.empty()) throw std::invalid_argument("scenario has zero segments");
    if (!(sc.sample_rate_hz > 0.0)) throw std::invalid_argument("sample_rate_hz must be > 0");
    if (sc.jitter_deg < 0.0) throw std::invalid_argument("jitter_deg must be >= 0");
    for (const auto& seg : sc.segments) {
        const double d = std::visit([](const auto& s) { return s.duration_s; }, seg);
        if (!(d > 0.0)) throw std::invalid_argument("segment duration must be > 0");
    }
}

/// Renders the scenario into a concrete sample stream plus the ground-truth
/// labels that mirror the script. Fixate segments jitter around the target,
/// saccades interpolate along the great circle at constant speed, blinks set
/// openness to 0 and drop direction validity, dropouts clear every flag.
inline std::pair<std::vector<GazeSample>, GroundTruthLabels>
generate_samples(const SyntheticScenario& sc) {
    validate_scenario(sc);
    detail::GaussianRng rng(sc.rng_seed);

    // Segment boundaries in integer microseconds.
    std::vector<std::int64_t> bounds{0};
    GroundTruthLabels labels;
    Vec3 dir;  // direction entering each segment
    bool have_dir = false;
    for (const auto& seg : sc.segments) {
        if (!have_dir) {
            if (const auto* f = std::get_if<FixateSegment>(&seg)) { dir = f->target.normalized(); have_dir = true; }
            if (const auto* s = std::get_if<SaccadeSegment>(&seg)) { dir = s->target.normalized(); have_dir = true; }
        }
        const double d = std::visit([](const auto& s) { return s.duration_s; }, seg);
        bounds.push_back(bounds.back() + std::llround(d * 1e6));
    }
    if (!have_dir) dir = {0, 0, 1};

    for (std::size_t i = 0; i < sc.segments.size(); ++i) {
        const EventKind kind = std::visit(
            [](const auto& s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, FixateSegment>) return EventKind::Fixation;
                else if constexpr (std::is_same_v<T, SaccadeSegment>) return EventKind::Saccade;
                else if constexpr (std::is_same_v<T, BlinkSegment>) return EventKind::Blink;
                else return EventKind::Gap;
            },
            sc.segments[i]);
        labels.intervals.push_back({kind, Timestamp{bounds[i]}, Timestamp{bounds[i + 1]}});
    }

    const std::int64_t total_us = bounds.back();
    std::vector<GazeSample> samples;
    samples.reserve(static_cast<std::size_t>(total_us * 1e-6 * sc.sample_rate_hz) + 2);

    std::size_t seg_idx = 0;
    Vec3 seg_entry_dir = dir;  // direction at the start of the current segment
    for (std::int64_t k = 0;; ++k) {
        const std::int64_t t_us = std::llround(static_cast<double>(k) * 1e6 / sc.sample_rate_hz);
        if (t_us >= total_us) break;
        while (t_us >= bounds[seg_idx + 1]) {
            // Leaving a segment pins the entry direction for the next one.
            if (const auto* f = std::get_if<FixateSegment>(&sc.segments[seg_idx]))
                seg_entry_dir = f->target.normalized();
            if (const auto* s = std::get_if<SaccadeSegment>(&sc.segments[seg_idx]))
                seg_entry_dir = s->target.normalized();
            ++seg_idx;
        }

        GazeSample s;
        s.timestamp = Timestamp{t_us};
        s.gaze_origin_mm = {0, 0, 0};

        const auto& seg = sc.segments[seg_idx];
        if (const auto* fix = std::get_if<FixateSegment>(&seg)) {
            s.gaze_direction = detail::jitter_direction(fix->target.normalized(), sc.jitter_deg, rng);
            s.validity = {true, true, true};
            s.openness_left = s.openness_right = 1.0;
            s.pupil_left_mm = sc.pupil_baseline_mm + rng.normal(sc.pupil_noise_mm);
            s.pupil_right_mm = sc.pupil_baseline_mm + rng.normal(sc.pupil_noise_mm);
            dir = s.gaze_direction;
        } else if (const auto* sac = std::get_if<SaccadeSegment>(&seg)) {
            const double u = static_cast<double>(t_us - bounds[seg_idx]) /
                             static_cast<double>(bounds[seg_idx + 1] - bounds[seg_idx]);
            const Vec3 on_path = slerp(seg_entry_dir, sac->target.normalized(), u);
            s.gaze_direction = detail::jitter_direction(on_path, sc.jitter_deg, rng);
            s.validity = {true, true, true};
            s.openness_left = s.openness_right = 1.0;
            s.pupil_left_mm = sc.pupil_baseline_mm + rng.normal(sc.pupil_noise_mm);
            s.pupil_right_mm = sc.pupil_baseline_mm + rng.normal(sc.pupil_noise_mm);
            dir = s.gaze_direction;
        } else if (std::holds_alternative<BlinkSegment>(seg)) {
            s.gaze_direction = dir;               // last known, flagged unusable
            s.validity = {false, false, true};
            s.openness_left = s.openness_right = 0.0;
        } else {                                  // dropout
            s.gaze_direction = dir;
            s.validity = {false, false, false};
        }
        samples.push_back(std::move(s));
    }
    return {std::move(samples), std::move(labels)};
}

/// Spec'd entry point: a consumable source plus the matching labels.
inline std::pair<std::unique_ptr<SampleSource>, GroundTruthLabels>
generate_synthetic(const SyntheticScenario& sc, Pacing pacing = Pacing::MaxSpeed) {
    auto [samples, labels] = generate_samples(sc);
    SourceDescriptor desc{"synthetic", sc.sample_rate_hz};
    return {std::make_unique<VectorSource>(std::move(samples), std::move(desc), pacing),
            std::move(labels)};
}

}  // namespace gazeflow
