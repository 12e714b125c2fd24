#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <ranges>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gazeflow/types.hpp"

namespace gazeflow {

// ============================================================================
// Ray / AOI geometry
// ============================================================================

/// Smallest positive ray parameter hitting the sphere, if any. A ray starting
/// inside the sphere hits at its exit point.
inline std::optional<double> ray_sphere_t(const Vec3& origin, const Vec3& dir,
                                          const SphereAoi& sphere) {
    const Vec3 oc = sphere.center_mm - origin;
    const double b = oc.dot(dir);
    const double disc = b * b - oc.dot(oc) + sphere.radius_mm * sphere.radius_mm;
    if (disc < 0.0) return std::nullopt;
    const double root = std::sqrt(disc);
    const double t1 = b - root;
    if (t1 > 0.0) return t1;
    const double t2 = b + root;
    if (t2 > 0.0) return t2;
    return std::nullopt;
}

/// Ray parameter at which the ray crosses the polygon's plane inside the
/// (convex) boundary, if any.
inline std::optional<double> ray_polygon_t(const Vec3& origin, const Vec3& dir,
                                           const PolygonAoi& poly) {
    const auto& v = poly.vertices_mm;
    if (v.size() < 3) return std::nullopt;
    const Vec3 normal = (v[1] - v[0]).cross(v[2] - v[0]);
    const double denom = normal.dot(dir);
    if (std::fabs(denom) < 1e-12) return std::nullopt;  // parallel to the plane
    const double t = normal.dot(v[0] - origin) / denom;
    if (t <= 0.0) return std::nullopt;
    const Vec3 p = origin + dir * t;
    // Inside test: edge cross products must agree in sign for either winding.
    int sign = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec3& a = v[i];
        const Vec3& b = v[(i + 1) % v.size()];
        const double side = (b - a).cross(p - a).dot(normal);
        if (std::fabs(side) < 1e-9) continue;  // on the edge counts as inside
        const int s = side > 0.0 ? 1 : -1;
        if (sign == 0) sign = s;
        else if (s != sign) return std::nullopt;
    }
    return t;
}

inline std::optional<double> ray_aoi_t(const Vec3& origin, const Vec3& dir,
                                       const AreaOfInterest& aoi) {
    if (const auto* s = std::get_if<SphereAoi>(&aoi.shape)) return ray_sphere_t(origin, dir, *s);
    return ray_polygon_t(origin, dir, std::get<PolygonAoi>(aoi.shape));
}

/// Id of the nearest AOI the gaze ray hits, or nullopt.
inline std::optional<std::string> aoi_hit_test(const Vec3& origin, const Vec3& dir,
                                               std::span<const AreaOfInterest> aois) {
    std::optional<std::string> best;
    double best_t = 0.0;
    for (const auto& aoi : aois) {
        if (auto t = ray_aoi_t(origin, dir, aoi)) {
            if (!best || *t < best_t) {
                best = aoi.id;
                best_t = *t;
            }
        }
    }
    return best;
}

inline bool fixation_hits(const GazeEvent& ev, const AreaOfInterest& aoi) {
    const auto* fx = ev.fixation();
    return fx && ray_aoi_t(fx->centroid_origin_mm, fx->centroid_direction, aoi).has_value();
}

// ============================================================================
// Pupil baseline
// ============================================================================

struct PupilBaseline {
    double baseline_mm = 0.0;  // > 0
    Timestamp computed_from;
    Timestamp computed_to;
};

/// Median of the per-sample mean pupil diameter over [0, first_seconds).
/// Throws when no pupil-valid sample falls in the interval.
inline PupilBaseline pupil_baseline(std::span<const GazeSample> samples, double first_seconds) {
    if (!(first_seconds > 0.0)) throw std::invalid_argument("baseline interval must be > 0");
    const Timestamp hi = Timestamp::from_seconds(first_seconds);
    std::vector<double> values;
    for (const auto& s : samples) {
        if (s.timestamp >= hi) break;
        if (!s.validity.pupil) continue;
        if (auto p = s.mean_pupil_mm()) values.push_back(*p);
    }
    if (values.empty()) throw std::runtime_error("no pupil-valid samples in the baseline interval");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    const double median = n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
    return {median, Timestamp{0}, hi};
}

// ============================================================================
// Event-log metrics
// ============================================================================

/// Delay from stimulus onset to the start of the first fixation whose
/// centroid ray hits the AOI, clamped to 0 when that fixation was already in
/// progress at onset. Nullopt when no fixation ever lands on the AOI.
inline std::optional<double> time_to_first_fixation(std::span<const GazeEvent> events,
                                                    const AreaOfInterest& aoi,
                                                    Timestamp stimulus_onset) {
    for (const auto& ev : events) {
        if (ev.kind != EventKind::Fixation) continue;
        if (ev.end <= stimulus_onset) continue;
        if (!fixation_hits(ev, aoi)) continue;
        return std::max(0.0, seconds_between(stimulus_onset, ev.start));
    }
    return std::nullopt;
}

/// Total fixation time attributed to the AOI inside (window_start,
/// window_end], clipping fixations at both window edges.
template <std::ranges::input_range Events>
    requires std::same_as<std::ranges::range_value_t<Events>, GazeEvent>
double dwell_time(const Events& events, const AreaOfInterest& aoi,
                  Timestamp window_start, Timestamp window_end) {
    double total = 0.0;
    for (const auto& ev : events) {
        if (ev.kind != EventKind::Fixation) continue;
        const Timestamp lo = std::max(ev.start, window_start);
        const Timestamp hi = std::min(ev.end, window_end);
        if (hi <= lo) continue;
        if (!fixation_hits(ev, aoi)) continue;
        total += seconds_between(lo, hi);
    }
    return total;
}

// ============================================================================
// Rolling-window snapshots
// ============================================================================

struct MetricsSnapshot {
    Timestamp window_start;
    Timestamp window_end;
    double mean_fixation_duration_s = 0.0;  // clipped to the window
    std::int64_t fixation_count = 0;
    double mean_saccade_velocity_deg_s = 0.0;  // mean of per-event means
    double peak_saccade_velocity_deg_s = 0.0;  // max of per-event peaks
    std::int64_t saccade_count = 0;
    double blink_rate_per_min = 0.0;
    std::optional<double> pupil_dilation_index;  // mean pupil / baseline
    std::map<std::string, double> dwell_time_s;  // per AOI id
    std::map<std::string, double> ttff_s;        // per AOI id; absent until seen
};

struct MetricsConfig {
    double window_s = 10.0;
    double step_s = 1.0;
    std::vector<AreaOfInterest> aois;
    Timestamp stimulus_onset{0};

    void validate() const {
        if (!(step_s > 0.0) || window_s < step_s)
            throw std::invalid_argument("need window_s >= step_s > 0");
    }
};

/// Per-sample input to the metrics stage: the timestamp drives the window
/// clock, the pupil value (when present) the dilation index.
struct PupilTick {
    Timestamp ts;
    std::optional<double> pupil_mm;
};

/// Streaming rolling-window aggregation. Events and ticks arrive in their
/// respective orders; a window is emitted once the event watermark (no event
/// overlapping the window can still appear) and the sample clock both pass
/// its end. Incremental output equals a batch recomputation over the same
/// logs by construction.
class MetricsEngine {
public:
    MetricsEngine(MetricsConfig config, PupilBaseline baseline)
        : config_(std::move(config)), baseline_(baseline) {
        config_.validate();
        step_us_ = std::llround(config_.step_s * 1e6);
        window_us_ = std::llround(config_.window_s * 1e6);
        next_end_us_ = step_us_;
    }

    std::vector<MetricsSnapshot> on_event(const GazeEvent& ev) {
        events_.push_back(ev);
        if (ev.kind == EventKind::Fixation) {
            for (const auto& aoi : config_.aois) {
                if (ttff_.count(aoi.id)) continue;
                if (ev.end <= config_.stimulus_onset) continue;
                if (!fixation_hits(ev, aoi)) continue;
                ttff_[aoi.id] = {std::max(0.0, seconds_between(config_.stimulus_onset, ev.start)),
                                 ev.start};
            }
        }
        return emit_due();
    }

    std::vector<MetricsSnapshot> on_tick(const PupilTick& tick, Timestamp event_watermark) {
        ticks_.push_back(tick);
        sample_clock_ = std::max(sample_clock_, tick.ts);
        event_watermark_ = std::max(event_watermark_, event_watermark);
        return emit_due();
    }

    /// End of stream: everything still pending is final.
    std::vector<MetricsSnapshot> flush() {
        event_watermark_ = Timestamp{std::numeric_limits<std::int64_t>::max()};
        return emit_due();
    }

private:
    std::vector<MetricsSnapshot> emit_due() {
        std::vector<MetricsSnapshot> out;
        while (next_end_us_ <= std::min(sample_clock_.micros, event_watermark_.micros)) {
            out.push_back(build(Timestamp{next_end_us_}));
            next_end_us_ += step_us_;
            prune();
        }
        return out;
    }

    MetricsSnapshot build(Timestamp end) const {
        MetricsSnapshot s;
        s.window_end = end;
        s.window_start = Timestamp{std::max<std::int64_t>(0, end.micros - window_us_)};

        double fix_dur_sum = 0.0;
        double sacc_mean_sum = 0.0;
        std::int64_t blink_count = 0;
        for (const auto& ev : events_) {
            const Timestamp lo = std::max(ev.start, s.window_start);
            const Timestamp hi = std::min(ev.end, end);
            if (hi <= lo) continue;  // no in-window extent
            switch (ev.kind) {
                case EventKind::Fixation:
                    ++s.fixation_count;
                    fix_dur_sum += seconds_between(lo, hi);
                    break;
                case EventKind::Saccade:
                    ++s.saccade_count;
                    sacc_mean_sum += ev.saccade()->mean_velocity_deg_s;
                    s.peak_saccade_velocity_deg_s =
                        std::max(s.peak_saccade_velocity_deg_s, ev.saccade()->peak_velocity_deg_s);
                    break;
                case EventKind::Blink:
                    ++blink_count;
                    break;
                case EventKind::Gap:
                    break;
            }
        }
        if (s.fixation_count > 0)
            s.mean_fixation_duration_s = fix_dur_sum / static_cast<double>(s.fixation_count);
        if (s.saccade_count > 0)
            s.mean_saccade_velocity_deg_s = sacc_mean_sum / static_cast<double>(s.saccade_count);
        s.blink_rate_per_min = static_cast<double>(blink_count) * (60.0 / config_.window_s);

        double pupil_sum = 0.0;
        std::int64_t pupil_n = 0;
        for (const auto& t : ticks_) {
            if (t.ts <= s.window_start || t.ts > end || !t.pupil_mm) continue;
            pupil_sum += *t.pupil_mm;
            ++pupil_n;
        }
        if (pupil_n > 0 && baseline_.baseline_mm > 0.0)
            s.pupil_dilation_index = pupil_sum / static_cast<double>(pupil_n) / baseline_.baseline_mm;

        for (const auto& aoi : config_.aois) {
            s.dwell_time_s[aoi.id] = dwell_time(events_, aoi, s.window_start, end);
            const auto it = ttff_.find(aoi.id);
            if (it != ttff_.end() && it->second.fixation_start <= end)
                s.ttff_s[aoi.id] = it->second.value_s;
        }
        return s;
    }

    void prune() {
        // Data wholly before every future window can go.
        const std::int64_t keep_from = next_end_us_ - window_us_;
        while (!events_.empty() && events_.front().end.micros <= keep_from) events_.pop_front();
        while (!ticks_.empty() && ticks_.front().ts.micros <= keep_from) ticks_.pop_front();
    }

    struct TtffEntry {
        double value_s = 0.0;
        Timestamp fixation_start;  // gates visibility: windows ending earlier
                                   // than this cannot know the value yet
    };

    MetricsConfig config_;
    PupilBaseline baseline_;
    std::int64_t step_us_ = 0;
    std::int64_t window_us_ = 0;
    std::int64_t next_end_us_ = 0;
    std::deque<GazeEvent> events_;
    std::deque<PupilTick> ticks_;
    std::map<std::string, TtffEntry> ttff_;
    Timestamp sample_clock_{-1};
    Timestamp event_watermark_{-1};
};

/// Batch form: one snapshot per step over complete logs.
inline std::vector<MetricsSnapshot> compute_window_metrics(std::span<const GazeEvent> events,
                                                           std::span<const PupilTick> ticks,
                                                           const PupilBaseline& baseline,
                                                           const MetricsConfig& config) {
    MetricsEngine engine(config, baseline);
    std::vector<MetricsSnapshot> out;
    for (const auto& ev : events) {
        auto part = engine.on_event(ev);
        out.insert(out.end(), part.begin(), part.end());
    }
    const Timestamp inf{std::numeric_limits<std::int64_t>::max()};
    for (const auto& t : ticks) {
        auto part = engine.on_tick(t, inf);  // batch: all events already fed
        out.insert(out.end(), part.begin(), part.end());
    }
    auto tail = engine.flush();
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
}

}  // namespace gazeflow
