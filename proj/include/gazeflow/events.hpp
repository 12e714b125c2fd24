#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gazeflow/types.hpp"

namespace gazeflow {

// ============================================================================
// Parameters
// ============================================================================

struct DetectorParams {
    enum class Mode { SingleThreshold, DualThresholdHysteresis };

    Mode mode = Mode::DualThresholdHysteresis;
    double saccade_threshold_deg_s = 250.0;   // v_threshold1: above this is a saccade
    double fixation_threshold_deg_s = 3.0;    // v_threshold2: below this is a fixation (dual mode)
    double min_fixation_s = 0.060;
    double min_saccade_s = 0.010;
    double max_merge_gap_s = 0.075;           // fixations this close may merge
    double merge_max_centroid_deg = 1.0;      // ...when their centroids agree this well
    double blink_min_s = 0.070;               // shorter closures are sensor flicker
    double blink_max_s = 0.500;               // longer closures are tracking gaps
    double openness_closed_threshold = 0.5;

    /// Classical single-threshold I-VT, no intermediate band.
    static DetectorParams single_threshold(double threshold_deg_s = 100.0) {
        DetectorParams p;
        p.mode = Mode::SingleThreshold;
        p.saccade_threshold_deg_s = threshold_deg_s;
        p.fixation_threshold_deg_s = threshold_deg_s;
        return p;
    }

    void validate() const {
        if (!(fixation_threshold_deg_s > 0.0) ||
            saccade_threshold_deg_s < fixation_threshold_deg_s)
            throw std::invalid_argument("need saccade_threshold >= fixation_threshold > 0");
        if (!(min_fixation_s > 0.0) || !(min_saccade_s > 0.0))
            throw std::invalid_argument("minimum event durations must be > 0");
        if (!(blink_min_s < blink_max_s))
            throw std::invalid_argument("need blink_min_s < blink_max_s");
        if (max_merge_gap_s < 0.0 || merge_max_centroid_deg < 0.0)
            throw std::invalid_argument("merge parameters must be >= 0");
    }
};

// ============================================================================
// Per-sample classification
// ============================================================================

enum class VelocityPhase { FixationPhase, SaccadePhase, Intermediate };

/// Dual mode: v > v1 is a saccade, v < v2 a fixation, the band in between is
/// Intermediate and continues whatever phase is current (hysteresis).
/// Single mode: v > threshold is a saccade, else a fixation.
inline VelocityPhase classify_velocity(double v, const DetectorParams& p) {
    if (p.mode == DetectorParams::Mode::SingleThreshold)
        return v > p.saccade_threshold_deg_s ? VelocityPhase::SaccadePhase
                                             : VelocityPhase::FixationPhase;
    if (v > p.saccade_threshold_deg_s) return VelocityPhase::SaccadePhase;
    if (v < p.fixation_threshold_deg_s) return VelocityPhase::FixationPhase;
    return VelocityPhase::Intermediate;
}

// ============================================================================
// Eye-closure tracking (blinks and tracking gaps)
// ============================================================================

/// A sample belongs to a closure interval when the lids read closed or the
/// tracker lost the eye. Such samples never feed gaze analysis.
inline bool is_closure_candidate(const GazeSample& s, double openness_closed_threshold) {
    if (!validate_sample(s).direction_usable()) return true;
    if (!s.validity.openness) return true;
    const auto open = s.mean_openness();
    return open && *open < openness_closed_threshold;
}

/// Maximal closure interval. `end` is the timestamp of the first recovered
/// sample, so the span covers [start, end).
struct ClosureSpan {
    Timestamp start;
    Timestamp end;
    std::int64_t samples = 0;  // closure-candidate samples observed
    double duration_s() const { return seconds_between(start, end); }
};

enum class ClosureVerdict { Flicker, Blink, TrackingGap };

inline ClosureVerdict classify_closure(double duration_s, const DetectorParams& p) {
    if (duration_s < p.blink_min_s) return ClosureVerdict::Flicker;
    if (duration_s <= p.blink_max_s) return ClosureVerdict::Blink;
    return ClosureVerdict::TrackingGap;
}

class ClosureTracker {
public:
    explicit ClosureTracker(double openness_closed_threshold)
        : threshold_(openness_closed_threshold) {}

    /// Returns the finished span when this sample ends a closure interval.
    std::optional<ClosureSpan> feed(const GazeSample& s) {
        const bool candidate = is_closure_candidate(s, threshold_);
        std::optional<ClosureSpan> done;
        if (candidate) {
            if (!open_) open_ = ClosureSpan{s.timestamp, s.timestamp, 0};
            open_->end = s.timestamp;
            ++open_->samples;
        } else if (open_) {
            open_->end = s.timestamp;  // recovery sample bounds the span
            done = *open_;
            open_.reset();
        }
        return done;
    }

    /// Ends the stream; a closure still open is bounded by its last sample.
    std::optional<ClosureSpan> flush() {
        auto done = open_;
        open_.reset();
        return done;
    }

    bool in_closure() const { return open_.has_value(); }
    std::optional<Timestamp> closure_start() const {
        return open_ ? std::optional<Timestamp>(open_->start) : std::nullopt;
    }

private:
    double threshold_;
    std::optional<ClosureSpan> open_;
};

/// Standalone blink detection over a raw sample stream: closures within
/// [blink_min_s, blink_max_s] are Blinks, longer ones are Gaps, shorter ones
/// are ignored as flicker.
class BlinkDetector {
public:
    explicit BlinkDetector(DetectorParams params)
        : params_(params), tracker_(params.openness_closed_threshold) {
        params_.validate();
    }

    std::optional<GazeEvent> feed(const GazeSample& s) {
        return map_span(tracker_.feed(s));
    }

    std::optional<GazeEvent> flush() { return map_span(tracker_.flush()); }

private:
    std::optional<GazeEvent> map_span(std::optional<ClosureSpan> span) {
        if (!span || span->end <= span->start) return std::nullopt;
        switch (classify_closure(span->duration_s(), params_)) {
            case ClosureVerdict::Flicker:
                return std::nullopt;
            case ClosureVerdict::Blink:
                return GazeEvent::make(EventKind::Blink, span->start, span->end,
                                       BlinkStats{span->duration_s()});
            case ClosureVerdict::TrackingGap:
                return GazeEvent::make(EventKind::Gap, span->start, span->end,
                                       GapStats{span->samples});
        }
        return std::nullopt;
    }

    DetectorParams params_;
    ClosureTracker tracker_;
};

inline std::vector<GazeEvent> detect_blinks(std::span<const GazeSample> samples,
                                            const DetectorParams& params) {
    BlinkDetector d(params);
    std::vector<GazeEvent> out;
    for (const auto& s : samples)
        if (auto e = d.feed(s)) out.push_back(std::move(*e));
    if (auto e = d.flush()) out.push_back(std::move(*e));
    return out;
}

// ============================================================================
// I-VT segmentation
// ============================================================================

/// Velocity-threshold identification over an annotated (and median-filtered)
/// stream. A sample's velocity describes the motion over the interval from
/// its predecessor, so events span [timestamp before the first classified
/// interval, timestamp of the last one]; adjacent events share boundaries.
///
/// Post rules: fixations shorter than min_fixation_s are absorbed into an
/// adjacent saccade or dropped; saccades shorter than min_saccade_s likewise
/// into an adjacent fixation; consecutive fixations separated by at most
/// max_merge_gap_s with centroids within merge_max_centroid_deg merge.
/// Events are emitted as soon as their fate is decided: a settled event is
/// released once its successor is confirmed past the successor's own
/// minimum duration.
class EventSegmenter {
public:
    explicit EventSegmenter(DetectorParams params) : params_(params) { params_.validate(); }

    std::vector<GazeEvent> feed(const VelocitySample& v) {
        std::vector<GazeEvent> out;
        if (v.first_of_run) {
            break_into(out);
            anchor_ = v.sample;
            prev_ = v.sample;
            return out;
        }
        if (!prev_) {  // defensive: stream started without a run marker
            anchor_ = v.sample;
            prev_ = v.sample;
            return out;
        }

        const VelocityPhase phase = classify_velocity(v.velocity_deg_per_s, params_);
        if (!current_) {
            if (phase == VelocityPhase::Intermediate) {
                // Leading intermediate region: buffer until a phase decides.
                if (!undecided_) undecided_ = Accum::open(EventKind::Fixation, anchor_->timestamp, *anchor_);
                undecided_->extend(v);
            } else {
                const EventKind kind = phase == VelocityPhase::SaccadePhase ? EventKind::Saccade
                                                                            : EventKind::Fixation;
                if (undecided_) {
                    current_ = *undecided_;
                    current_->kind = kind;
                    undecided_.reset();
                } else {
                    current_ = Accum::open(kind, anchor_->timestamp, *anchor_);
                }
                current_->extend(v);
            }
        } else {
            const EventKind kind = current_->kind;
            const bool continues =
                phase == VelocityPhase::Intermediate ||
                (phase == VelocityPhase::SaccadePhase) == (kind == EventKind::Saccade);
            if (continues) {
                current_->extend(v);
            } else {
                const EventKind next_kind =
                    kind == EventKind::Saccade ? EventKind::Fixation : EventKind::Saccade;
                close_current(next_kind, out);
                // The new event starts at the shared boundary sample.
                if (carry_) {
                    current_ = *carry_;
                    current_->kind = next_kind;
                    carry_.reset();
                    current_->note_boundary(*prev_);
                } else {
                    current_ = Accum::open(next_kind, prev_->timestamp, *prev_);
                }
                current_->extend(v);
            }
        }
        confirm_current(out);
        prev_ = v.sample;
        return out;
    }

    /// Ends the current contiguous run (gap, blink, end of stream): closes the
    /// open candidate and releases everything pending, in order.
    std::vector<GazeEvent> break_stream() {
        std::vector<GazeEvent> out;
        break_into(out);
        return out;
    }

    std::vector<GazeEvent> flush() { return break_stream(); }

    /// Earliest timestamp a not-yet-emitted event could start at; nullopt when
    /// nothing is pending.
    std::optional<Timestamp> frontier() const {
        std::optional<Timestamp> f;
        auto consider = [&](const std::optional<Accum>& a) {
            if (a && (!f || a->start < *f)) f = a->start;
        };
        consider(settled_);
        consider(current_);
        consider(undecided_);
        consider(carry_);
        return f;
    }

private:
    /// Accumulates one candidate event with enough state for stats, merging
    /// and absorption.
    struct Accum {
        EventKind kind = EventKind::Fixation;
        Timestamp start;
        Timestamp end;
        // fixation stats
        Vec3 dir_sum;
        Vec3 origin_sum;
        std::vector<Vec3> dirs;
        double pupil_sum = 0.0;
        std::int64_t pupil_n = 0;
        std::int64_t n = 0;
        // saccade stats
        double v_peak = 0.0;
        double v_sum = 0.0;
        std::int64_t v_n = 0;
        Vec3 first_dir;
        Vec3 last_dir;

        static Accum open(EventKind kind, Timestamp start, const GazeSample& boundary) {
            Accum a;
            a.kind = kind;
            a.start = start;
            a.end = start;
            a.first_dir = boundary.gaze_direction;
            a.last_dir = boundary.gaze_direction;
            a.add_sample(boundary);
            return a;
        }

        void add_sample(const GazeSample& s) {
            dir_sum = dir_sum + s.gaze_direction;
            origin_sum = origin_sum + s.gaze_origin_mm;
            dirs.push_back(s.gaze_direction);
            if (auto p = s.mean_pupil_mm()) {
                pupil_sum += *p;
                ++pupil_n;
            }
            ++n;
        }

        void extend(const VelocitySample& v) {
            end = v.sample.timestamp;
            add_sample(v.sample);
            last_dir = v.sample.gaze_direction;
            v_peak = std::max(v_peak, v.velocity_deg_per_s);
            v_sum += v.velocity_deg_per_s;
            ++v_n;
        }

        /// A carried-forward accumulator re-enters at a boundary sample that
        /// it already contains; only the direction bookkeeping moves.
        void note_boundary(const GazeSample& s) { last_dir = s.gaze_direction; }

        void absorb(const Accum& tail) {
            end = tail.end;
            dir_sum = dir_sum + tail.dir_sum;
            origin_sum = origin_sum + tail.origin_sum;
            dirs.insert(dirs.end(), tail.dirs.begin(), tail.dirs.end());
            pupil_sum += tail.pupil_sum;
            pupil_n += tail.pupil_n;
            n += tail.n;
            v_peak = std::max(v_peak, tail.v_peak);
            v_sum += tail.v_sum;
            v_n += tail.v_n;
            last_dir = tail.last_dir;
        }

        double duration_s() const { return seconds_between(start, end); }

        Vec3 centroid() const { return dir_sum.normalized(); }

        GazeEvent build() const {
            if (kind == EventKind::Saccade) {
                SaccadeStats st;
                st.peak_velocity_deg_s = v_peak;
                st.mean_velocity_deg_s = v_n > 0 ? v_sum / static_cast<double>(v_n) : 0.0;
                st.amplitude_deg = angle_between_deg(first_dir, last_dir);
                return GazeEvent::make(EventKind::Saccade, start, end, st);
            }
            FixationStats st;
            st.centroid_direction = centroid();
            st.centroid_origin_mm = n > 0 ? origin_sum * (1.0 / static_cast<double>(n)) : Vec3{};
            double sq = 0.0;
            for (const auto& d : dirs) {
                const double a = angle_between_deg(d, st.centroid_direction);
                sq += a * a;
            }
            st.dispersion_deg = dirs.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(dirs.size()));
            st.mean_pupil_mm = pupil_n > 0
                                   ? std::optional<double>(pupil_sum / static_cast<double>(pupil_n))
                                   : std::nullopt;
            st.sample_count = n;
            return GazeEvent::make(EventKind::Fixation, start, end, st);
        }
    };

    double min_duration(EventKind k) const {
        return k == EventKind::Saccade ? params_.min_saccade_s : params_.min_fixation_s;
    }

    bool mergeable_fixations(const Accum& a, const Accum& b) const {
        if (a.kind != EventKind::Fixation || b.kind != EventKind::Fixation) return false;
        if (seconds_between(a.end, b.start) > params_.max_merge_gap_s) return false;
        return angle_between_deg(a.centroid(), b.centroid()) < params_.merge_max_centroid_deg;
    }

    /// Once the open candidate outlives its own minimum duration it is real,
    /// which seals the fate of the settled predecessor: merge or emit.
    void confirm_current(std::vector<GazeEvent>& out) {
        if (!current_ || current_confirmed_) return;
        if (current_->duration_s() < min_duration(current_->kind)) return;
        current_confirmed_ = true;
        if (settled_) {
            if (mergeable_fixations(*settled_, *current_)) {
                settled_->absorb(*current_);
                current_ = *settled_;
            } else {
                out.push_back(settled_->build());
            }
            settled_.reset();
        }
    }

    /// Closes the open candidate; `next_kind` is what follows (or nullopt at a
    /// stream break). Applies the short-event absorption rules.
    void close_current(std::optional<EventKind> next_kind, std::vector<GazeEvent>& out) {
        if (!current_) return;
        Accum cand = *current_;
        current_.reset();
        const bool confirmed = current_confirmed_;
        current_confirmed_ = false;

        if (!confirmed && cand.duration_s() < min_duration(cand.kind)) {
            const EventKind neighbor =
                cand.kind == EventKind::Fixation ? EventKind::Saccade : EventKind::Fixation;
            if (next_kind && *next_kind == neighbor) {
                carry_ = cand;           // joins the successor event
            } else if (settled_ && settled_->kind == neighbor) {
                settled_->absorb(cand);  // stream break: extend the predecessor
            }
            // otherwise dropped
            return;
        }
        if (settled_) {
            // Only reachable when the candidate closed before its own
            // confirmation resolved the predecessor (short follow-up runs).
            if (mergeable_fixations(*settled_, cand)) {
                settled_->absorb(cand);
                return;
            }
            out.push_back(settled_->build());
        }
        settled_ = cand;
    }

    void break_into(std::vector<GazeEvent>& out) {
        close_current(std::nullopt, out);
        if (settled_) {
            out.push_back(settled_->build());
            settled_.reset();
        }
        undecided_.reset();
        carry_.reset();
        anchor_.reset();
        prev_.reset();
        current_confirmed_ = false;
    }

    DetectorParams params_;
    std::optional<GazeSample> anchor_;  // run anchor: first sample of the run
    std::optional<GazeSample> prev_;
    std::optional<Accum> undecided_;    // leading intermediate region
    std::optional<Accum> current_;
    std::optional<Accum> settled_;
    std::optional<Accum> carry_;
    bool current_confirmed_ = false;
};

/// Batch form over a finished stream.
inline std::vector<GazeEvent> segment_events(std::span<const VelocitySample> stream,
                                             const DetectorParams& params) {
    EventSegmenter seg(params);
    std::vector<GazeEvent> out;
    for (const auto& v : stream) {
        auto part = seg.feed(v);
        out.insert(out.end(), part.begin(), part.end());
    }
    auto tail = seg.flush();
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
}

}  // namespace gazeflow
