#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "gazeflow/events.hpp"
#include "gazeflow/metrics.hpp"
#include "gazeflow/preprocess.hpp"
#include "gazeflow/types.hpp"

namespace gazeflow {

// ============================================================================
// Inter-stage items
// ============================================================================

/// Velocity adjacency break, decided during preprocessing. When a closure
/// interval (blink candidate) caused the hole its measurements ride along so
/// the detect stage can classify it; otherwise the hole itself becomes a Gap.
struct StreamBreak {
    Timestamp hole_start;  // last usable sample before the hole
    Timestamp hole_end;    // first usable sample after it
    std::int64_t samples_lost = 0;
    std::optional<ClosureSpan> closure;
};

/// preprocess -> detect
using PreItem = std::variant<VelocitySample, StreamBreak, PupilTick>;

/// Tick forwarded to the metrics stage together with the detector's event
/// watermark: no event ending at or before `watermark` is still in flight.
struct MetricsTick {
    PupilTick tick;
    Timestamp watermark;
};

/// detect -> metrics
using DetectItem = std::variant<GazeEvent, MetricsTick>;

// ============================================================================
// Preprocess stage core
// ============================================================================

/// Validity filtering, closure tracking, velocity annotation and median
/// filtering, fused into the single transform the preprocess stage runs.
/// Closure-candidate samples (closed lids, lost tracking) never reach the
/// gaze path; confirmed closures and over-long holes break adjacency, which
/// keeps fixations from spanning blinks.
class Preprocessor {
public:
    Preprocessor(PreprocessParams pre, DetectorParams det)
        : detector_params_(det),
          annotator_(pre),
          filter_(pre.median_window),
          closure_(det.openness_closed_threshold) {
        detector_params_.validate();
    }

    struct Counts {
        std::uint64_t samples_in = 0;
        std::uint64_t samples_usable = 0;
        std::uint64_t samples_unusable = 0;
    };

    std::vector<PreItem> feed(const GazeSample& s) {
        std::vector<PreItem> out;
        ++counts_.samples_in;

        const auto span = closure_.feed(s);
        const bool usable = validate_sample(s).direction_usable() &&
                            !is_closure_candidate(s, detector_params_.openness_closed_threshold);
        if (usable) {
            if (span && classify_closure(span->duration_s(), detector_params_) !=
                            ClosureVerdict::Flicker) {
                // Confirmed blink or tracking gap: break here, the closure is
                // the explanation.
                annotator_.break_adjacency();
                emit_filtered(out, filter_.flush());
                out.push_back(PreItem{StreamBreak{
                    last_usable_ts_.value_or(span->start), s.timestamp,
                    annotator_.take_dropped(), span}});
            }
            auto res = annotator_.feed(s);
            if (res.gap) {
                // Unexplained hole longer than max_gap_s.
                emit_filtered(out, filter_.flush());
                out.push_back(PreItem{StreamBreak{res.gap->start, res.gap->end,
                                                  res.gap->samples_lost, std::nullopt}});
            }
            emit_filtered(out, filter_.feed(res.sample));
            last_usable_ts_ = s.timestamp;
            ++counts_.samples_usable;
        } else {
            annotator_.note_dropped();
            ++counts_.samples_unusable;
        }

        out.push_back(PreItem{PupilTick{
            s.timestamp, s.validity.pupil ? s.mean_pupil_mm() : std::nullopt}});
        return out;
    }

    std::vector<PreItem> flush() {
        std::vector<PreItem> out;
        emit_filtered(out, filter_.flush());
        if (auto span = closure_.flush()) {
            // Stream ended mid-closure; bound it by its last sample.
            if (span->end > span->start &&
                classify_closure(span->duration_s(), detector_params_) != ClosureVerdict::Flicker) {
                out.push_back(PreItem{StreamBreak{last_usable_ts_.value_or(span->start),
                                                  span->end, annotator_.take_dropped(), span}});
            }
        }
        return out;
    }

    const Counts& counts() const { return counts_; }

private:
    static void emit_filtered(std::vector<PreItem>& out, std::vector<VelocitySample> part) {
        for (auto& v : part) out.push_back(PreItem{std::move(v)});
    }

    DetectorParams detector_params_;
    VelocityAnnotator annotator_;
    MedianFilter filter_;
    ClosureTracker closure_;
    Counts counts_;
    std::optional<Timestamp> last_usable_ts_;
};

// ============================================================================
// Detect stage core
// ============================================================================

/// Runs I-VT segmentation, maps closure measurements to Blink/Gap events, and
/// stamps pupil ticks with the event watermark the metrics stage needs for
/// exact streaming snapshots. Output events are time-ordered and
/// non-overlapping.
class EventDetector {
public:
    explicit EventDetector(DetectorParams params) : params_(params), segmenter_(params) {}

    std::vector<DetectItem> feed(const PreItem& item) {
        std::vector<DetectItem> out;
        if (const auto* v = std::get_if<VelocitySample>(&item)) {
            for (auto& e : segmenter_.feed(*v)) push_event(out, std::move(e));
            bump_resolved(v->sample.timestamp);
        } else if (const auto* br = std::get_if<StreamBreak>(&item)) {
            for (auto& e : segmenter_.break_stream()) push_event(out, std::move(e));
            if (auto ev = break_event(*br)) push_event(out, std::move(*ev));
            bump_resolved(br->hole_end);
        } else if (const auto* t = std::get_if<PupilTick>(&item)) {
            out.push_back(DetectItem{MetricsTick{*t, watermark()}});
        }
        return out;
    }

    std::vector<DetectItem> flush() {
        std::vector<DetectItem> out;
        for (auto& e : segmenter_.flush()) push_event(out, std::move(e));
        return out;
    }

    /// Events ending at or before this are all emitted already.
    Timestamp watermark() const {
        Timestamp w = resolved_;
        if (auto f = segmenter_.frontier()) w = std::min(w, *f);
        return w;
    }

    std::uint64_t events_emitted() const { return events_emitted_; }

private:
    void push_event(std::vector<DetectItem>& out, GazeEvent e) {
        ++events_emitted_;
        out.push_back(DetectItem{std::move(e)});
    }

    std::optional<GazeEvent> break_event(const StreamBreak& br) {
        if (br.closure) {
            switch (classify_closure(br.closure->duration_s(), params_)) {
                case ClosureVerdict::Blink:
                    return GazeEvent::make(EventKind::Blink, br.closure->start, br.closure->end,
                                           BlinkStats{br.closure->duration_s()});
                case ClosureVerdict::TrackingGap:
                    return GazeEvent::make(EventKind::Gap, br.closure->start, br.closure->end,
                                           GapStats{br.closure->samples});
                case ClosureVerdict::Flicker:
                    break;
            }
            return std::nullopt;
        }
        if (br.hole_end <= br.hole_start) return std::nullopt;
        return GazeEvent::make(EventKind::Gap, br.hole_start, br.hole_end,
                               GapStats{br.samples_lost});
    }

    void bump_resolved(Timestamp ts) { resolved_ = std::max(resolved_, ts); }

    DetectorParams params_;
    EventSegmenter segmenter_;
    Timestamp resolved_{0};
    std::uint64_t events_emitted_ = 0;
};

// ============================================================================
// Batch composition
// ============================================================================

struct DetectionResult {
    std::vector<GazeEvent> events;
    std::vector<PupilTick> ticks;
    Preprocessor::Counts counts;
};

/// Single-threaded end-to-end detection over a complete sample stream; the
/// exact transform the pipeline runs, without the queues.
inline DetectionResult detect_events(std::span<const GazeSample> samples,
                                     const PreprocessParams& pre, const DetectorParams& det) {
    Preprocessor preprocessor(pre, det);
    EventDetector detector(det);
    DetectionResult result;
    auto sink = [&](std::vector<DetectItem> items) {
        for (auto& item : items) {
            if (auto* e = std::get_if<GazeEvent>(&item)) result.events.push_back(std::move(*e));
            else result.ticks.push_back(std::get<MetricsTick>(item).tick);
        }
    };
    for (const auto& s : samples)
        for (const auto& pre_item : preprocessor.feed(s)) sink(detector.feed(pre_item));
    for (const auto& pre_item : preprocessor.flush()) sink(detector.feed(pre_item));
    sink(detector.flush());
    result.counts = preprocessor.counts();
    return result;
}

}  // namespace gazeflow
