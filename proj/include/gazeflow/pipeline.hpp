#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "gazeflow/dda.hpp"
#include "gazeflow/detector.hpp"
#include "gazeflow/metrics.hpp"
#include "gazeflow/queue.hpp"
#include "gazeflow/recorder.hpp"
#include "gazeflow/source.hpp"

namespace gazeflow {

/// Live consumers of pipeline output (the TCP server implements this).
/// Implementations must never block: a slow downstream is their problem.
class StreamSink {
public:
    virtual ~StreamSink() = default;
    virtual void publish_sample(const GazeSample&) {}
    virtual void publish_event(const GazeEvent&) {}
    virtual void publish_snapshot(const MetricsSnapshot&) {}
    virtual void publish_decision(const DifficultyDecision&) {}
};

struct PipelineSinks {
    Recorder* recorder = nullptr;
    StreamSink* stream = nullptr;
    std::function<void(const GazeEvent&)> on_event;
    std::function<void(const MetricsSnapshot&)> on_snapshot;
    std::function<void(const DifficultyDecision&)> on_decision;
};

struct PipelineConfig {
    PreprocessParams preprocess;
    DetectorParams detector;
    MetricsConfig metrics;
    DdaPolicy dda;
    RecorderConfig recorder;
    std::vector<std::string> task_aois;  // AOIs the DDA watches; empty = all metric AOIs
    int initial_difficulty = 1;
    double pupil_baseline_first_s = 5.0;
    std::size_t queue_capacity = 1024;
    bool collect_latency = false;        // meaningful for realtime-paced sources

    void validate() const {
        preprocess.validate();
        detector.validate();
        metrics.validate();
        dda.validate();
        if (queue_capacity == 0) throw std::invalid_argument("queue_capacity must be > 0");
        if (!(pupil_baseline_first_s > 0.0))
            throw std::invalid_argument("pupil_baseline_first_s must be > 0");
    }
};

struct LatencySummary {
    std::uint64_t count = 0;
    double mean_ms = 0.0;
    double p50_ms = 0.0;
    double p95_ms = 0.0;
    double p99_ms = 0.0;
    double max_ms = 0.0;

    static LatencySummary from(std::vector<double> ms) {
        LatencySummary s;
        if (ms.empty()) return s;
        std::sort(ms.begin(), ms.end());
        s.count = ms.size();
        double sum = 0.0;
        for (double v : ms) sum += v;
        s.mean_ms = sum / static_cast<double>(ms.size());
        auto pct = [&](double p) {
            const auto idx = static_cast<std::size_t>(p * static_cast<double>(ms.size() - 1));
            return ms[idx];
        };
        s.p50_ms = pct(0.50);
        s.p95_ms = pct(0.95);
        s.p99_ms = pct(0.99);
        s.max_ms = ms.back();
        return s;
    }
};

struct PipelineStats {
    std::uint64_t samples_acquired = 0;
    std::uint64_t source_skipped = 0;
    std::uint64_t samples_usable = 0;
    std::uint64_t samples_unusable = 0;
    std::uint64_t events_emitted = 0;
    std::uint64_t snapshots_emitted = 0;
    std::uint64_t decisions_emitted = 0;
    std::size_t queue_max_raw = 0;
    std::size_t queue_max_pre = 0;
    std::size_t queue_max_detect = 0;
    std::size_t queue_max_sink = 0;
    LatencySummary fixation_latency;  // event end (stream time) -> emission (wall time)
    double wall_time_s = 0.0;
};

namespace detail {

using SinkItem = std::variant<GazeEvent, MetricsSnapshot, DifficultyDecision>;

/// Metrics + DDA, fused: both are light. Buffers the stream head until the
/// pupil baseline interval has passed, then replays it into the engine.
class MetricsDdaStage {
public:
    MetricsDdaStage(const PipelineConfig& config)
        : config_(config),
          estimator_(config.dda, config.metrics.step_s,
                     config.task_aois.empty() ? aoi_ids(config.metrics) : config.task_aois),
          controller_(config.dda, config.initial_difficulty) {}

    std::vector<SinkItem> feed(const DetectItem& item) {
        std::vector<SinkItem> out;
        if (const auto* ev = std::get_if<GazeEvent>(&item)) {
            out.push_back(SinkItem{*ev});  // events pass through to the sinks
            if (engine_) {
                for (auto& snap : engine_->on_event(*ev)) push_snapshot(out, snap);
            } else {
                held_events_.push_back(*ev);
            }
            return out;
        }
        const auto& mt = std::get<MetricsTick>(item);
        if (!engine_) {
            if (mt.tick.ts.seconds() < config_.pupil_baseline_first_s) {
                held_ticks_.push_back(mt);
                if (mt.tick.pupil_mm) baseline_values_.push_back(*mt.tick.pupil_mm);
                return out;
            }
            start_engine(out);
        }
        for (auto& snap : engine_->on_tick(mt.tick, mt.watermark)) push_snapshot(out, snap);
        return out;
    }

    std::vector<SinkItem> flush() {
        std::vector<SinkItem> out;
        if (!engine_) start_engine(out);
        for (auto& snap : engine_->flush()) push_snapshot(out, snap);
        return out;
    }

private:
    static std::vector<std::string> aoi_ids(const MetricsConfig& m) {
        std::vector<std::string> ids;
        for (const auto& a : m.aois) ids.push_back(a.id);
        return ids;
    }

    void start_engine(std::vector<SinkItem>& out) {
        PupilBaseline baseline{0.0, Timestamp{0},
                               Timestamp::from_seconds(config_.pupil_baseline_first_s)};
        if (!baseline_values_.empty()) {
            std::sort(baseline_values_.begin(), baseline_values_.end());
            const std::size_t n = baseline_values_.size();
            baseline.baseline_mm = n % 2 == 1
                                       ? baseline_values_[n / 2]
                                       : (baseline_values_[n / 2 - 1] + baseline_values_[n / 2]) / 2.0;
        }
        engine_.emplace(config_.metrics, baseline);
        for (const auto& ev : held_events_)
            for (auto& snap : engine_->on_event(ev)) push_snapshot(out, snap);
        for (const auto& mt : held_ticks_)
            for (auto& snap : engine_->on_tick(mt.tick, mt.watermark)) push_snapshot(out, snap);
        held_events_.clear();
        held_ticks_.clear();
        baseline_values_.clear();
    }

    void push_snapshot(std::vector<SinkItem>& out, const MetricsSnapshot& snap) {
        out.push_back(SinkItem{snap});
        const FlowState state = estimator_.assess(snap);
        out.push_back(SinkItem{controller_.decide(state)});
    }

    PipelineConfig config_;
    std::optional<MetricsEngine> engine_;
    EngagementEstimator estimator_;
    DifficultyController controller_;
    std::vector<GazeEvent> held_events_;
    std::vector<MetricsTick> held_ticks_;
    std::vector<double> baseline_values_;
};

}  // namespace detail

/// Owns the stage threads of one running session. Stages communicate only
/// through bounded queues; stop() halts acquisition and drains everything
/// in flight before the threads exit.
class PipelineHandle {
public:
    PipelineHandle(std::unique_ptr<SampleSource> source, PipelineConfig config,
                   PipelineSinks sinks)
        : source_(std::move(source)),
          config_(std::move(config)),
          sinks_(std::move(sinks)),
          q_raw_(config_.queue_capacity),
          q_pre_(config_.queue_capacity),
          q_detect_(config_.queue_capacity),
          q_sink_(config_.queue_capacity) {
        config_.validate();
        start_ = std::chrono::steady_clock::now();
        threads_.emplace_back([this] { guard("acquisition", [this] { acquisition(); }); });
        threads_.emplace_back([this] { guard("preprocess", [this] { preprocess(); }); });
        threads_.emplace_back([this] { guard("detect", [this] { detect(); }); });
        threads_.emplace_back([this] { guard("metrics", [this] { metrics(); }); });
        threads_.emplace_back([this] { guard("sink", [this] { sink(); }); });
    }

    ~PipelineHandle() {
        stop();
        try {
            join();
        } catch (...) {
            // join() already surfaced the failure to an earlier caller, or
            // there is nobody left to care during unwinding.
        }
    }

    PipelineHandle(const PipelineHandle&) = delete;
    PipelineHandle& operator=(const PipelineHandle&) = delete;

    /// Asks the source to stop; everything already acquired still flows
    /// through every stage before join() returns.
    void stop() {
        stop_requested_.store(true, std::memory_order_relaxed);
        source_->request_stop();
    }

    /// Waits for completion and returns the run's stats. Rethrows the first
    /// stage failure, if any.
    PipelineStats join() {
        for (auto& t : threads_)
            if (t.joinable()) t.join();
        {
            std::lock_guard lock(mutex_);
            if (error_) {
                auto e = error_;
                error_ = nullptr;
                std::rethrow_exception(e);
            }
        }
        if (!stats_final_) {
            stats_.wall_time_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
            stats_.queue_max_raw = q_raw_.max_depth();
            stats_.queue_max_pre = q_pre_.max_depth();
            stats_.queue_max_detect = q_detect_.max_depth();
            stats_.queue_max_sink = q_sink_.max_depth();
            stats_.source_skipped = source_->skipped();
            stats_.fixation_latency = LatencySummary::from(std::move(latencies_ms_));
            stats_final_ = true;
        }
        return stats_;
    }

private:
    template <typename F>
    void guard(const char* stage, F&& body) {
        try {
            body();
        } catch (...) {
            {
                std::lock_guard lock(mutex_);
                if (!error_) error_ = std::current_exception();
            }
            (void)stage;
            // Wake every stage so nobody stays blocked on a queue.
            stop_requested_.store(true, std::memory_order_relaxed);
            source_->request_stop();
            q_raw_.close();
            q_pre_.close();
            q_detect_.close();
            q_sink_.close();
        }
    }

    void acquisition() {
        while (!stop_requested_.load(std::memory_order_relaxed)) {
            auto s = source_->next();
            if (!s) break;
            ++stats_.samples_acquired;
            if (sinks_.recorder) sinks_.recorder->record_raw(*s);
            if (sinks_.stream) sinks_.stream->publish_sample(*s);
            if (!q_raw_.push(*s)) break;
        }
        q_raw_.close();
    }

    void preprocess() {
        Preprocessor pre(config_.preprocess, config_.detector);
        while (auto s = q_raw_.pop()) {
            for (auto& item : pre.feed(*s))
                if (!q_pre_.push(std::move(item))) break;
        }
        for (auto& item : pre.flush()) q_pre_.push(std::move(item));
        stats_.samples_usable = pre.counts().samples_usable;
        stats_.samples_unusable = pre.counts().samples_unusable;
        q_pre_.close();
    }

    void detect() {
        EventDetector det(config_.detector);
        auto forward = [&](std::vector<DetectItem> items) {
            for (auto& item : items) {
                if (config_.collect_latency) note_latency(item);
                if (!q_detect_.push(std::move(item))) return;
            }
        };
        while (auto item = q_pre_.pop()) forward(det.feed(*item));
        forward(det.flush());
        stats_.events_emitted = det.events_emitted();
        q_detect_.close();
    }

    void metrics() {
        detail::MetricsDdaStage stage(config_);
        auto forward = [&](std::vector<detail::SinkItem> items) {
            for (auto& item : items) {
                if (std::holds_alternative<MetricsSnapshot>(item)) ++stats_.snapshots_emitted;
                if (std::holds_alternative<DifficultyDecision>(item)) ++stats_.decisions_emitted;
                if (!q_sink_.push(std::move(item))) return;
            }
        };
        while (auto item = q_detect_.pop()) forward(stage.feed(*item));
        forward(stage.flush());
        q_sink_.close();
    }

    void sink() {
        while (auto item = q_sink_.pop()) {
            if (const auto* ev = std::get_if<GazeEvent>(&*item)) {
                if (sinks_.recorder) sinks_.recorder->record_event(*ev);
                if (sinks_.stream) sinks_.stream->publish_event(*ev);
                if (sinks_.on_event) sinks_.on_event(*ev);
            } else if (const auto* snap = std::get_if<MetricsSnapshot>(&*item)) {
                if (sinks_.recorder) sinks_.recorder->record_snapshot(*snap);
                if (sinks_.stream) sinks_.stream->publish_snapshot(*snap);
                if (sinks_.on_snapshot) sinks_.on_snapshot(*snap);
            } else if (const auto* d = std::get_if<DifficultyDecision>(&*item)) {
                if (sinks_.recorder) sinks_.recorder->record_decision(*d);
                if (sinks_.stream) sinks_.stream->publish_decision(*d);
                if (sinks_.on_decision) sinks_.on_decision(*d);
            }
        }
    }

    void note_latency(const DetectItem& item) {
        const auto* ev = std::get_if<GazeEvent>(&item);
        if (!ev || ev->kind != EventKind::Fixation) return;
        const double elapsed_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        const double lat_ms = (elapsed_s - ev->end.seconds()) * 1e3;
        std::lock_guard lock(mutex_);
        latencies_ms_.push_back(lat_ms);
    }

    std::unique_ptr<SampleSource> source_;
    PipelineConfig config_;
    PipelineSinks sinks_;
    BoundedQueue<GazeSample> q_raw_;
    BoundedQueue<PreItem> q_pre_;
    BoundedQueue<DetectItem> q_detect_;
    BoundedQueue<detail::SinkItem> q_sink_;
    std::vector<std::thread> threads_;
    std::atomic<bool> stop_requested_{false};
    std::mutex mutex_;
    std::exception_ptr error_;
    std::vector<double> latencies_ms_;
    PipelineStats stats_;
    bool stats_final_ = false;
    std::chrono::steady_clock::time_point start_;
};

/// Starts all stages on their own threads and hands back the session handle.
inline std::unique_ptr<PipelineHandle> run_pipeline(std::unique_ptr<SampleSource> source,
                                                    PipelineConfig config, PipelineSinks sinks) {
    return std::make_unique<PipelineHandle>(std::move(source), std::move(config),
                                            std::move(sinks));
}

}  // namespace gazeflow
