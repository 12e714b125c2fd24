#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>

#include "gazeflow/dda.hpp"
#include "gazeflow/metrics.hpp"
#include "gazeflow/raw_csv.hpp"
#include "gazeflow/types.hpp"
#include "gazeflow/wire.hpp"

namespace gazeflow {

struct RecorderConfig {
    std::string output_dir;
    std::size_t raw_buffer_capacity = 65536;  // queued records before drop-oldest kicks in
    double flush_interval_s = 1.0;
    bool record_raw = true;     // raw.csv can be disabled when replaying an existing file

    void validate() const {
        if (raw_buffer_capacity == 0) throw std::invalid_argument("raw_buffer_capacity must be > 0");
        if (!(flush_interval_s > 0.0)) throw std::invalid_argument("flush_interval_s must be > 0");
    }
};

struct RecorderStats {
    std::uint64_t samples_written = 0;
    std::uint64_t events_written = 0;
    std::uint64_t snapshots_written = 0;
    std::uint64_t decisions_written = 0;
    std::uint64_t samples_dropped = 0;   // shed under overflow, oldest first
    std::uint64_t records_dropped_other = 0;
    std::uint64_t flushes = 0;
    std::string error;                   // the writer's terminal failure, if any
};

/// Buffered persistence on a dedicated writer thread. Producers enqueue in
/// O(1) and never touch the disk; when the queue is full the oldest record is
/// dropped and counted. Writes are line-atomic, so a file is parseable up to
/// the last completed flush even after a crash.
///
/// Files under output_dir: raw.csv, events.jsonl, metrics.jsonl,
/// decisions.jsonl.
class Recorder {
public:
    explicit Recorder(RecorderConfig config) : config_(std::move(config)) {
        config_.validate();
        std::filesystem::create_directories(config_.output_dir);
        // Open everything up front: an empty session still leaves valid files,
        // and open failures surface here instead of inside the writer.
        if (config_.record_raw) open_file(raw_, "raw.csv", std::string(raw_csv::kHeader));
        open_file(events_, "events.jsonl");
        open_file(metrics_, "metrics.jsonl");
        open_file(decisions_, "decisions.jsonl");
        writer_ = std::thread([this] { writer_loop(); });
    }

    ~Recorder() { close(); }

    Recorder(const Recorder&) = delete;
    Recorder& operator=(const Recorder&) = delete;

    /// Acks are cheap booleans: false means the datum was not accepted
    /// (recorder already closed, or the writer died on a disk error).
    bool record_raw(const GazeSample& s) { return enqueue(Record{s}); }
    bool record_event(const GazeEvent& e) { return enqueue(Record{e}); }
    bool record_snapshot(const MetricsSnapshot& s) { return enqueue(Record{s}); }
    bool record_decision(const DifficultyDecision& d) { return enqueue(Record{d}); }

    /// Drains the queue, joins the writer and returns final stats.
    /// Idempotent: a second close returns the same stats.
    RecorderStats close() {
        {
            std::lock_guard lock(mutex_);
            if (closed_) return stats_;
            closed_ = true;
        }
        wake_writer_.notify_all();
        if (writer_.joinable()) writer_.join();
        std::lock_guard lock(mutex_);
        return stats_;
    }

    RecorderStats stats() const {
        std::lock_guard lock(mutex_);
        return stats_;
    }

    /// Test hook: while paused the writer drains nothing, so overflow and
    /// non-blocking-enqueue behavior can be exercised deterministically.
    void set_writer_paused(bool paused) {
        {
            std::lock_guard lock(mutex_);
            paused_ = paused;
        }
        wake_writer_.notify_all();
    }

private:
    using Record = std::variant<GazeSample, GazeEvent, MetricsSnapshot, DifficultyDecision>;

    bool enqueue(Record r) {
        std::lock_guard lock(mutex_);
        if (closed_ || !stats_.error.empty()) {
            count_drop(r);
            return false;
        }
        if (queue_.size() >= config_.raw_buffer_capacity) {
            count_drop(queue_.front());
            queue_.pop_front();
        }
        queue_.push_back(std::move(r));
        if (queue_.size() >= config_.raw_buffer_capacity / 2) wake_writer_.notify_one();
        return true;
    }

    void count_drop(const Record& r) {
        if (std::holds_alternative<GazeSample>(r)) ++stats_.samples_dropped;
        else ++stats_.records_dropped_other;
    }

    void writer_loop() {
        const auto flush_interval = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::duration<double>(config_.flush_interval_s));
        std::deque<Record> batch;
        bool done = false;
        while (!done) {
            {
                std::unique_lock lock(mutex_);
                wake_writer_.wait_for(lock, flush_interval, [&] {
                    return closed_ ||
                           (!paused_ && queue_.size() >= config_.raw_buffer_capacity / 2);
                });
                if (paused_ && !closed_) continue;
                batch.swap(queue_);
                done = closed_;
            }
            if (!batch.empty()) {
                if (!write_batch(batch)) {
                    // Writer terminates on a disk failure; whatever is still
                    // queued counts as dropped so the conservation invariant
                    // holds at close.
                    std::lock_guard lock(mutex_);
                    for (const auto& r : queue_) count_drop(r);
                    queue_.clear();
                    done = true;
                }
                batch.clear();
            }
        }
        close_files();
    }

    bool write_batch(const std::deque<Record>& batch) {
        RecorderStats delta;
        std::size_t i = 0;
        bool ok = true;
        try {
            for (; i < batch.size(); ++i) {
                const Record& r = batch[i];
                if (const auto* s = std::get_if<GazeSample>(&r)) {
                    if (raw_) *raw_ << raw_csv::format_row(*s) << '\n';
                    ++delta.samples_written;
                } else if (const auto* e = std::get_if<GazeEvent>(&r)) {
                    *events_ << wire::event_to_json(*e).dump() << '\n';
                    ++delta.events_written;
                } else if (const auto* m = std::get_if<MetricsSnapshot>(&r)) {
                    *metrics_ << wire::snapshot_to_json(*m).dump() << '\n';
                    ++delta.snapshots_written;
                } else if (const auto* d = std::get_if<DifficultyDecision>(&r)) {
                    *decisions_ << wire::decision_to_json(*d).dump() << '\n';
                    ++delta.decisions_written;
                }
            }
            flush_files();
            ++delta.flushes;
        } catch (const std::exception& ex) {
            ok = false;
            std::lock_guard lock(mutex_);
            if (stats_.error.empty()) stats_.error = ex.what();
            for (std::size_t k = i; k < batch.size(); ++k) count_drop(batch[k]);
        }
        std::lock_guard lock(mutex_);
        stats_.samples_written += delta.samples_written;
        stats_.events_written += delta.events_written;
        stats_.snapshots_written += delta.snapshots_written;
        stats_.decisions_written += delta.decisions_written;
        stats_.flushes += delta.flushes;
        return ok;
    }

    void open_file(std::optional<std::ofstream>& f, const char* name,
                   const std::string& header = {}) {
        const auto path = std::filesystem::path(config_.output_dir) / name;
        f.emplace(path);
        if (!*f) throw std::runtime_error("cannot open " + path.string());
        if (!header.empty()) *f << header << '\n';
    }

    void flush_files() {
        for (auto* f : {&raw_, &events_, &metrics_, &decisions_}) {
            if (*f) {
                (*f)->flush();
                if (!**f) throw std::runtime_error("write failure in " + config_.output_dir);
            }
        }
    }

    void close_files() {
        for (auto* f : {&raw_, &events_, &metrics_, &decisions_}) f->reset();
    }

    RecorderConfig config_;
    mutable std::mutex mutex_;
    std::condition_variable wake_writer_;
    std::deque<Record> queue_;
    RecorderStats stats_;
    bool closed_ = false;
    bool paused_ = false;
    std::thread writer_;
    std::optional<std::ofstream> raw_;
    std::optional<std::ofstream> events_;
    std::optional<std::ofstream> metrics_;
    std::optional<std::ofstream> decisions_;
};

}  // namespace gazeflow
