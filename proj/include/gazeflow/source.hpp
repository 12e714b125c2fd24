#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "gazeflow/raw_csv.hpp"
#include "gazeflow/types.hpp"

namespace gazeflow {

enum class Pacing { MaxSpeed, Realtime };

struct SourceDescriptor {
    std::string name;
    double nominal_rate_hz = 0.0;
};

/// Uniform pull contract for every sample producer. Yielded timestamps
/// strictly increase; violations are skipped and counted, never surfaced.
/// A source is consumed by exactly one reader.
class SampleSource {
public:
    virtual ~SampleSource() = default;

    /// Next sample, or nullopt at end of stream.
    virtual std::optional<GazeSample> next() = 0;

    virtual const SourceDescriptor& descriptor() const = 0;

    /// Inputs rejected so far (malformed rows, non-monotone timestamps, ...).
    virtual std::uint64_t skipped() const { return 0; }

    /// Ask the source to wind down early; next() returns nullopt soon after.
    /// Safe to call from another thread.
    virtual void request_stop() { stop_requested_.store(true, std::memory_order_relaxed); }

protected:
    bool stop_requested() const { return stop_requested_.load(std::memory_order_relaxed); }

    /// Sleeps so that sample timestamps track wall time, in short slices so a
    /// stop request is honored promptly.
    void pace(Timestamp ts) {
        using clock = std::chrono::steady_clock;
        if (!pace_epoch_) pace_epoch_ = clock::now() - std::chrono::microseconds(ts.micros);
        const auto due = *pace_epoch_ + std::chrono::microseconds(ts.micros);
        while (!stop_requested()) {
            const auto now = clock::now();
            if (now >= due) break;
            const auto remaining = due - now;
            std::this_thread::sleep_for(std::min<clock::duration>(remaining, std::chrono::milliseconds(20)));
        }
    }

private:
    std::atomic<bool> stop_requested_{false};
    std::optional<std::chrono::steady_clock::time_point> pace_epoch_;
};

/// In-memory source over a prebuilt sample vector. The synthetic generator
/// and several tests hand streams around this way.
class VectorSource : public SampleSource {
public:
    VectorSource(std::vector<GazeSample> samples, SourceDescriptor desc,
                 Pacing pacing = Pacing::MaxSpeed)
        : samples_(std::move(samples)), desc_(std::move(desc)), pacing_(pacing) {}

    std::optional<GazeSample> next() override {
        while (index_ < samples_.size() && !stop_requested()) {
            const GazeSample& s = samples_[index_++];
            if (last_ts_ && s.timestamp <= *last_ts_) {
                ++skipped_;
                continue;
            }
            if (pacing_ == Pacing::Realtime) pace(s.timestamp);
            if (stop_requested()) return std::nullopt;
            last_ts_ = s.timestamp;
            return s;
        }
        return std::nullopt;
    }

    const SourceDescriptor& descriptor() const override { return desc_; }
    std::uint64_t skipped() const override { return skipped_; }

private:
    std::vector<GazeSample> samples_;
    SourceDescriptor desc_;
    Pacing pacing_;
    std::size_t index_ = 0;
    std::optional<Timestamp> last_ts_;
    std::uint64_t skipped_ = 0;
};

/// An input line the replay reader could not use.
struct ParseIssue {
    std::uint64_t line = 0;  // 1-based, header included
    std::string message;
};

/// Replays a raw CSV recording. Malformed rows are skipped and counted with
/// their line number; realtime pacing sleeps to match the recorded timestamp
/// deltas. Identical files yield identical sample sequences.
class ReplaySource : public SampleSource {
public:
    ReplaySource(const std::string& path, Pacing pacing)
        : pacing_(pacing), in_(path) {
        if (!in_) throw std::runtime_error("cannot open sample file: " + path);
        desc_.name = "replay:" + path;
        std::string header;
        if (std::getline(in_, header)) {
            ++line_no_;
            if (!header.empty() && header.back() == '\r') header.pop_back();
            if (header != raw_csv::kHeader) {
                issues_.push_back({line_no_, "unexpected header"});
            }
        }
    }

    std::optional<GazeSample> next() override {
        std::string line;
        while (!stop_requested() && std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            auto s = raw_csv::parse_row(line);
            if (!s) {
                note_issue("malformed row");
                continue;
            }
            if (last_ts_ && s->timestamp <= *last_ts_) {
                note_issue("non-monotone timestamp");
                continue;
            }
            if (pacing_ == Pacing::Realtime) pace(s->timestamp);
            if (stop_requested()) return std::nullopt;
            last_ts_ = s->timestamp;
            return s;
        }
        return std::nullopt;
    }

    const SourceDescriptor& descriptor() const override { return desc_; }
    std::uint64_t skipped() const override { return issues_.size() + overflow_issues_; }
    const std::vector<ParseIssue>& issues() const { return issues_; }

private:
    void note_issue(const char* what) {
        if (issues_.size() < kMaxRecordedIssues) issues_.push_back({line_no_, what});
        else ++overflow_issues_;  // still counted via skipped()
    }

    static constexpr std::size_t kMaxRecordedIssues = 1024;

    Pacing pacing_;
    std::ifstream in_;
    SourceDescriptor desc_{"replay", 0.0};
    std::uint64_t line_no_ = 0;
    std::optional<Timestamp> last_ts_;
    std::vector<ParseIssue> issues_;
    std::uint64_t overflow_issues_ = 0;
};

inline std::unique_ptr<SampleSource> replay_file(const std::string& path, Pacing pacing) {
    return std::make_unique<ReplaySource>(path, pacing);
}

}  // namespace gazeflow
