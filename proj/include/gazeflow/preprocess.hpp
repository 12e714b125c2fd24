#pragma once

#include <algorithm>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "gazeflow/types.hpp"

namespace gazeflow {

struct PreprocessParams {
    int median_window = 3;      // odd, >= 1
    double max_gap_s = 0.075;   // holes longer than this break velocity adjacency

    void validate() const {
        if (median_window < 1 || median_window % 2 == 0)
            throw std::invalid_argument("median_window must be odd and >= 1");
        if (!(max_gap_s > 0.0)) throw std::invalid_argument("max_gap_s must be > 0");
    }
};

/// Angular velocity between two successive unit gaze directions, deg/s.
/// theta = arccos(p1 . p2) with the dot product clamped into [-1, 1].
inline double angular_velocity(const Vec3& p1, const Vec3& p2, double dt_s) {
    if (!(dt_s > 0.0)) throw std::invalid_argument("dt_s must be > 0");
    if (!is_unit(p1) || !is_unit(p2)) throw std::invalid_argument("gaze directions must be unit vectors");
    return angle_between_deg(p1, p2) / dt_s;
}

/// Marks a hole in the valid-sample stream that broke velocity adjacency.
/// start/end are the timestamps of the samples on either side of the hole.
struct GapMarker {
    Timestamp start;
    Timestamp end;
    std::int64_t samples_lost = 0;
};

/// Streaming velocity annotation. Feed only direction-usable samples; the
/// caller reports dropped ones so holes can carry an honest loss count.
/// The first sample of the stream, and the first after any break, carries
/// velocity 0 and theta 0.
class VelocityAnnotator {
public:
    explicit VelocityAnnotator(PreprocessParams params) : params_(params) {
        params_.validate();
    }

    struct Result {
        std::optional<GapMarker> gap;  // set when a hole > max_gap_s was crossed
        VelocitySample sample;
    };

    Result feed(const GazeSample& s) {
        Result r;
        r.sample.sample = s;
        if (!prev_) {
            r.sample.first_of_run = true;
            dropped_pending_ = 0;
            forced_break_ = false;
        } else if (forced_break_) {
            // The caller already owns the explanation for this break (e.g. a
            // confirmed blink), so no marker is emitted here.
            r.sample.first_of_run = true;
            forced_break_ = false;
            dropped_pending_ = 0;
        } else {
            const double dt = seconds_between(prev_->timestamp, s.timestamp);
            if (dt > params_.max_gap_s) {
                r.gap = GapMarker{prev_->timestamp, s.timestamp, take_dropped()};
                r.sample.first_of_run = true;
            } else {
                r.sample.theta_deg = angle_between_deg(prev_->gaze_direction, s.gaze_direction);
                r.sample.dt_s = dt;
                r.sample.velocity_deg_per_s = r.sample.theta_deg / dt;
                dropped_pending_ = 0;  // absorbed: the hole was short enough
            }
        }
        prev_ = s;
        return r;
    }

    /// An unusable sample was observed (and excluded) at this point.
    void note_dropped() { ++dropped_pending_; }

    /// Break adjacency before the next sample without emitting a marker.
    void break_adjacency() { forced_break_ = true; }

    std::int64_t take_dropped() {
        const std::int64_t d = dropped_pending_;
        dropped_pending_ = 0;
        return d;
    }

    std::optional<Timestamp> last_timestamp() const {
        return prev_ ? std::optional<Timestamp>(prev_->timestamp) : std::nullopt;
    }

private:
    PreprocessParams params_;
    std::optional<GazeSample> prev_;
    std::int64_t dropped_pending_ = 0;
    bool forced_break_ = false;
};

/// Streaming sliding-window median over the velocity signal, removing
/// one-sample spikes. Length-, timestamp- and theta-preserving; the first
/// and last floor(window/2) samples of each contiguous run pass through
/// unchanged. Runs are delimited by first_of_run flags or flush().
class MedianFilter {
public:
    explicit MedianFilter(int window) : window_(window), half_(window / 2) {
        if (window < 1 || window % 2 == 0)
            throw std::invalid_argument("median window must be odd and >= 1");
    }

    /// Feeds one sample; returns 0 or more finalized samples (in order).
    std::vector<VelocitySample> feed(const VelocitySample& s) {
        std::vector<VelocitySample> out;
        if (s.first_of_run) flush_into(out);
        pending_.push_back(s);
        values_.push_back(s.velocity_deg_per_s);
        if (static_cast<int>(pending_.size()) > half_) emit_one(out);
        return out;
    }

    /// Ends the current run, releasing the tail unchanged.
    std::vector<VelocitySample> flush() {
        std::vector<VelocitySample> out;
        flush_into(out);
        return out;
    }

private:
    void emit_one(std::vector<VelocitySample>& out) {
        VelocitySample s = pending_.front();
        pending_.pop_front();
        if (idx_in_run_ >= half_) {
            // values_ holds exactly the centered window for this index.
            scratch_.assign(values_.begin(), values_.end());
            std::nth_element(scratch_.begin(), scratch_.begin() + scratch_.size() / 2, scratch_.end());
            s.velocity_deg_per_s = scratch_[scratch_.size() / 2];
        }
        if (static_cast<int>(values_.size()) == window_) values_.pop_front();
        ++idx_in_run_;
        out.push_back(std::move(s));
    }

    void flush_into(std::vector<VelocitySample>& out) {
        // Remaining pending samples are the last floor(window/2) of the run.
        while (!pending_.empty()) {
            out.push_back(pending_.front());
            pending_.pop_front();
        }
        values_.clear();
        idx_in_run_ = 0;
    }

    int window_;
    int half_;
    std::deque<VelocitySample> pending_;
    std::deque<double> values_;  // velocities of the trailing window
    std::vector<double> scratch_;
    std::int64_t idx_in_run_ = 0;
};

/// Batch form over an annotated stream; run boundaries are taken from the
/// first_of_run flags.
inline std::vector<VelocitySample> median_filter(std::span<const VelocitySample> stream,
                                                 int window) {
    MedianFilter f(window);
    std::vector<VelocitySample> out;
    out.reserve(stream.size());
    for (const auto& s : stream) {
        auto part = f.feed(s);
        out.insert(out.end(), part.begin(), part.end());
    }
    auto tail = f.flush();
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
}

// ============================================================================
// Calibration scoring
// ============================================================================

struct CalibrationScore {
    std::vector<double> per_target_mean_deg;
    double overall_mean_deg = 0.0;
};

/// Scores a recorded calibration pass: the user looked at targets[i] during
/// [i * per_target_interval_s, (i+1) * per_target_interval_s) on the session
/// clock. Direction-invalid samples are excluded. Throws when a target
/// interval holds no valid sample.
inline CalibrationScore calibration_error(std::span<const GazeSample> samples,
                                          std::span<const Vec3> targets,
                                          double per_target_interval_s) {
    if (targets.empty()) throw std::invalid_argument("no calibration targets");
    if (!(per_target_interval_s > 0.0))
        throw std::invalid_argument("per_target_interval_s must be > 0");
    for (const auto& t : targets)
        if (!is_unit(t)) throw std::invalid_argument("calibration targets must be unit vectors");

    CalibrationScore score;
    double total = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const Timestamp lo = Timestamp::from_seconds(static_cast<double>(i) * per_target_interval_s);
        const Timestamp hi = Timestamp::from_seconds(static_cast<double>(i + 1) * per_target_interval_s);
        double sum = 0.0;
        std::int64_t n = 0;
        for (const auto& s : samples) {
            if (s.timestamp < lo || s.timestamp >= hi) continue;
            if (!validate_sample(s).direction_usable()) continue;
            sum += angle_between_deg(s.gaze_direction, targets[i]);
            ++n;
        }
        if (n == 0) throw std::runtime_error("calibration target interval has no valid samples");
        score.per_target_mean_deg.push_back(sum / static_cast<double>(n));
        total += score.per_target_mean_deg.back();
    }
    score.overall_mean_deg = total / static_cast<double>(targets.size());
    return score;
}

}  // namespace gazeflow
