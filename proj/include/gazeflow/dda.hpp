#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gazeflow/metrics.hpp"
#include "gazeflow/types.hpp"

namespace gazeflow {

enum class FlowLabel { Boredom, Flow, Anxiety };

inline const char* to_string(FlowLabel l) {
    switch (l) {
        case FlowLabel::Boredom: return "boredom";
        case FlowLabel::Flow: return "flow";
        case FlowLabel::Anxiety: return "anxiety";
    }
    return "?";
}

/// Estimated engagement state for one metrics window. Scores live in [0,1];
/// `contributing` records each metric's normalized deviation from the user's
/// running baseline (z-score) for inspection.
struct FlowState {
    FlowLabel label = FlowLabel::Flow;
    double boredom_score = 0.0;
    double anxiety_score = 0.0;
    std::map<std::string, double> contributing;
    Timestamp at;
};

enum class DifficultyAction { Increase, Hold, Decrease };

inline const char* to_string(DifficultyAction a) {
    switch (a) {
        case DifficultyAction::Increase: return "increase";
        case DifficultyAction::Hold: return "hold";
        case DifficultyAction::Decrease: return "decrease";
    }
    return "?";
}

struct DifficultyDecision {
    DifficultyAction action = DifficultyAction::Hold;
    int new_level = 0;
    FlowState reason;
    Timestamp at;
};

struct DdaPolicy {
    // Enter/exit hysteresis per state; exit must sit below enter.
    double boredom_enter = 0.5;
    double boredom_exit = 0.35;
    double anxiety_enter = 0.5;
    double anxiety_exit = 0.35;
    int consecutive_windows_required = 3;
    double cooldown_s = 10.0;  // minimum spacing between level changes
    int min_level = 1;
    int max_level = 5;
    int warmup_windows = 5;    // snapshots before the reference is trusted

    // Indicator weights; missing indicators renormalize over the rest.
    double boredom_weight_blink_rate = 0.4;
    double boredom_weight_fixation_duration = 0.35;
    double boredom_weight_pupil = 0.25;
    double anxiety_weight_saccade_velocity = 0.4;
    double anxiety_weight_pupil = 0.35;
    double anxiety_weight_ttff = 0.25;

    double half_life_s = 60.0;  // running-statistics decay
    double z_full_scale = 2.0;  // deviation (in sigmas) that saturates an indicator

    void validate() const {
        auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!in01(boredom_enter) || !in01(boredom_exit) || !in01(anxiety_enter) ||
            !in01(anxiety_exit))
            throw std::invalid_argument("thresholds must lie in [0,1]");
        if (boredom_exit >= boredom_enter || anxiety_exit >= anxiety_enter)
            throw std::invalid_argument("exit threshold must be below enter threshold");
        if (consecutive_windows_required < 1)
            throw std::invalid_argument("consecutive_windows_required must be >= 1");
        if (cooldown_s < 0.0) throw std::invalid_argument("cooldown_s must be >= 0");
        if (min_level > max_level) throw std::invalid_argument("min_level must be <= max_level");
        if (warmup_windows < 1) throw std::invalid_argument("warmup_windows must be >= 1");
        if (!(half_life_s > 0.0) || !(z_full_scale > 0.0))
            throw std::invalid_argument("half_life_s and z_full_scale must be > 0");
    }
};

/// Exponentially-weighted mean/deviation of one metric. Normalizing against
/// the user's own recent history is what makes the indicators per-user.
class RunningStat {
public:
    explicit RunningStat(double alpha) : alpha_(alpha) {}

    void update(double x) {
        if (n_ == 0) {
            mean_ = x;
        } else {
            const double d = x - mean_;
            mean_ += alpha_ * d;
            var_ = (1.0 - alpha_) * (var_ + alpha_ * d * d);
        }
        ++n_;
    }

    /// Deviation of x from the running mean, in running standard deviations.
    double z(double x) const {
        const double sd = std::sqrt(var_);
        if (sd < 1e-12) return 0.0;
        return (x - mean_) / sd;
    }

    double mean() const { return mean_; }
    std::int64_t count() const { return n_; }

private:
    double alpha_;
    double mean_ = 0.0;
    double var_ = 0.0;
    std::int64_t n_ = 0;
};

/// Maps metric snapshots to flow-state estimates. Boredom reads high blink
/// rate, short fixations and a constricted pupil; anxiety reads fast
/// saccades, a dilated pupil and slow/missing first fixations on task AOIs.
/// Until warmup_windows snapshots have been seen the state is Flow with zero
/// scores by definition.
class EngagementEstimator {
public:
    EngagementEstimator(DdaPolicy policy, double step_s,
                        std::vector<std::string> task_aois = {})
        : policy_(policy), task_aois_(std::move(task_aois)) {
        policy_.validate();
        alpha_ = 1.0 - std::pow(0.5, step_s / policy_.half_life_s);
        stats_.emplace("fixation_duration", RunningStat(alpha_));
        stats_.emplace("blink_rate", RunningStat(alpha_));
        stats_.emplace("saccade_velocity", RunningStat(alpha_));
        stats_.emplace("pupil_index", RunningStat(alpha_));
        stats_.emplace("ttff", RunningStat(alpha_));
    }

    FlowState assess(const MetricsSnapshot& snap) {
        FlowState st;
        st.at = snap.window_end;

        const bool warm = windows_seen_ >= policy_.warmup_windows;
        // Current-window readings, missing when the window lacks the signal.
        const std::optional<double> fix_dur =
            snap.fixation_count > 0 ? std::optional<double>(snap.mean_fixation_duration_s)
                                    : std::nullopt;
        const std::optional<double> sacc_vel =
            snap.saccade_count > 0 ? std::optional<double>(snap.peak_saccade_velocity_deg_s)
                                   : std::nullopt;
        const std::optional<double> blink_rate = snap.blink_rate_per_min;
        const std::optional<double> pupil = snap.pupil_dilation_index;

        if (warm) {
            auto z_of = [&](const char* key, const std::optional<double>& v) -> std::optional<double> {
                if (!v) return std::nullopt;
                const double z = stats_.at(key).z(*v);
                st.contributing[key] = z;
                return z;
            };
            const auto z_fix = z_of("fixation_duration", fix_dur);
            const auto z_blink = z_of("blink_rate", blink_rate);
            const auto z_sacc = z_of("saccade_velocity", sacc_vel);
            const auto z_pupil = z_of("pupil_index", pupil);

            auto squash = [&](double z) { return std::clamp(z / policy_.z_full_scale, 0.0, 1.0); };

            double b_num = 0.0, b_den = 0.0;
            if (z_blink) { b_num += policy_.boredom_weight_blink_rate * squash(*z_blink); b_den += policy_.boredom_weight_blink_rate; }
            if (z_fix)   { b_num += policy_.boredom_weight_fixation_duration * squash(-*z_fix); b_den += policy_.boredom_weight_fixation_duration; }
            if (z_pupil) { b_num += policy_.boredom_weight_pupil * squash(-*z_pupil); b_den += policy_.boredom_weight_pupil; }
            st.boredom_score = b_den > 0.0 ? b_num / b_den : 0.0;

            double a_num = 0.0, a_den = 0.0;
            if (z_sacc)  { a_num += policy_.anxiety_weight_saccade_velocity * squash(*z_sacc); a_den += policy_.anxiety_weight_saccade_velocity; }
            if (z_pupil) { a_num += policy_.anxiety_weight_pupil * squash(*z_pupil); a_den += policy_.anxiety_weight_pupil; }
            if (auto z_ttff = ttff_indicator(snap, st)) {
                a_num += policy_.anxiety_weight_ttff * *z_ttff;
                a_den += policy_.anxiety_weight_ttff;
            }
            st.anxiety_score = a_den > 0.0 ? a_num / a_den : 0.0;

            st.label = next_label(st.boredom_score, st.anxiety_score);
        }
        label_ = st.label;

        // Update the reference after scoring, so a window is compared against
        // the history that precedes it.
        if (fix_dur) stats_.at("fixation_duration").update(*fix_dur);
        stats_.at("blink_rate").update(snap.blink_rate_per_min);
        if (sacc_vel) stats_.at("saccade_velocity").update(*sacc_vel);
        if (pupil) stats_.at("pupil_index").update(*pupil);
        for (const auto& id : task_aois_) {
            const auto it = snap.ttff_s.find(id);
            if (it != snap.ttff_s.end()) stats_.at("ttff").update(it->second);
        }
        ++windows_seen_;
        return st;
    }

    bool warm() const { return windows_seen_ >= policy_.warmup_windows; }

private:
    /// Anxiety signal from task-AOI responsiveness: a missing TTFF is a full
    /// signal, a present one contributes its squashed deviation.
    std::optional<double> ttff_indicator(const MetricsSnapshot& snap, FlowState& st) const {
        if (task_aois_.empty()) return std::nullopt;
        double worst = 0.0;
        bool any = false;
        for (const auto& id : task_aois_) {
            const auto it = snap.ttff_s.find(id);
            if (it == snap.ttff_s.end()) {
                worst = 1.0;
                any = true;
            } else {
                const double z = stats_.at("ttff").z(it->second);
                st.contributing["ttff"] = z;
                worst = std::max(worst, std::clamp(z / policy_.z_full_scale, 0.0, 1.0));
                any = true;
            }
        }
        return any ? std::optional<double>(worst) : std::nullopt;
    }

    FlowLabel next_label(double b, double a) const {
        switch (label_) {
            case FlowLabel::Boredom:
                if (a > policy_.anxiety_enter && a > b) return FlowLabel::Anxiety;
                if (b > policy_.boredom_exit) return FlowLabel::Boredom;
                return FlowLabel::Flow;
            case FlowLabel::Anxiety:
                if (b > policy_.boredom_enter && b >= a) return FlowLabel::Boredom;
                if (a > policy_.anxiety_exit) return FlowLabel::Anxiety;
                return FlowLabel::Flow;
            case FlowLabel::Flow:
                break;
        }
        if (b >= a && b > policy_.boredom_enter) return FlowLabel::Boredom;
        if (a > b && a > policy_.anxiety_enter) return FlowLabel::Anxiety;
        return FlowLabel::Flow;
    }

    DdaPolicy policy_;
    std::vector<std::string> task_aois_;
    double alpha_ = 0.0;
    std::map<std::string, RunningStat> stats_;
    FlowLabel label_ = FlowLabel::Flow;
    std::int64_t windows_seen_ = 0;
};

/// Pure decision rule: what the last few states ask for, before cooldown and
/// level clamping. Boredom sustained over the required run of windows asks
/// for more challenge; anxiety for less.
inline DifficultyAction requested_action(std::span<const FlowLabel> history,
                                         const DdaPolicy& policy) {
    const int need = policy.consecutive_windows_required;
    if (static_cast<int>(history.size()) < need) return DifficultyAction::Hold;
    const auto tail = history.subspan(history.size() - static_cast<std::size_t>(need));
    const FlowLabel first = tail[0];
    if (first == FlowLabel::Flow) return DifficultyAction::Hold;
    for (const FlowLabel l : tail)
        if (l != first) return DifficultyAction::Hold;
    return first == FlowLabel::Boredom ? DifficultyAction::Increase : DifficultyAction::Decrease;
}

/// Hysteretic difficulty controller. Non-Hold decisions are spaced at least
/// cooldown_s apart; levels never leave [min_level, max_level]; a change
/// blocked by the level clamp is a Hold and does not start the cooldown.
class DifficultyController {
public:
    DifficultyController(DdaPolicy policy, int initial_level)
        : policy_(policy), level_(std::clamp(initial_level, policy.min_level, policy.max_level)) {
        policy_.validate();
    }

    DifficultyDecision decide(const FlowState& state) {
        history_.push_back(state.label);
        while (static_cast<int>(history_.size()) > policy_.consecutive_windows_required)
            history_.pop_front();

        DifficultyDecision d;
        d.at = state.at;
        d.reason = state;
        d.new_level = level_;

        const std::vector<FlowLabel> hist(history_.begin(), history_.end());
        DifficultyAction want = requested_action(hist, policy_);
        if (want != DifficultyAction::Hold && !cooldown_elapsed(state.at))
            want = DifficultyAction::Hold;
        if (want == DifficultyAction::Increase && level_ >= policy_.max_level)
            want = DifficultyAction::Hold;
        if (want == DifficultyAction::Decrease && level_ <= policy_.min_level)
            want = DifficultyAction::Hold;

        if (want == DifficultyAction::Increase) {
            ++level_;
            last_change_ = state.at;
        } else if (want == DifficultyAction::Decrease) {
            --level_;
            last_change_ = state.at;
        }
        d.action = want;
        d.new_level = level_;
        return d;
    }

    int level() const { return level_; }

private:
    bool cooldown_elapsed(Timestamp now) const {
        return !last_change_ || seconds_between(*last_change_, now) >= policy_.cooldown_s;
    }

    DdaPolicy policy_;
    int level_;
    std::deque<FlowLabel> history_;
    std::optional<Timestamp> last_change_;
};

}  // namespace gazeflow
