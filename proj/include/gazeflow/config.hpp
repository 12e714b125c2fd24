#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "gazeflow/pipeline.hpp"

namespace gazeflow {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad number for " + key + ": '" + v + "'");
    }
}

inline int to_int(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const int i = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad integer for " + key + ": '" + v + "'");
    }
}

}  // namespace detail

/// Applies one `key = value` pair. Keys mirror the PipelineConfig field
/// names, dotted per stage. Throws std::invalid_argument on unknown keys or
/// unparseable values.
inline void apply_config_entry(PipelineConfig& c, const std::string& key,
                               const std::string& value) {
    using detail::to_double;
    using detail::to_int;
    if (key == "preprocess.median_window") c.preprocess.median_window = to_int(value, key);
    else if (key == "preprocess.max_gap_s") c.preprocess.max_gap_s = to_double(value, key);
    else if (key == "detector.mode") {
        if (value == "dual") c.detector.mode = DetectorParams::Mode::DualThresholdHysteresis;
        else if (value == "single") c.detector.mode = DetectorParams::Mode::SingleThreshold;
        else throw std::invalid_argument("config: detector.mode must be 'dual' or 'single'");
    }
    else if (key == "detector.saccade_threshold_deg_s") c.detector.saccade_threshold_deg_s = to_double(value, key);
    else if (key == "detector.fixation_threshold_deg_s") c.detector.fixation_threshold_deg_s = to_double(value, key);
    else if (key == "detector.min_fixation_s") c.detector.min_fixation_s = to_double(value, key);
    else if (key == "detector.min_saccade_s") c.detector.min_saccade_s = to_double(value, key);
    else if (key == "detector.max_merge_gap_s") c.detector.max_merge_gap_s = to_double(value, key);
    else if (key == "detector.merge_max_centroid_deg") c.detector.merge_max_centroid_deg = to_double(value, key);
    else if (key == "detector.blink_min_s") c.detector.blink_min_s = to_double(value, key);
    else if (key == "detector.blink_max_s") c.detector.blink_max_s = to_double(value, key);
    else if (key == "detector.openness_closed_threshold") c.detector.openness_closed_threshold = to_double(value, key);
    else if (key == "metrics.window_s") c.metrics.window_s = to_double(value, key);
    else if (key == "metrics.step_s") c.metrics.step_s = to_double(value, key);
    else if (key == "metrics.stimulus_onset_s") c.metrics.stimulus_onset = Timestamp::from_seconds(to_double(value, key));
    else if (key == "dda.boredom_enter") c.dda.boredom_enter = to_double(value, key);
    else if (key == "dda.boredom_exit") c.dda.boredom_exit = to_double(value, key);
    else if (key == "dda.anxiety_enter") c.dda.anxiety_enter = to_double(value, key);
    else if (key == "dda.anxiety_exit") c.dda.anxiety_exit = to_double(value, key);
    else if (key == "dda.consecutive_windows_required") c.dda.consecutive_windows_required = to_int(value, key);
    else if (key == "dda.cooldown_s") c.dda.cooldown_s = to_double(value, key);
    else if (key == "dda.min_level") c.dda.min_level = to_int(value, key);
    else if (key == "dda.max_level") c.dda.max_level = to_int(value, key);
    else if (key == "dda.warmup_windows") c.dda.warmup_windows = to_int(value, key);
    else if (key == "dda.half_life_s") c.dda.half_life_s = to_double(value, key);
    else if (key == "dda.z_full_scale") c.dda.z_full_scale = to_double(value, key);
    else if (key == "dda.boredom_weight_blink_rate") c.dda.boredom_weight_blink_rate = to_double(value, key);
    else if (key == "dda.boredom_weight_fixation_duration") c.dda.boredom_weight_fixation_duration = to_double(value, key);
    else if (key == "dda.boredom_weight_pupil") c.dda.boredom_weight_pupil = to_double(value, key);
    else if (key == "dda.anxiety_weight_saccade_velocity") c.dda.anxiety_weight_saccade_velocity = to_double(value, key);
    else if (key == "dda.anxiety_weight_pupil") c.dda.anxiety_weight_pupil = to_double(value, key);
    else if (key == "dda.anxiety_weight_ttff") c.dda.anxiety_weight_ttff = to_double(value, key);
    else if (key == "recorder.raw_buffer_capacity") c.recorder.raw_buffer_capacity = static_cast<std::size_t>(to_int(value, key));
    else if (key == "recorder.flush_interval_s") c.recorder.flush_interval_s = to_double(value, key);
    else if (key == "pipeline.queue_capacity") c.queue_capacity = static_cast<std::size_t>(to_int(value, key));
    else if (key == "pipeline.initial_difficulty") c.initial_difficulty = to_int(value, key);
    else if (key == "pipeline.pupil_baseline_first_s") c.pupil_baseline_first_s = to_double(value, key);
    else if (key == "pipeline.task_aois") {
        c.task_aois.clear();
        std::stringstream ss(value);
        std::string id;
        while (std::getline(ss, id, ',')) {
            id = detail::trim(id);
            if (!id.empty()) c.task_aois.push_back(id);
        }
    }
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

/// `key = value` lines; '#' starts a comment; blank lines ignored.
inline void apply_config_text(PipelineConfig& c, std::istream& in) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        apply_config_entry(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
}

inline PipelineConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    PipelineConfig c;
    apply_config_text(c, in);
    c.validate();
    return c;
}

}  // namespace gazeflow
