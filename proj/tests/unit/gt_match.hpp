// Compares detected events against a scenario's ground-truth labels.

#pragma once

#include <cstdint>
#include <vector>

#include "gazeflow/detector.hpp"
#include "gazeflow/synthetic.hpp"

namespace testgen {

struct MatchResult {
    bool sequence_match = false;
    std::int64_t boundaries_total = 0;
    std::int64_t boundaries_within_one_sample = 0;
};

inline MatchResult match_ground_truth(const std::vector<gazeflow::GazeEvent>& detected,
                                      const gazeflow::GroundTruthLabels& truth,
                                      double sample_rate_hz) {
    MatchResult r;
    r.sequence_match = detected.size() == truth.intervals.size();
    if (r.sequence_match) {
        for (std::size_t i = 0; i < detected.size(); ++i)
            if (detected[i].kind != truth.intervals[i].kind) r.sequence_match = false;
    }
    if (!r.sequence_match) return r;

    const std::int64_t period_us = static_cast<std::int64_t>(1e6 / sample_rate_hz) + 1;
    for (std::size_t i = 0; i < detected.size(); ++i) {
        r.boundaries_total += 2;
        if (std::llabs(detected[i].start.micros - truth.intervals[i].start.micros) <= period_us)
            ++r.boundaries_within_one_sample;
        if (std::llabs(detected[i].end.micros - truth.intervals[i].end.micros) <= period_us)
            ++r.boundaries_within_one_sample;
    }
    return r;
}

}  // namespace testgen
