// Randomized-but-seeded scenario scripts for detection tests: fixations
// joined by fast saccades, with optional blinks (within the blink duration
// band) and dropouts (past it, so the ground truth maps to Gap).

#pragma once

#include <random>
#include <vector>

#include "gazeflow/synthetic.hpp"

namespace testgen {

struct ScenarioOptions {
    double max_jitter_deg = 0.3;
    double min_saccade_speed = 300.0;  // deg/s, comfortably past the 250 threshold
    double max_saccade_speed = 700.0;
    bool allow_blinks = true;
    bool allow_dropouts = true;
    int min_fixations = 3;
    int max_fixations = 6;
};

inline gazeflow::SyntheticScenario random_scenario(std::uint64_t seed,
                                                   const ScenarioOptions& opt = {}) {
    using namespace gazeflow;
    std::mt19937_64 rng(seed * 2654435761u + 1);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    SyntheticScenario sc;
    sc.rng_seed = seed;
    sc.jitter_deg = u01(rng) * opt.max_jitter_deg;
    sc.pupil_noise_mm = 0.02;

    // Rotates `from` by `deg` around a random tangent axis.
    auto rotated = [&](const Vec3& from, double deg) {
        const Vec3 ref = std::fabs(from.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
        const Vec3 u = from.cross(ref).normalized();
        const Vec3 v = from.cross(u);
        const double phi = u01(rng) * 2.0 * kPi;
        const Vec3 axis = (u * std::cos(phi) + v * std::sin(phi)).normalized();
        const double a = deg / kDegPerRad;
        return (from * std::cos(a) + axis * std::sin(a)).normalized();
    };

    Vec3 current = rotated({0, 0, 1}, u01(rng) * 10.0);
    const int fixations = opt.min_fixations +
                          static_cast<int>(u01(rng) * (opt.max_fixations - opt.min_fixations));
    for (int i = 0; i < fixations; ++i) {
        const double fix_dur = 0.15 + u01(rng) * 0.45;
        sc.segments.push_back(FixateSegment{current, fix_dur});
        if (i == fixations - 1) break;

        const double roll = u01(rng);
        if (opt.allow_blinks && roll < 0.2) {
            sc.segments.push_back(BlinkSegment{0.1 + u01(rng) * 0.3});  // 100-400 ms
        } else if (opt.allow_dropouts && roll < 0.3) {
            sc.segments.push_back(DropoutSegment{0.6 + u01(rng) * 0.3});  // 600-900 ms
        } else {
            // Amplitude and duration picked so the speed stays inside
            // [min_saccade_speed, max_saccade_speed] and the movement spans
            // several samples.
            const double amp = 10.0 + u01(rng) * 25.0;
            const double lo = std::max(0.030, amp / opt.max_saccade_speed);
            const double hi = std::min(0.080, amp / opt.min_saccade_speed);
            const double dur = lo + u01(rng) * std::max(0.0, hi - lo);
            const Vec3 target = rotated(current, amp);
            sc.segments.push_back(SaccadeSegment{target, dur});
            current = target;
        }
    }
    return sc;
}

}  // namespace testgen
