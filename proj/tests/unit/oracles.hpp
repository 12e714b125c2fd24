// Test-only reference implementations, kept independent of the library's
// code paths so they can serve as oracles.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "gazeflow/types.hpp"

namespace oracle {

/// High-precision angular velocity in deg/s over long doubles, via
/// atan2(|p1 x p2|, p1 . p2) — a different algebraic route than the
/// library's clamped arccos.
inline long double hp_angular_velocity(const gazeflow::Vec3& p1, const gazeflow::Vec3& p2,
                                       long double dt_s) {
    const long double ax = p1.x, ay = p1.y, az = p1.z;
    const long double bx = p2.x, by = p2.y, bz = p2.z;
    const long double cx = ay * bz - az * by;
    const long double cy = az * bx - ax * bz;
    const long double cz = ax * by - ay * bx;
    const long double cross = std::sqrt(cx * cx + cy * cy + cz * cz);
    const long double dot = ax * bx + ay * by + az * bz;
    const long double theta = std::atan2(cross, dot);
    return theta * 180.0L / 3.141592653589793238462643383279502884L / dt_s;
}

/// Direct sliding-window median over one contiguous run: the first and last
/// floor(window/2) values pass through unchanged.
inline std::vector<double> sliding_median(const std::vector<double>& v, int window) {
    const int h = window / 2;
    const int n = static_cast<int>(v.size());
    std::vector<double> out(v.begin(), v.end());
    for (int i = h; i + h < n; ++i) {
        std::vector<double> w(v.begin() + (i - h), v.begin() + (i + h + 1));
        std::sort(w.begin(), w.end());
        out[static_cast<std::size_t>(i)] = w[w.size() / 2];
    }
    return out;
}

/// Deterministic random unit vector.
inline gazeflow::Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    while (true) {
        gazeflow::Vec3 v{n(rng), n(rng), n(rng)};
        const double norm = v.norm();
        if (norm > 1e-6) return v * (1.0 / norm);
    }
}

}  // namespace oracle
