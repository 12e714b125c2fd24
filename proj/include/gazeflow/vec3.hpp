#pragma once

#include <cmath>

namespace gazeflow {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegPerRad = 180.0 / kPi;

/// 3-component double vector. Used both for unit gaze directions and for
/// positions in millimeters (HMD frame); the context decides the unit.
struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }

    constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }

    constexpr Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }

    double norm() const { return std::sqrt(dot(*this)); }

    Vec3 normalized() const {
        const double n = norm();
        return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{};
    }

    constexpr bool operator==(const Vec3&) const = default;
};

/// True when |v| is within tol of 1.
inline bool is_unit(const Vec3& v, double tol = 1e-6) {
    return std::fabs(v.norm() - 1.0) <= tol;
}

/// Angle between two unit vectors, degrees in [0, 180]. The dot product is
/// clamped into [-1, 1] so near-parallel vectors cannot produce NaN.
inline double angle_between_deg(const Vec3& a, const Vec3& b) {
    double d = a.dot(b);
    if (d > 1.0) d = 1.0;
    if (d < -1.0) d = -1.0;
    return std::acos(d) * kDegPerRad;
}

/// Constant-speed great-circle interpolation between two unit vectors.
/// t in [0, 1]; endpoints are hit exactly. Falls back to the start vector
/// when the endpoints are (anti)parallel.
inline Vec3 slerp(const Vec3& from, const Vec3& to, double t) {
    double d = from.dot(to);
    if (d > 1.0) d = 1.0;
    if (d < -1.0) d = -1.0;
    const double omega = std::acos(d);
    const double s = std::sin(omega);
    if (s < 1e-12) return t < 1.0 ? from : to;
    const double a = std::sin((1.0 - t) * omega) / s;
    const double b = std::sin(t * omega) / s;
    return (from * a + to * b).normalized();
}

}  // namespace gazeflow
