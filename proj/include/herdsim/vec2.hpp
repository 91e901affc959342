#pragma once

#include <cmath>

namespace herdsim {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// Plain 2D vector in ground coordinates (meters / meters-per-second).
struct Vec2 {
    double x{0.0};
    double y{0.0};

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    constexpr bool operator==(const Vec2&) const = default;

    constexpr double norm_sq() const { return x * x + y * y; }
    double norm() const { return std::hypot(x, y); }
};

constexpr Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

/// z-component of the 3D cross product; positive when b lies to the left of a.
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

/// Unit vector along v; the zero vector (norm below eps) maps to {0,0}.
inline Vec2 normalized(Vec2 v, double eps = 1e-12) {
    const double n = v.norm();
    return n < eps ? Vec2{} : v / n;
}

/// Quarter-turn (x,y) -> (-y,x); preserves the norm.
constexpr Vec2 rotate90(Vec2 v) { return {-v.y, v.x}; }

/// Clamp v to the closed disc of radius bound; directions are preserved and
/// the zero vector stays zero. bound must be non-negative.
inline Vec2 saturate(Vec2 v, double bound) {
    const double n = v.norm();
    if (n <= bound || n == 0.0) return v;
    return v * (bound / n);
}

inline bool is_finite(Vec2 v) { return std::isfinite(v.x) && std::isfinite(v.y); }

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    if (a > kPi) a -= 2.0 * kPi;
    return a;
}

}  // namespace herdsim
