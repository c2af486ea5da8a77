#pragma once

#include <cmath>

namespace sdflow {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

    constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
    // z-component of the 2-D cross product.
    constexpr double cross(Vec2 o) const { return x * o.y - y * o.x; }
    // Rotation by +pi/2 (counter-clockwise).
    constexpr Vec2 perp() const { return {-y, x}; }
    double norm() const { return std::hypot(x, y); }
    constexpr double squared_norm() const { return x * x + y * y; }
    Vec2 normalized() const { const double n = norm(); return {x / n, y / n}; }
    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

constexpr Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }

// Small dense 2x2 matrix, row-major.
struct Mat2 {
    double a00 = 0.0, a01 = 0.0, a10 = 0.0, a11 = 0.0;

    constexpr Mat2() = default;
    constexpr Mat2(double m00, double m01, double m10, double m11)
        : a00(m00), a01(m01), a10(m10), a11(m11) {}

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static constexpr Mat2 outer(Vec2 u, Vec2 v) {
        return {u.x * v.x, u.x * v.y, u.y * v.x, u.y * v.y};
    }
    // Rotation by +pi/2: R*v == v.perp().
    static constexpr Mat2 rotation_quarter() { return {0.0, -1.0, 1.0, 0.0}; }

    constexpr Mat2 operator+(const Mat2& o) const {
        return {a00 + o.a00, a01 + o.a01, a10 + o.a10, a11 + o.a11};
    }
    constexpr Mat2 operator-(const Mat2& o) const {
        return {a00 - o.a00, a01 - o.a01, a10 - o.a10, a11 - o.a11};
    }
    constexpr Mat2 operator*(double s) const {
        return {a00 * s, a01 * s, a10 * s, a11 * s};
    }
    Mat2& operator+=(const Mat2& o) {
        a00 += o.a00; a01 += o.a01; a10 += o.a10; a11 += o.a11;
        return *this;
    }
    constexpr Vec2 apply(Vec2 v) const {
        return {a00 * v.x + a01 * v.y, a10 * v.x + a11 * v.y};
    }
    double max_abs() const {
        return std::max(std::max(std::abs(a00), std::abs(a01)),
                        std::max(std::abs(a10), std::abs(a11)));
    }
};

constexpr Mat2 operator*(double s, const Mat2& m) { return m * s; }

}  // namespace sdflow
