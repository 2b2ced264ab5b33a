#pragma once

#include <array>
#include <cmath>

#include "soie/errors.hpp"

namespace soie {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double norm() const { return std::sqrt(x * x + y * y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

struct Mat2;
inline Mat2 operator*(double s, const Mat2& m);

/// Row-major 2x2 matrix, just enough linear algebra for the moment equations.
struct Mat2 {
    double a11 = 0.0, a12 = 0.0;
    double a21 = 0.0, a22 = 0.0;

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static Mat2 diagonal(double d1, double d2) { return {d1, 0.0, 0.0, d2}; }

    Mat2 operator+(const Mat2& o) const {
        return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22};
    }
    Mat2 operator-(const Mat2& o) const {
        return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22};
    }
    Mat2 operator*(double s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }
    Mat2 operator*(const Mat2& o) const {
        return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
                a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
    }
    Vec2 operator*(const Vec2& v) const {
        return {a11 * v.x + a12 * v.y, a21 * v.x + a22 * v.y};
    }

    Mat2 transpose() const { return {a11, a21, a12, a22}; }
    double trace() const { return a11 + a22; }
    double det() const { return a11 * a22 - a12 * a21; }

    Mat2 symmetrized() const {
        const double off = 0.5 * (a12 + a21);
        return {a11, off, off, a22};
    }

    double frobenius() const {
        return std::sqrt(a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22);
    }

    double max_abs() const {
        return std::max(std::max(std::abs(a11), std::abs(a12)),
                        std::max(std::abs(a21), std::abs(a22)));
    }

    /// Eigenvalues of the symmetric part; valid only for symmetric matrices.
    std::array<double, 2> symmetric_eigenvalues() const {
        const double mean = 0.5 * (a11 + a22);
        const double off = 0.5 * (a12 + a21);
        const double disc = std::sqrt(0.25 * (a11 - a22) * (a11 - a22) + off * off);
        return {mean - disc, mean + disc};
    }

    /// True when all eigenvalues have strictly negative real part.
    bool is_hurwitz() const { return trace() < 0.0 && det() > 0.0; }
};

inline Mat2 operator*(double s, const Mat2& m) { return m * s; }

inline double quadratic_form(const Vec2& v, const Mat2& m) {
    return v.x * (m.a11 * v.x + m.a12 * v.y) + v.y * (m.a21 * v.x + m.a22 * v.y);
}

inline double trace_product(const Mat2& a, const Mat2& b) {
    return a.a11 * b.a11 + a.a12 * b.a21 + a.a21 * b.a12 + a.a22 * b.a22;
}

inline Vec2 solve2x2(const Mat2& m, const Vec2& rhs) {
    const double d = m.det();
    if (std::abs(d) < 1e-300) {
        throw NumericalError("solve2x2: singular matrix");
    }
    return {(rhs.x * m.a22 - rhs.y * m.a12) / d, (m.a11 * rhs.y - m.a21 * rhs.x) / d};
}

} // namespace soie
