#pragma once

#include <array>
#include <cmath>

namespace psld {

struct Vec2 {
    double x = 0.0;
    double m = 0.0;

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.m + b.m}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.m - b.m}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.m}; }
    friend constexpr bool operator==(Vec2, Vec2) = default;
};

/// 2x2 real matrix acting on one (x_i, m_i) pair. Every PSLD operator is a
/// Mat2 Kronecker the d-dimensional identity, so one Mat2 describes all
/// dimensions at once.
struct Mat2 {
    double a11 = 0.0;
    double a12 = 0.0;
    double a21 = 0.0;
    double a22 = 0.0;

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static constexpr Mat2 diag(double d1, double d2) { return {d1, 0.0, 0.0, d2}; }

    constexpr double trace() const { return a11 + a22; }
    constexpr double det() const { return a11 * a22 - a12 * a21; }
    constexpr Mat2 transpose() const { return {a11, a21, a12, a22}; }
    double max_abs() const;
    bool finite() const;

    friend constexpr Mat2 operator+(const Mat2& a, const Mat2& b) {
        return {a.a11 + b.a11, a.a12 + b.a12, a.a21 + b.a21, a.a22 + b.a22};
    }
    friend constexpr Mat2 operator-(const Mat2& a, const Mat2& b) {
        return {a.a11 - b.a11, a.a12 - b.a12, a.a21 - b.a21, a.a22 - b.a22};
    }
    friend constexpr Mat2 operator*(double s, const Mat2& a) {
        return {s * a.a11, s * a.a12, s * a.a21, s * a.a22};
    }
    friend constexpr Mat2 operator*(const Mat2& a, const Mat2& b) {
        return {a.a11 * b.a11 + a.a12 * b.a21, a.a11 * b.a12 + a.a12 * b.a22,
                a.a21 * b.a11 + a.a22 * b.a21, a.a21 * b.a12 + a.a22 * b.a22};
    }
    friend constexpr Vec2 operator*(const Mat2& a, Vec2 v) {
        return {a.a11 * v.x + a.a12 * v.m, a.a21 * v.x + a.a22 * v.m};
    }
    friend constexpr bool operator==(const Mat2&, const Mat2&) = default;
};

/// Inverse of a nonsingular matrix; the caller checks det().
Mat2 inverse(const Mat2& a);

/// exp(A t) in closed form.
///
/// With s = tr(A)/2 and N = A - sI, N^2 = q I where q = s^2 - det(A), so
/// exp(At) = e^{st} (c(t) I + g(t) N) with c, g the hyperbolic (q > 0) or
/// trigonometric (q < 0) pair. When the eigenvalues are within 1e-8 of each
/// other g(t) = sinh(sqrt(q) t)/sqrt(q) is evaluated from its power series
/// in q t^2 instead.
Mat2 mat2_exp(const Mat2& a, double t);

/// Principal square root of a symmetric positive semidefinite matrix:
/// sqrt(S) = (S + sqrt(det S) I) / sqrt(tr S + 2 sqrt(det S)).
Mat2 psd_sqrt(const Mat2& s);

/// Symmetric within `sym_tol * scale` and PSD within `psd_tol`.
bool is_symmetric_psd(const Mat2& s, double sym_tol = 1e-12, double psd_tol = 1e-12);

/// Symmetrize by averaging the off-diagonal entries.
constexpr Mat2 symmetrized(const Mat2& s) {
    double off = 0.5 * (s.a12 + s.a21);
    return {s.a11, off, off, s.a22};
}

}  // namespace psld
