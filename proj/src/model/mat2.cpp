#include "psld/mat2.hpp"

#include <algorithm>

namespace psld {

namespace {

constexpr double kEigenGap = 1e-8;

// sum_k y^k / (2k)!  and  sum_k y^k / (2k+1)!  i.e. cosh(sqrt(y)) and
// sinh(sqrt(y))/sqrt(y) for any sign of y.
void even_odd_series(double y, double& c, double& g) {
    double term_c = 1.0;
    double term_g = 1.0;
    c = 1.0;
    g = 1.0;
    for (int k = 1; k < 40; ++k) {
        term_c *= y / ((2.0 * k - 1.0) * (2.0 * k));
        term_g *= y / ((2.0 * k) * (2.0 * k + 1.0));
        c += term_c;
        g += term_g;
        if (std::abs(term_c) < 1e-18 * std::abs(c) && std::abs(term_g) < 1e-18 * std::abs(g)) {
            break;
        }
    }
}

}  // namespace

double Mat2::max_abs() const {
    return std::max({std::abs(a11), std::abs(a12), std::abs(a21), std::abs(a22)});
}

bool Mat2::finite() const {
    return std::isfinite(a11) && std::isfinite(a12) && std::isfinite(a21) && std::isfinite(a22);
}

Mat2 inverse(const Mat2& a) {
    const double d = a.det();
    return {a.a22 / d, -a.a12 / d, -a.a21 / d, a.a11 / d};
}

Mat2 mat2_exp(const Mat2& a, double t) {
    if (t == 0.0) {
        return Mat2::identity();
    }
    const double s = 0.5 * a.trace();
    const Mat2 n = a - s * Mat2::identity();
    // n * n == q * I
    const double q = n.a11 * n.a11 + n.a12 * n.a21;
    const double gap = 2.0 * std::sqrt(std::abs(q));

    double c = 0.0;
    double g = 0.0;
    double scale = 0.0;
    if (gap < kEigenGap) {
        even_odd_series(q * t * t, c, g);
        g *= t;
        scale = std::exp(s * t);
        c *= scale;
        g *= scale;
    } else if (q > 0.0) {
        const double r = std::sqrt(q);
        if (std::abs(r * t) <= 1.0) {
            // sinh keeps full relative accuracy for small r t, where the
            // difference of eigen-exponentials would cancel.
            scale = std::exp(s * t);
            c = scale * std::cosh(r * t);
            g = scale * std::sinh(r * t) / r;
        } else {
            const double e_plus = std::exp((s + r) * t);
            const double e_minus = std::exp((s - r) * t);
            c = 0.5 * (e_plus + e_minus);
            g = 0.5 * (e_plus - e_minus) / r;
        }
    } else {
        const double w = std::sqrt(-q);
        scale = std::exp(s * t);
        c = scale * std::cos(w * t);
        g = scale * std::sin(w * t) / w;
    }
    return c * Mat2::identity() + g * n;
}

Mat2 psd_sqrt(const Mat2& s) {
    const double root_det = std::sqrt(std::max(0.0, s.det()));
    const double denom_sq = s.trace() + 2.0 * root_det;
    if (denom_sq <= 0.0) {
        return {};
    }
    const double inv = 1.0 / std::sqrt(denom_sq);
    return inv * (s + root_det * Mat2::identity());
}

bool is_symmetric_psd(const Mat2& s, double sym_tol, double psd_tol) {
    if (!s.finite()) {
        return false;
    }
    const double scale = std::max(1.0, s.max_abs());
    if (std::abs(s.a12 - s.a21) > sym_tol * scale) {
        return false;
    }
    return s.det() >= -psd_tol * scale * scale && s.trace() >= 0.0 && s.a11 >= -psd_tol * scale &&
           s.a22 >= -psd_tol * scale;
}

}  // namespace psld
