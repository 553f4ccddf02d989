#pragma once

// Independent reference computations shared by the tests. None of these
// call the library code they are used to check.

#include <array>
#include <numbers>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

using M2 = std::array<double, 4>;  // row major
using V2 = std::array<double, 2>;

inline M2 mul(const M2& a, const M2& b) {
    return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3]};
}

inline V2 mul(const M2& a, const V2& v) {
    return {a[0] * v[0] + a[1] * v[1], a[2] * v[0] + a[3] * v[1]};
}

inline M2 transpose(const M2& a) {
    return {a[0], a[2], a[1], a[3]};
}

/// exp(A t) by scaling and squaring with a 64-term Taylor series.
inline M2 expm_taylor(const M2& a, double t) {
    int squarings = 0;
    double norm = std::abs(a[0] * t) + std::abs(a[1] * t) + std::abs(a[2] * t) + std::abs(a[3] * t);
    while (norm > 0.5) {
        norm *= 0.5;
        ++squarings;
    }
    const double s = t / std::ldexp(1.0, squarings);
    const M2 as{a[0] * s, a[1] * s, a[2] * s, a[3] * s};
    M2 sum{1, 0, 0, 1};
    M2 term{1, 0, 0, 1};
    for (int k = 1; k <= 64; ++k) {
        term = mul(term, as);
        for (double& v : term) v /= k;
        for (int i = 0; i < 4; ++i) sum[i] += term[i];
    }
    for (int k = 0; k < squarings; ++k) {
        sum = mul(sum, sum);
    }
    return sum;
}

struct Moments {
    V2 mu;
    M2 sigma;
};

/// Explicit Euler on mu' = F mu, S' = F S + S F^T + D.
inline Moments euler_moments(const M2& f, const M2& d, Moments m, double t, double h) {
    const long n = std::lround(t / h);
    const double dt = t / static_cast<double>(n);
    for (long k = 0; k < n; ++k) {
        const V2 dmu = mul(f, m.mu);
        const M2 fs = mul(f, m.sigma);
        const M2 sft = mul(m.sigma, transpose(f));
        for (int i = 0; i < 2; ++i) m.mu[i] += dt * dmu[i];
        for (int i = 0; i < 4; ++i) m.sigma[i] += dt * (fs[i] + sft[i] + d[i]);
    }
    return m;
}

/// Richardson combination 2 E(h/2) - E(h) of two Euler runs; second order.
inline Moments euler_richardson(const M2& f, const M2& d, const Moments& m0, double t, double h) {
    const Moments a = euler_moments(f, d, m0, t, h);
    const Moments b = euler_moments(f, d, m0, t, 0.5 * h);
    Moments out;
    for (int i = 0; i < 2; ++i) out.mu[i] = 2.0 * b.mu[i] - a.mu[i];
    for (int i = 0; i < 4; ++i) out.sigma[i] = 2.0 * b.sigma[i] - a.sigma[i];
    return out;
}

/// log N(z; mu, S) for a 2x2 block.
inline double log_pdf(const V2& z, const V2& mu, const M2& s) {
    const double det = s[0] * s[3] - s[1] * s[2];
    const double dx = z[0] - mu[0];
    const double dm = z[1] - mu[1];
    const double q = (s[3] * dx * dx - (s[1] + s[2]) * dx * dm + s[0] * dm * dm) / det;
    return -0.5 * q - 0.5 * std::log(det) - std::log(2.0 * std::numbers::pi);
}

/// W2^2 between two 2-D Gaussians via tr sqrt(B^1/2 A B^1/2) = sqrt(tr(AB) + 2 sqrt(det A det B)).
inline double w2_squared(const V2& mu_a, const M2& a, const V2& mu_b, const M2& b) {
    const M2 ab = mul(a, b);
    const double det_a = a[0] * a[3] - a[1] * a[2];
    const double det_b = b[0] * b[3] - b[1] * b[2];
    const double cross = std::sqrt(std::max(0.0, ab[0] + ab[3] + 2.0 * std::sqrt(std::max(0.0, det_a * det_b))));
    const double dmu = (mu_a[0] - mu_b[0]) * (mu_a[0] - mu_b[0]) + (mu_a[1] - mu_b[1]) * (mu_a[1] - mu_b[1]);
    return dmu + a[0] + a[3] + b[0] + b[3] - 2.0 * cross;
}

}  // namespace oracle
