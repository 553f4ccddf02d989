#include "psld/analysis/moments.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "psld/errors.hpp"

namespace psld::analysis {

GaussianMoments empirical_moments(const JointState& samples) {
    check_shape(samples);
    const std::size_t n = samples.n_chains;
    const std::size_t d = samples.dim;
    if (n < 2) {
        throw ValidationError("empirical_moments needs at least 2 chains");
    }
    GaussianMoments out;
    out.mu.assign(d, Vec2{});
    out.sigma.assign(d, Mat2{});
    for (std::size_t i = 0; i < d; ++i) {
        double sx = 0.0;
        double sm = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            sx += samples.x[c * d + i];
            sm += samples.m[c * d + i];
        }
        const double mx = sx / static_cast<double>(n);
        const double mm = sm / static_cast<double>(n);
        // Two-pass for the centered sums.
        double cxx = 0.0, cxm = 0.0, cmm = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            const double dx = samples.x[c * d + i] - mx;
            const double dm = samples.m[c * d + i] - mm;
            cxx += dx * dx;
            cxm += dx * dm;
            cmm += dm * dm;
        }
        const double denom = static_cast<double>(n - 1);
        out.mu[i] = {mx, mm};
        out.sigma[i] = {cxx / denom, cxm / denom, cxm / denom, cmm / denom};
    }
    return out;
}

double gaussian_w2(const GaussianMoments& a, const GaussianMoments& b) {
    if (a.dim() != b.dim() || a.sigma.size() != a.dim() || b.sigma.size() != b.dim()) {
        throw ValidationError("gaussian_w2: dimension mismatch");
    }
    double w2sq = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        const Mat2& sa = a.sigma[i];
        const Mat2& sb = b.sigma[i];
        if (!is_symmetric_psd(sa, 1e-9, 1e-12) || !is_symmetric_psd(sb, 1e-9, 1e-12)) {
            throw ValidationError("gaussian_w2: covariance block " + std::to_string(i) + " is not symmetric PSD");
        }
        const Vec2 dmu = a.mu[i] - b.mu[i];
        const Mat2 rb = psd_sqrt(symmetrized(sb));
        const Mat2 cross = psd_sqrt(symmetrized(rb * sa * rb));
        const double bures = sa.trace() + sb.trace() - 2.0 * cross.trace();
        w2sq += dmu.x * dmu.x + dmu.m * dmu.m + bures;
    }
    return std::sqrt(std::max(0.0, w2sq));
}

double mean_x_error(const GaussianMoments& a, const GaussianMoments& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        const double dx = a.mu[i].x - b.mu[i].x;
        acc += dx * dx;
    }
    return std::sqrt(acc);
}

double covariance_fro_error(const GaussianMoments& a, const GaussianMoments& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        const Mat2 diff = a.sigma[i] - b.sigma[i];
        acc += diff.a11 * diff.a11 + diff.a12 * diff.a12 + diff.a21 * diff.a21 + diff.a22 * diff.a22;
    }
    return std::sqrt(acc);
}

}  // namespace psld::analysis
