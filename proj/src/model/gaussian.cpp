#include "psld/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "psld/errors.hpp"

namespace psld {

void validate_data(const PsldParams& p, const GaussianDataSpec& data) {
    if (data.mu0_x.size() != p.dim || data.var0_x.size() != p.dim) {
        throw ValidationError("data mu0_x/var0_x must have exactly dim = " + std::to_string(p.dim) + " entries");
    }
    for (std::size_t i = 0; i < p.dim; ++i) {
        if (!std::isfinite(data.mu0_x[i])) {
            throw ValidationError("data mu0_x[" + std::to_string(i) + "] must be finite");
        }
        if (!(std::isfinite(data.var0_x[i]) && data.var0_x[i] > 0.0)) {
            throw ValidationError("data var0_x[" + std::to_string(i) + "] must be > 0");
        }
    }
}

BlockMoments forward_block(const PsldParams& p, double mu0_x, double var0_x, double t) {
    const Mat2 e = mat2_exp(drift_matrix(p), t);
    const Mat2 s_inf = stationary_covariance(p);
    const Mat2 s0 = Mat2::diag(var0_x, p.gamma_init * p.mass());
    const Mat2 sigma = s_inf + e * (s0 - s_inf) * e.transpose();
    return {e * Vec2{mu0_x, 0.0}, symmetrized(sigma)};
}

BlockMoments forward_block_rate(const PsldParams& p, const BlockMoments& at_t) {
    const Mat2 f = drift_matrix(p);
    const Mat2 fs = f * at_t.sigma;
    return {f * at_t.mu, symmetrized(fs + fs.transpose() + diffusion_covariance(p))};
}

GaussianMoments forward_moments(const PsldParams& p, const GaussianDataSpec& data, double t) {
    if (!(t >= 0.0 && t <= p.t_max)) {
        throw ValidationError("forward_moments: t = " + std::to_string(t) + " outside [0, t_max]");
    }
    GaussianMoments out;
    out.mu.reserve(p.dim);
    out.sigma.reserve(p.dim);
    for (std::size_t i = 0; i < p.dim; ++i) {
        const BlockMoments b = forward_block(p, data.mu0_x.at(i), data.var0_x.at(i), t);
        out.mu.push_back(b.mu);
        out.sigma.push_back(b.sigma);
    }
    return out;
}

GaussianMoments stationary_moments(const PsldParams& p) {
    GaussianMoments out;
    out.mu.assign(p.dim, Vec2{});
    out.sigma.assign(p.dim, stationary_covariance(p));
    return out;
}

ScoreEval gaussian_score(const GaussianMoments& moments, const JointState& state, double t_cond,
                         const Executor& exec) {
    check_shape(state);
    const std::size_t d = state.dim;
    if (moments.dim() != d) {
        throw ContractError("gaussian_score: moments dimension does not match state");
    }
    std::vector<Mat2> precision(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double det = moments.sigma[i].det();
        if (!(det > 1e-30)) {
            throw NumericalError("degenerate marginal: det Sigma = " + std::to_string(det) + " in dimension " +
                                 std::to_string(i));
        }
        precision[i] = inverse(moments.sigma[i]);
    }
    ScoreEval se(state.n_chains, d, t_cond);
    exec.for_range(state.n_chains, [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
            for (std::size_t i = 0; i < d; ++i) {
                const std::size_t k = c * d + i;
                const Vec2 s = precision[i] * (Vec2{state.x[k], state.m[k]} - moments.mu[i]);
                se.sx[k] = -s.x;
                se.sm[k] = -s.m;
            }
        }
    });
    return se;
}

ScoreEval analytic_score(const PsldParams& p, const GaussianDataSpec& data, const JointState& state,
                         double t_cond, const Executor& exec) {
    return gaussian_score(forward_moments(p, data, t_cond), state, t_cond, exec);
}

double gaussian_log_density(const GaussianMoments& moments, std::span<const double> x, std::span<const double> m) {
    double lp = 0.0;
    for (std::size_t i = 0; i < moments.dim(); ++i) {
        const Mat2& s = moments.sigma[i];
        const Vec2 r = Vec2{x[i], m[i]} - moments.mu[i];
        const Vec2 pr = inverse(s) * r;
        lp += -0.5 * (r.x * pr.x + r.m * pr.m) - 0.5 * std::log(s.det()) - std::log(2.0 * std::numbers::pi);
    }
    return lp;
}

namespace {

struct Chol2 {
    double l11, l21, l22;
};

Chol2 cholesky_jittered(const Mat2& s, std::size_t dim_index) {
    const double a11 = s.a11 + kCholeskyJitter;
    const double a22 = s.a22 + kCholeskyJitter;
    if (!(a11 > 0.0)) {
        throw NumericalError("non-PSD covariance in dimension " + std::to_string(dim_index));
    }
    const double l11 = std::sqrt(a11);
    const double l21 = s.a21 / l11;
    const double rest = a22 - l21 * l21;
    if (!(rest > 0.0)) {
        throw NumericalError("non-PSD covariance in dimension " + std::to_string(dim_index));
    }
    return {l11, l21, std::sqrt(rest)};
}

}  // namespace

JointState sample_moments(const GaussianMoments& moments, std::size_t n, double t, ChainStreams& rng,
                          const Executor& exec) {
    const std::size_t d = moments.dim();
    if (rng.n_chains() < n) {
        throw ContractError("sample_moments: generator has fewer streams than requested chains");
    }
    std::vector<Chol2> chol;
    chol.reserve(d);
    for (std::size_t i = 0; i < d; ++i) {
        chol.push_back(cholesky_jittered(moments.sigma[i], i));
    }
    JointState out(n, d, t);
    exec.for_range(n, [&](std::size_t begin, std::size_t end) {
        std::vector<double> eps(2 * d);
        for (std::size_t c = begin; c < end; ++c) {
            rng.normals(c, eps);
            for (std::size_t i = 0; i < d; ++i) {
                const Chol2& l = chol[i];
                const double e1 = eps[2 * i];
                const double e2 = eps[2 * i + 1];
                out.x[c * d + i] = moments.mu[i].x + l.l11 * e1;
                out.m[c * d + i] = moments.mu[i].m + l.l21 * e1 + l.l22 * e2;
            }
        }
    });
    return out;
}

JointState perturbation_sample(const PsldParams& p, const GaussianDataSpec& data, double t, std::size_t n,
                               ChainStreams& rng, const Executor& exec) {
    return sample_moments(forward_moments(p, data, t), n, t, rng, exec);
}

}  // namespace psld
