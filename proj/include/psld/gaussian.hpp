#pragma once

#include <cstddef>
#include <vector>

#include "psld/mat2.hpp"
#include "psld/params.hpp"
#include "psld/parallel.hpp"
#include "psld/rng.hpp"
#include "psld/state.hpp"

namespace psld {

/// Diagonal Gaussian data distribution x_0 ~ N(mu0_x, diag(var0_x)); the
/// momentum starts at m_0 ~ N(0, gamma_init M I) independently.
struct GaussianDataSpec {
    std::vector<double> mu0_x;
    std::vector<double> var0_x;

    std::size_t dim() const { return mu0_x.size(); }
    friend bool operator==(const GaussianDataSpec&, const GaussianDataSpec&) = default;
};

/// Throws ValidationError on size mismatch with p.dim or non-positive variance.
void validate_data(const PsldParams& p, const GaussianDataSpec& data);

/// Per-dimension mean and 2x2 covariance block of a PSLD Gaussian marginal.
/// Different dimensions are uncorrelated.
struct GaussianMoments {
    std::vector<Vec2> mu;
    std::vector<Mat2> sigma;

    std::size_t dim() const { return mu.size(); }
};

/// Exact marginal of the forward SDE started from the data distribution:
///   mu_t    = e^{Ft} mu_0
///   Sigma_t = Sigma_inf + e^{Ft} (Sigma_0 - Sigma_inf) e^{F^T t}
/// where Sigma_inf = diag(1, M) solves F S + S F^T + G G^T = 0.
GaussianMoments forward_moments(const PsldParams& p, const GaussianDataSpec& data, double t);

/// One dimension of forward_moments, exposed for analytic derivatives.
struct BlockMoments {
    Vec2 mu;
    Mat2 sigma;
};
BlockMoments forward_block(const PsldParams& p, double mu0_x, double var0_x, double t);

/// Time derivatives of the block moments: mu' = F mu, Sigma' = F S + S F^T + G G^T.
BlockMoments forward_block_rate(const PsldParams& p, const BlockMoments& at_t);

/// The stationary distribution N(0, diag(1, M)) in every dimension.
GaussianMoments stationary_moments(const PsldParams& p);

/// Exact score -Sigma_t^{-1} (z - mu_t) of the marginal at forward time
/// `t_cond`. Throws NumericalError if any covariance block is singular.
ScoreEval analytic_score(const PsldParams& p, const GaussianDataSpec& data, const JointState& state,
                         double t_cond, const Executor& exec = {});

/// Same, with the marginal moments supplied by the caller.
ScoreEval gaussian_score(const GaussianMoments& moments, const JointState& state, double t_cond,
                         const Executor& exec = {});

/// Log density of one (x, m) pair per dimension summed over dimensions.
double gaussian_log_density(const GaussianMoments& moments, std::span<const double> x,
                            std::span<const double> m);

/// Cholesky sampling jitter added to the covariance diagonal.
inline constexpr double kCholeskyJitter = 1e-9;

/// n draws from N(mu, Sigma + jitter I) per dimension by 2x2 Cholesky.
/// Chain c consumes one Philox block per dimension from stream c.
JointState sample_moments(const GaussianMoments& moments, std::size_t n, double t, ChainStreams& rng,
                          const Executor& exec = {});

/// n draws from the exact forward marginal at time t (the perturbation kernel
/// integrated against the data distribution).
JointState perturbation_sample(const PsldParams& p, const GaussianDataSpec& data, double t, std::size_t n,
                               ChainStreams& rng, const Executor& exec = {});

}  // namespace psld
