#pragma once

#include "psld/gaussian.hpp"
#include "psld/state.hpp"

namespace psld::analysis {

/// Per-dimension sample mean and unbiased 2x2 sample covariance.
/// Requires at least two chains.
GaussianMoments empirical_moments(const JointState& samples);

/// Closed-form 2-Wasserstein distance between two block-diagonal Gaussians:
///   W2^2 = sum_i |mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_b^1/2 S_a S_b^1/2)^1/2).
/// Throws ValidationError on dimension mismatch or a non-PSD block.
double gaussian_w2(const GaussianMoments& a, const GaussianMoments& b);

/// Euclidean norm of the per-dimension x-mean differences.
double mean_x_error(const GaussianMoments& a, const GaussianMoments& b);

/// Frobenius norm of the covariance-block differences over all dimensions.
double covariance_fro_error(const GaussianMoments& a, const GaussianMoments& b);

}  // namespace psld::analysis
