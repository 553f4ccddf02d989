#pragma once

#include <cstddef>

#include "psld/gaussian.hpp"
#include "psld/params.hpp"
#include "psld/scheme.hpp"
#include "psld/score_provider.hpp"
#include "psld/time_grid.hpp"

namespace psld::analysis {

/// Exact output moments of a scheme whose score is affine in the state
/// (the Gaussian oracle or the zero score).
///
/// Every sub-step is then affine in z with additive zero-mean Gaussian
/// noise, so each step maps N(mu, S) per dimension to
/// N(A mu + b, A S A^T + C C^T). A, b and C are read off by running the real
/// step code on a handful of probe chains against unit noise vectors.
/// Throws ContractError if the provider turns out not to be affine.
GaussianMoments propagate_moments(const PsldParams& p, ScoreProvider& provider, const SchemeSpec& spec,
                                  const TimeGrid& grid, const GaussianMoments& init);

/// Same, from the stationary initial distribution.
GaussianMoments propagate_moments(const PsldParams& p, ScoreProvider& provider, const SchemeSpec& spec,
                                  const TimeGrid& grid);

/// One composed step from t_from to t_to.
GaussianMoments propagate_step(const PsldParams& p, ScoreProvider& provider, const SchemeSpec& spec,
                               double t_from, double t_to, const GaussianMoments& init);

}  // namespace psld::analysis
