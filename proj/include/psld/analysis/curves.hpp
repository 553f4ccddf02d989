#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psld/gaussian.hpp"
#include "psld/parallel.hpp"
#include "psld/params.hpp"
#include "psld/scheme.hpp"
#include "psld/score_provider.hpp"
#include "psld/time_grid.hpp"

namespace psld::analysis {

enum class Metric { w2, mean_abs, cov_fro };

std::string to_string(Metric m);
Metric parse_metric(std::string_view name);

/// How the terminal moments of a run are obtained.
///   monte_carlo: sample n_chains chains and take empirical moments.
///   exact: propagate the moments through the affine step maps (valid only
///          for the Gaussian or zero score; no sampling noise).
enum class Estimator { monte_carlo, exact };

std::string to_string(Estimator e);
Estimator parse_estimator(std::string_view name);

struct CurvePoint {
    std::size_t n_steps = 0;
    std::size_t nfe = 0;
    std::optional<double> lambda_s;
    double error = 0.0;
};

struct ErrorCurve {
    SchemeSpec scheme;
    Metric metric = Metric::w2;
    std::vector<CurvePoint> points;
};

struct RunOptions {
    std::size_t n_chains = 100000;
    std::uint64_t seed = 0;
    Striding striding = Striding::quadratic;
    Estimator estimator = Estimator::monte_carlo;
    /// For reduced schemes without an explicit lambda_s, use the tuned
    /// default for each budget instead of the naive OU noise.
    bool lambda_from_table = false;
    Executor exec{};
};

/// Distance between two sets of moments under `metric`.
double moment_error(Metric metric, const GaussianMoments& got, const GaussianMoments& want);

/// The exact law the sampler targets: the marginal at eps, or the data
/// distribution itself when the last denoising step is on.
GaussianMoments sampling_target(const PsldParams& p, const GaussianDataSpec& data, bool denoise_last);

/// Terminal moments of one run of `spec` over `grid`.
GaussianMoments terminal_moments(const PsldParams& p, ScoreProvider& provider, const SchemeSpec& spec,
                                 const TimeGrid& grid, const RunOptions& opts);

/// One point per budget N: run the sampler, compare its terminal moments
/// with `sampling_target`. Budgets must be strictly increasing.
ErrorCurve weak_error_curve(const PsldParams& p, const GaussianDataSpec& data, ScoreProvider& provider,
                            const SchemeSpec& spec, const std::vector<std::size_t>& budgets,
                            const RunOptions& opts, Metric metric = Metric::w2);

/// Same with the exact Gaussian score of `data`.
ErrorCurve weak_error_curve(const PsldParams& p, const GaussianDataSpec& data, const SchemeSpec& spec,
                            const std::vector<std::size_t>& budgets, const RunOptions& opts,
                            Metric metric = Metric::w2);

struct SweepPoint {
    double lambda_s = 0.0;
    double error = 0.0;
};

struct LambdaSweep {
    SchemeSpec scheme;
    std::size_t n_steps = 0;
    Metric metric = Metric::w2;
    double best_lambda = 0.0;
    double best_error = 0.0;
    /// In the order of the input grid.
    std::vector<SweepPoint> points;
};

/// Error at fixed N for every lambda_s in `grid`; the best value is the
/// argmin, ties going to the smaller lambda_s. All grid points share `seed`.
LambdaSweep lambda_sweep(const PsldParams& p, const GaussianDataSpec& data, ScoreProvider& provider,
                         Scheme scheme, std::size_t n_steps, const std::vector<double>& grid,
                         const RunOptions& opts, Metric metric = Metric::w2, bool denoise_last = false);

LambdaSweep lambda_sweep(const PsldParams& p, const GaussianDataSpec& data, Scheme scheme, std::size_t n_steps,
                         const std::vector<double>& grid, const RunOptions& opts, Metric metric = Metric::w2,
                         bool denoise_last = false);

/// `count` values spaced geometrically between lo and hi, inclusive.
std::vector<double> geometric_grid(double lo, double hi, std::size_t count);

/// Sweep grid centred on the tabulated default for (scheme, N): `count`
/// points spread geometrically over [center / spread, center * spread].
std::vector<double> default_sweep_grid(Scheme scheme, std::size_t n_steps, std::size_t count = 9,
                                       double spread = 4.0);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Observed weak order: minus the log-log slope of error against N.
double observed_order(const ErrorCurve& curve);

}  // namespace psld::analysis
