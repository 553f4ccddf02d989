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

namespace psld::analysis {

/// Score used by a one-step probe: the exact Gaussian score of the data, or
/// zero (only the linear part of the drift remains).
enum class ProbeScore { gaussian, zero };

std::string to_string(ProbeScore s);
ProbeScore parse_probe_score(std::string_view name);

/// Second-order Ito-Taylor prediction of the mean after one reverse step of
/// size h, starting from the exact forward marginal at forward time `tau`:
///   E[z(h)] = mu + h E[f] + (h^2/2) (J E[f] + E[df/dt])
/// with f = K z + D s(z, T - t), K = -F, D = G G^T and J = K + D ds/dz.
/// For the Gaussian score ds/dz = -Sigma^-1 and the time derivative comes
/// from d(Sigma^-1)/dt = -Sigma^-1 Sigma' Sigma^-1 and mu' = F mu, all in
/// closed form. The remainder is O(h^3).
std::vector<Vec2> ito_taylor_mean(const PsldParams& p, const GaussianDataSpec& data, ProbeScore score, double tau,
                                  double h);

/// Exact mean after one step of the reverse SDE itself (not a scheme):
/// the forward marginal mean at tau - h for the Gaussian score,
/// e^{K h} mu for the zero score.
std::vector<Vec2> exact_flow_mean(const PsldParams& p, const GaussianDataSpec& data, ProbeScore score, double tau,
                                  double h);

struct TruncationReport {
    SchemeSpec scheme;
    ProbeScore score = ProbeScore::gaussian;
    /// Reverse time of the start; chains start at forward time T - t0.
    double t0 = 0.0;
    /// Decreasing.
    std::vector<double> h_values;
    /// |E[scheme step] - Ito-Taylor prediction|, from exact moment propagation.
    std::vector<double> residual_x;
    std::vector<double> residual_m;
    /// Same over the joint (x, m) mean.
    std::vector<double> residual_z;
    /// |E[exact flow] - Ito-Taylor prediction|: the O(h^3) expansion remainder.
    std::vector<double> reference_x;
    std::vector<double> reference_m;
    std::vector<double> reference_z;
    /// Frobenius distance between the scheme's and the exact flow's one-step
    /// covariance. Reported only.
    std::vector<double> cov_residual;
    /// Monte Carlo estimate of residual_x and its standard error.
    std::vector<double> mc_residual_x;
    std::vector<double> mc_stderr_x;
    std::optional<double> fitted_slope_x;
    std::optional<double> fitted_slope_m;
    std::optional<double> fitted_slope_z;
    std::optional<double> reference_slope_x;
    std::optional<double> reference_slope_m;
    std::optional<double> reference_slope_z;
};

struct ProbeOptions {
    std::size_t n_chains = 100000;
    std::uint64_t seed = 0;
    Executor exec{};
};

/// One composed step of `spec` of every size in h_values, from the exact
/// marginal at forward time T - t0. Requires t0 + max(h) <= T and h_values
/// strictly decreasing. Slopes are least-squares fits on log-log points
/// (absent when some residual is exactly zero).
TruncationReport truncation_residual(const PsldParams& p, const GaussianDataSpec& data, const SchemeSpec& spec,
                                     ProbeScore score, double t0, const std::vector<double>& h_values,
                                     const ProbeOptions& opts);

/// The NBAO position update evaluates s^x at the already-updated momentum;
/// RBAO reuses s^x at the old one. On the Gaussian oracle their one-step
/// x-means differ by
///   h beta Gamma E[s^x(x, m_{t+h}) - s^x(x, m_t)]
///     = h beta Gamma (-P_xm) (h beta/2) (mu_x + 2 nu mu_m)
/// to leading order, where P = Sigma^-1 at the start (E[s^m] vanishes there).
struct ScoreLagComparison {
    double h = 0.0;
    /// Per dimension.
    std::vector<double> analytic;
    std::vector<double> measured;
    std::vector<double> std_error;
};

/// Analytic term only.
std::vector<double> score_lag_term(const PsldParams& p, const GaussianDataSpec& data, double t0, double h);

/// NBAO and RBAO (naive O noise) from the same initial chains and the same
/// noise; `measured` is the mean per-chain x difference NBAO - RBAO.
ScoreLagComparison score_lag_comparison(const PsldParams& p, const GaussianDataSpec& data, double t0, double h,
                                        const ProbeOptions& opts);

}  // namespace psld::analysis
