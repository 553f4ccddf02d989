#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "psld/parallel.hpp"
#include "psld/params.hpp"
#include "psld/rng.hpp"
#include "psld/scheme.hpp"
#include "psld/score_provider.hpp"
#include "psld/state.hpp"
#include "psld/time_grid.hpp"

namespace psld {

/// One reverse-time step from forward time `t_from` down to `t_to`.
///
/// In reverse time tau = T - t the step starts at tau = T - t_from and has
/// size h = t_from - t_to; the score is conditioned on t_from (= T - tau),
/// and on t_to (= T - (tau + h)) where a scheme asks for the shifted time.
struct StepContext {
    double t_max = 1.0;
    double t_from = 1.0;
    double t_to = 0.0;

    double h() const { return t_from - t_to; }
    double reverse_time() const { return t_max - t_from; }
    /// Midpoint ((T - tau) + (T - tau - h)) / 2 of the two forward times.
    double t_bar() const { return 0.5 * (t_from + t_to); }
};

StepContext make_step_context(double t_max, double t_from, double t_to);

/// Coefficients of the exact OU step x' = decay_x x + noise_x eps_x,
/// m' = decay_m m + noise_m eps_m.
struct OuCoefficients {
    double decay_x;
    double noise_x;
    double decay_m;
    double noise_m;
};

/// Naive noise uses sqrt(1 - e^{-h beta Gamma}); with lambda_s the position
/// noise becomes sqrt(1 - e^{-t_bar lambda_s beta Gamma}). Momentum is never scaled.
OuCoefficients ou_coefficients(const PsldParams& p, const StepContext& ctx, std::optional<double> lambda_s);

/// Exact OU piece, with fresh normals (one pair per dimension per chain).
JointState step_O(const PsldParams& p, const JointState& s, const StepContext& ctx, std::optional<double> lambda_s,
                  NoiseSource& noise, const Executor& exec = {});

/// Euler step of the A piece: x += (h beta/2) (2 Gamma x - M^-1 m + 2 Gamma s^x).
JointState step_A(const PsldParams& p, const JointState& s, const ScoreEval& se, double h);

/// Euler step of the B piece: m += (h beta/2) (x + 2 nu m + 2 M nu s^m).
JointState step_B(const PsldParams& p, const JointState& s, const ScoreEval& se, double h);

/// Euler-Maruyama step of the full reverse SDE.
JointState step_EM(const PsldParams& p, const JointState& s, const ScoreEval& se, double h, NoiseSource& noise,
                   const Executor& exec = {});

struct StepResult {
    JointState state;
    std::size_t nfe = 0;
};

/// Applies one composed step of `spec.scheme`; the returned state carries
/// forward time ctx.t_to.
StepResult step_scheme(const SchemeSpec& spec, const PsldParams& p, ScoreRun& run, const JointState& s,
                       const StepContext& ctx, NoiseSource& noise, const Executor& exec = {});

/// Final Euler update from eps to 0 with the score conditioned at eps.
/// Requires s.t == p.eps_cutoff. Costs one NFE.
JointState denoise_last_step(const PsldParams& p, ScoreRun& run, const JointState& s);

struct SampleOptions {
    std::size_t n_chains = 1000;
    std::uint64_t seed = 0;
    bool keep_trace = false;
    Executor exec{};
};

struct SampleResult {
    JointState state;
    std::size_t total_nfe = 0;
    /// State after each step (and after denoising), when requested.
    std::vector<JointState> trace;
};

/// Draws chains from N(0, diag(1, M)), then applies step_scheme over the
/// grid and optionally the denoising step. Chain c uses Philox stream
/// (seed, c) throughout, so the result depends only on (inputs, seed).
/// Throws NumericalError naming the step index on the first non-finite state.
SampleResult sample(const PsldParams& p, ScoreProvider& provider, const SchemeSpec& spec, const TimeGrid& grid,
                    const SampleOptions& opts);

/// Same, from a caller-supplied initial state at grid.times.front() and noise source.
SampleResult sample_from(const PsldParams& p, ScoreRun& run, const SchemeSpec& spec, const TimeGrid& grid,
                         JointState init, NoiseSource& noise, bool keep_trace = false, const Executor& exec = {});

}  // namespace psld
