#include "psld/analysis/propagate.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "psld/errors.hpp"
#include "psld/splitting.hpp"

namespace psld::analysis {

namespace {

// Probe chains: 0 origin, 1 unit x, 2 unit m, 3 unit x-noise, 4 unit m-noise,
// 5 at (2, -3) (linearity check).
constexpr std::size_t kProbes = 6;

class BasisNoise final : public NoiseSource {
public:
    void normals(std::size_t chain, std::span<double> out) override {
        for (std::size_t k = 0; k < out.size(); ++k) {
            const bool x_slot = k % 2 == 0;
            out[k] = (chain == 3 && x_slot) || (chain == 4 && !x_slot) ? 1.0 : 0.0;
        }
        if (++calls_[chain] > 1) {
            throw ContractError("propagate_moments: more than one noise draw per step");
        }
    }
    void reset() { calls_.fill(0); }

private:
    std::array<int, kProbes> calls_{};
};

using StepFn = std::function<JointState(const JointState&, NoiseSource&)>;

void apply_affine(const StepFn& step, std::size_t d, GaussianMoments& mom) {
    JointState probes(kProbes, d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        probes.x[1 * d + i] = 1.0;
        probes.m[2 * d + i] = 1.0;
        probes.x[5 * d + i] = 2.0;
        probes.m[5 * d + i] = -3.0;
    }
    BasisNoise noise;
    const JointState r = step(probes, noise);
    for (std::size_t i = 0; i < d; ++i) {
        auto at = [&](std::size_t c) { return Vec2{r.x[c * d + i], r.m[c * d + i]}; };
        const Vec2 b = at(0);
        const Vec2 c1 = at(1) - b;
        const Vec2 c2 = at(2) - b;
        const Vec2 n1 = at(3) - b;
        const Vec2 n2 = at(4) - b;
        const Vec2 lin = at(5) - b - 2.0 * c1 + 3.0 * c2;
        const double scale = 1.0 + std::abs(b.x) + std::abs(b.m) + std::abs(c1.x) + std::abs(c1.m) +
                             std::abs(c2.x) + std::abs(c2.m);
        if (std::abs(lin.x) + std::abs(lin.m) > 1e-9 * scale) {
            throw ContractError("propagate_moments: score provider is not affine in the state");
        }
        const Mat2 a{c1.x, c2.x, c1.m, c2.m};
        const Mat2 c{n1.x, n2.x, n1.m, n2.m};
        mom.mu[i] = a * mom.mu[i] + b;
        mom.sigma[i] = symmetrized(a * mom.sigma[i] * a.transpose() + c * c.transpose());
    }
}

}  // namespace

GaussianMoments propagate_step(const PsldParams& p, ScoreProvider& provider, const SchemeSpec& spec,
                               double t_from, double t_to, const GaussianMoments& init) {
    validate_params(p);
    validate_scheme(spec);
    if (init.dim() != p.dim) {
        throw ValidationError("propagate_moments: moments dimension does not match params");
    }
    GaussianMoments mom = init;
    ScoreRun run(provider);
    const StepContext ctx = make_step_context(p.t_max, t_from, t_to);
    apply_affine(
        [&](const JointState& s, NoiseSource& noise) {
            JointState in = s;
            in.t = t_from;
            return step_scheme(spec, p, run, in, ctx, noise).state;
        },
        p.dim, mom);
    return mom;
}

GaussianMoments propagate_moments(const PsldParams& p, ScoreProvider& provider, const SchemeSpec& spec,
                                  const TimeGrid& grid, const GaussianMoments& init) {
    validate_params(p);
    validate_scheme(spec);
    if (grid.times.size() < 2) {
        throw ValidationError("propagate_moments needs a grid with at least one step");
    }
    if (init.dim() != p.dim) {
        throw ValidationError("propagate_moments: moments dimension does not match params");
    }
    GaussianMoments mom = init;
    ScoreRun run(provider);
    for (std::size_t k = 0; k + 1 < grid.times.size(); ++k) {
        const StepContext ctx = make_step_context(p.t_max, grid.times[k], grid.times[k + 1]);
        apply_affine(
            [&](const JointState& s, NoiseSource& noise) {
                JointState in = s;
                in.t = ctx.t_from;
                return step_scheme(spec, p, run, in, ctx, noise).state;
            },
            p.dim, mom);
    }
    if (spec.denoise_last) {
        apply_affine(
            [&](const JointState& s, NoiseSource&) {
                JointState in = s;
                in.t = p.eps_cutoff;
                return denoise_last_step(p, run, in);
            },
            p.dim, mom);
    }
    return mom;
}

GaussianMoments propagate_moments(const PsldParams& p, ScoreProvider& provider, const SchemeSpec& spec,
                                  const TimeGrid& grid) {
    return propagate_moments(p, provider, spec, grid, stationary_moments(p));
}

}  // namespace psld::analysis
