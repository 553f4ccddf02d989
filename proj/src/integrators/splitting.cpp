#include "psld/splitting.hpp"

#include <cmath>
#include <string>

#include "psld/errors.hpp"
#include "psld/gaussian.hpp"

namespace psld {

StepContext make_step_context(double t_max, double t_from, double t_to) {
    if (!(t_to < t_from)) {
        throw ContractError("step needs h = t_from - t_to > 0");
    }
    return {t_max, t_from, t_to};
}

OuCoefficients ou_coefficients(const PsldParams& p, const StepContext& ctx, std::optional<double> lambda_s) {
    const double h = ctx.h();
    const double bg = p.beta * p.gamma_cap;
    const double bn = p.beta * p.nu;
    const double noise_time = lambda_s ? ctx.t_bar() * *lambda_s : h;
    return {std::exp(-0.5 * h * bg), std::sqrt(-std::expm1(-noise_time * bg)), std::exp(-0.5 * h * bn),
            std::sqrt(p.mass()) * std::sqrt(-std::expm1(-h * bn))};
}

JointState step_O(const PsldParams& p, const JointState& s, const StepContext& ctx, std::optional<double> lambda_s,
                  NoiseSource& noise, const Executor& exec) {
    check_shape(s);
    const OuCoefficients k = ou_coefficients(p, ctx, lambda_s);
    JointState out = s;
    const std::size_t d = s.dim;
    exec.for_range(s.n_chains, [&](std::size_t begin, std::size_t end) {
        std::vector<double> eps(2 * d);
        for (std::size_t c = begin; c < end; ++c) {
            noise.normals(c, eps);
            for (std::size_t i = 0; i < d; ++i) {
                const std::size_t j = c * d + i;
                out.x[j] = k.decay_x * s.x[j] + k.noise_x * eps[2 * i];
                out.m[j] = k.decay_m * s.m[j] + k.noise_m * eps[2 * i + 1];
            }
        }
    });
    return out;
}

JointState step_A(const PsldParams& p, const JointState& s, const ScoreEval& se, double h) {
    check_shape(s, se);
    const double c = 0.5 * h * p.beta;
    const double g2 = 2.0 * p.gamma_cap;
    JointState out = s;
    for (std::size_t j = 0; j < s.size(); ++j) {
        out.x[j] = s.x[j] + c * (g2 * s.x[j] - p.m_inv * s.m[j] + g2 * se.sx[j]);
    }
    return out;
}

JointState step_B(const PsldParams& p, const JointState& s, const ScoreEval& se, double h) {
    check_shape(s, se);
    const double c = 0.5 * h * p.beta;
    const double n2 = 2.0 * p.nu;
    const double mn2 = 2.0 * p.mass() * p.nu;
    JointState out = s;
    for (std::size_t j = 0; j < s.size(); ++j) {
        out.m[j] = s.m[j] + c * (s.x[j] + n2 * s.m[j] + mn2 * se.sm[j]);
    }
    return out;
}

JointState step_EM(const PsldParams& p, const JointState& s, const ScoreEval& se, double h, NoiseSource& noise,
                   const Executor& exec) {
    check_shape(s, se);
    const double c = 0.5 * h * p.beta;
    const Vec2 g = diffusion_diag(p);
    const double sx_noise = g.x * std::sqrt(h);
    const double sm_noise = g.m * std::sqrt(h);
    const double g2 = 2.0 * p.gamma_cap;
    const double mn2 = 2.0 * p.mass() * p.nu;
    JointState out = s;
    const std::size_t d = s.dim;
    exec.for_range(s.n_chains, [&](std::size_t begin, std::size_t end) {
        std::vector<double> eps(2 * d);
        for (std::size_t ch = begin; ch < end; ++ch) {
            noise.normals(ch, eps);
            for (std::size_t i = 0; i < d; ++i) {
                const std::size_t j = ch * d + i;
                const double x = s.x[j];
                const double m = s.m[j];
                out.x[j] = x + c * (p.gamma_cap * x - p.m_inv * m + g2 * se.sx[j]) + sx_noise * eps[2 * i];
                out.m[j] = m + c * (x + p.nu * m + mn2 * se.sm[j]) + sm_noise * eps[2 * i + 1];
            }
        }
    });
    return out;
}

StepResult step_scheme(const SchemeSpec& spec, const PsldParams& p, ScoreRun& run, const JointState& s,
                       const StepContext& ctx, NoiseSource& noise, const Executor& exec) {
    validate_scheme(spec);
    const double h = ctx.h();
    if (!(h > 0.0)) {
        throw ContractError("step_scheme needs h > 0");
    }
    const double now = ctx.t_from;
    const std::optional<double> lam = spec.lambda_s;
    const std::size_t nfe_before = run.nfe();
    JointState out;

    switch (spec.scheme) {
        case Scheme::EM: {
            const ScoreEval se = run.call(s, now);
            out = step_EM(p, s, se, h, noise, exec);
            break;
        }
        case Scheme::NOBA: {
            const JointState o = step_O(p, s, ctx, std::nullopt, noise, exec);
            const JointState b = step_B(p, o, run.call(o, now), h);
            out = step_A(p, b, run.call(b, now), h);
            break;
        }
        case Scheme::NBAO: {
            const JointState b = step_B(p, s, run.call(s, now), h);
            const JointState a = step_A(p, b, run.call(b, now), h);
            out = step_O(p, a, ctx, std::nullopt, noise, exec);
            break;
        }
        case Scheme::NOBAB: {
            const JointState o = step_O(p, s, ctx, std::nullopt, noise, exec);
            const JointState b1 = step_B(p, o, run.call(o, now), 0.5 * h);
            const JointState a = step_A(p, b1, run.call(b1, now), h);
            out = step_B(p, a, run.call(a, now), 0.5 * h);
            break;
        }
        case Scheme::ROBA: {
            const JointState o = step_O(p, s, ctx, lam, noise, exec);
            const ScoreEval shared = run.call(o, now);
            const JointState b = step_B(p, o, shared, h);
            out = step_A(p, b, shared, h);
            break;
        }
        case Scheme::RBAO: {
            const ScoreEval shared = run.call(s, now);
            const JointState b = step_B(p, s, shared, h);
            const JointState a = step_A(p, b, shared, h);
            out = step_O(p, a, ctx, lam, noise, exec);
            break;
        }
        case Scheme::ROBAB: {
            const JointState o = step_O(p, s, ctx, lam, noise, exec);
            const ScoreEval first = run.call(o, now);
            const JointState b1 = step_B(p, o, first, 0.5 * h);
            const JointState a = step_A(p, b1, first, h);
            out = step_B(p, a, run.call(a, ctx.t_to), 0.5 * h);
            break;
        }
    }
    out.t = ctx.t_to;
    return {std::move(out), run.nfe() - nfe_before};
}

JointState denoise_last_step(const PsldParams& p, ScoreRun& run, const JointState& s) {
    const double eps = p.eps_cutoff;
    if (std::abs(s.t - eps) > 1e-12 * std::max(1.0, eps)) {
        throw ContractError("denoise_last_step requires the state at t = eps_cutoff, got t = " + std::to_string(s.t));
    }
    const ScoreEval se = run.call(s, eps);
    const double c = 0.5 * p.beta * eps;
    const double g2 = 2.0 * p.gamma_cap;
    const double mn2 = 2.0 * p.mass() * p.nu;
    JointState out = s;
    for (std::size_t j = 0; j < s.size(); ++j) {
        const double x = s.x[j];
        const double m = s.m[j];
        out.x[j] = x + c * (p.gamma_cap * x - p.m_inv * m + g2 * se.sx[j]);
        out.m[j] = m + c * (x + p.nu * m + mn2 * se.sm[j]);
    }
    out.t = 0.0;
    return out;
}

SampleResult sample_from(const PsldParams& p, ScoreRun& run, const SchemeSpec& spec, const TimeGrid& grid,
                         JointState init, NoiseSource& noise, bool keep_trace, const Executor& exec) {
    validate_params(p);
    validate_scheme(spec);
    if (grid.times.size() < 2) {
        throw ValidationError("sample needs a grid with at least one step");
    }
    const std::size_t nfe_before = run.nfe();
    SampleResult res;
    res.state = std::move(init);
    res.state.t = grid.times.front();
    for (std::size_t k = 0; k + 1 < grid.times.size(); ++k) {
        const StepContext ctx = make_step_context(p.t_max, grid.times[k], grid.times[k + 1]);
        const std::string where =
            "step " + std::to_string(k) + " (t = " + std::to_string(ctx.t_to) + ", scheme " + to_string(spec.scheme) + ")";
        StepResult step;
        try {
            step = step_scheme(spec, p, run, res.state, ctx, noise, exec);
        } catch (const NumericalError& e) {
            throw NumericalError(where + ": " + e.what());
        }
        check_finite(step.state, where);
        res.state = std::move(step.state);
        if (keep_trace) {
            res.trace.push_back(res.state);
        }
    }
    if (spec.denoise_last) {
        res.state = denoise_last_step(p, run, res.state);
        check_finite(res.state, "denoising step");
        if (keep_trace) {
            res.trace.push_back(res.state);
        }
    }
    res.total_nfe = run.nfe() - nfe_before;
    return res;
}

SampleResult sample(const PsldParams& p, ScoreProvider& provider, const SchemeSpec& spec, const TimeGrid& grid,
                    const SampleOptions& opts) {
    validate_params(p);
    if (opts.n_chains == 0) {
        throw ValidationError("n_chains must be > 0");
    }
    ChainStreams rng(opts.seed, opts.n_chains);
    JointState init = sample_moments(stationary_moments(p), opts.n_chains, grid.times.front(), rng, opts.exec);
    ScoreRun run(provider);
    return sample_from(p, run, spec, grid, std::move(init), rng, opts.keep_trace, opts.exec);
}

}  // namespace psld
