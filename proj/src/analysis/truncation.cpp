#include "psld/analysis/truncation.hpp"

#include <cmath>
#include <memory>

#include "psld/analysis/curves.hpp"
#include "psld/analysis/propagate.hpp"
#include "psld/errors.hpp"
#include "psld/splitting.hpp"

namespace psld::analysis {

std::string to_string(ProbeScore s) {
    return s == ProbeScore::zero ? "zero" : "gaussian";
}

ProbeScore parse_probe_score(std::string_view name) {
    if (name == "gaussian") return ProbeScore::gaussian;
    if (name == "zero") return ProbeScore::zero;
    throw ValidationError("unknown probe score '" + std::string(name) + "' (expected gaussian or zero)");
}

namespace {

void check_probe(const PsldParams& p, const GaussianDataSpec& data, double tau, double h) {
    validate_params(p);
    validate_data(p, data);
    if (!(h > 0.0) || !(tau - h >= 0.0) || !(tau <= p.t_max)) {
        throw ValidationError("truncation probe needs h > 0 and t0 + h <= T");
    }
}

}  // namespace

std::vector<Vec2> ito_taylor_mean(const PsldParams& p, const GaussianDataSpec& data, ProbeScore score, double tau,
                                  double h) {
    check_probe(p, data, tau, h);
    const Mat2 k = -1.0 * drift_matrix(p);
    const Mat2 d = diffusion_covariance(p);
    std::vector<Vec2> out(p.dim);
    for (std::size_t i = 0; i < p.dim; ++i) {
        const BlockMoments at = forward_block(p, data.mu0_x[i], data.var0_x[i], tau);
        const Vec2 mu = at.mu;
        if (score == ProbeScore::zero) {
            const Vec2 f = k * mu;
            out[i] = mu + h * f + (0.5 * h * h) * (k * f);
            continue;
        }
        const BlockMoments rate = forward_block_rate(p, at);
        const Mat2 prec = inverse(at.sigma);
        // At the marginal itself E[s] = 0, so E[f] = K mu.
        const Vec2 f = k * mu;
        const Mat2 jac = k - d * prec;
        // d/dt_rev s = -d/dtau s, and E[d/dtau s] = P mu' at the marginal.
        const Vec2 df_dt = -1.0 * (d * (prec * rate.mu));
        out[i] = mu + h * f + (0.5 * h * h) * (jac * f + df_dt);
    }
    return out;
}

std::vector<Vec2> exact_flow_mean(const PsldParams& p, const GaussianDataSpec& data, ProbeScore score, double tau,
                                  double h) {
    check_probe(p, data, tau, h);
    std::vector<Vec2> out(p.dim);
    const Mat2 flow = mat2_exp(-1.0 * drift_matrix(p), h);
    for (std::size_t i = 0; i < p.dim; ++i) {
        if (score == ProbeScore::zero) {
            out[i] = flow * forward_block(p, data.mu0_x[i], data.var0_x[i], tau).mu;
        } else {
            out[i] = forward_block(p, data.mu0_x[i], data.var0_x[i], tau - h).mu;
        }
    }
    return out;
}

namespace {

// Covariance after one step of the exact reverse flow.
Mat2 exact_flow_cov(const PsldParams& p, const GaussianDataSpec& data, ProbeScore score, double tau, double h,
                    std::size_t i) {
    if (score == ProbeScore::gaussian) {
        return forward_block(p, data.mu0_x[i], data.var0_x[i], tau - h).sigma;
    }
    // dS/dt = K S + S K^T + D, integrated by RK4.
    const Mat2 k = -1.0 * drift_matrix(p);
    const Mat2 d = diffusion_covariance(p);
    auto rhs = [&](const Mat2& s) { return k * s + s * k.transpose() + d; };
    Mat2 s = forward_block(p, data.mu0_x[i], data.var0_x[i], tau).sigma;
    const int steps = 2000;
    const double dt = h / steps;
    for (int n = 0; n < steps; ++n) {
        const Mat2 k1 = rhs(s);
        const Mat2 k2 = rhs(s + (0.5 * dt) * k1);
        const Mat2 k3 = rhs(s + (0.5 * dt) * k2);
        const Mat2 k4 = rhs(s + dt * k3);
        s = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return s;
}

double norm_x(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += (a[i].x - b[i].x) * (a[i].x - b[i].x);
    }
    return std::sqrt(acc);
}

double norm_m(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += (a[i].m - b[i].m) * (a[i].m - b[i].m);
    }
    return std::sqrt(acc);
}

std::optional<double> try_slope(const std::vector<double>& h, const std::vector<double>& r) {
    for (const double v : r) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            return std::nullopt;
        }
    }
    return loglog_slope(h, r);
}

std::unique_ptr<ScoreProvider> probe_provider(const PsldParams& p, const GaussianDataSpec& data, ProbeScore score,
                                              const Executor& exec) {
    if (score == ProbeScore::zero) {
        return std::make_unique<ZeroScoreProvider>();
    }
    return std::make_unique<GaussianScoreProvider>(p, data, exec);
}

}  // namespace

TruncationReport truncation_residual(const PsldParams& p, const GaussianDataSpec& data, const SchemeSpec& spec,
                                     ProbeScore score, double t0, const std::vector<double>& h_values,
                                     const ProbeOptions& opts) {
    validate_params(p);
    validate_data(p, data);
    validate_scheme(spec);
    if (h_values.size() < 2) {
        throw ValidationError("truncation_residual needs at least two step sizes");
    }
    for (std::size_t k = 1; k < h_values.size(); ++k) {
        if (!(h_values[k] < h_values[k - 1])) {
            throw ValidationError("truncation_residual: h_values must be strictly decreasing");
        }
    }
    if (!(t0 >= 0.0) || !(t0 + h_values.front() <= p.t_max)) {
        throw ValidationError("truncation_residual: t0 + max(h) must not exceed T");
    }
    if (opts.n_chains < 2) {
        throw ValidationError("truncation_residual needs at least two chains");
    }
    const double tau = p.t_max - t0;
    auto provider = probe_provider(p, data, score, opts.exec);
    const GaussianMoments start = forward_moments(p, data, tau);
    SchemeSpec one_step = spec;
    one_step.denoise_last = false;

    TruncationReport rep;
    rep.scheme = spec;
    rep.score = score;
    rep.t0 = t0;
    rep.h_values = h_values;
    for (const double h : h_values) {
        const std::vector<Vec2> pred = ito_taylor_mean(p, data, score, tau, h);
        const std::vector<Vec2> flow = exact_flow_mean(p, data, score, tau, h);
        const GaussianMoments got = propagate_step(p, *provider, one_step, tau, tau - h, start);
        rep.residual_x.push_back(norm_x(got.mu, pred));
        rep.residual_m.push_back(norm_m(got.mu, pred));
        rep.residual_z.push_back(std::hypot(rep.residual_x.back(), rep.residual_m.back()));
        rep.reference_x.push_back(norm_x(flow, pred));
        rep.reference_m.push_back(norm_m(flow, pred));
        rep.reference_z.push_back(std::hypot(rep.reference_x.back(), rep.reference_m.back()));
        double cov = 0.0;
        for (std::size_t i = 0; i < p.dim; ++i) {
            const Mat2 diff = got.sigma[i] - exact_flow_cov(p, data, score, tau, h, i);
            cov += diff.a11 * diff.a11 + diff.a12 * diff.a12 + diff.a21 * diff.a21 + diff.a22 * diff.a22;
        }
        rep.cov_residual.push_back(std::sqrt(cov));

        ChainStreams rng(opts.seed, opts.n_chains);
        const JointState init = perturbation_sample(p, data, tau, opts.n_chains, rng, opts.exec);
        ScoreRun run(*provider);
        const StepContext ctx = make_step_context(p.t_max, tau, tau - h);
        const JointState out = step_scheme(one_step, p, run, init, ctx, rng, opts.exec).state;
        double acc = 0.0, var = 0.0;
        const double n = static_cast<double>(opts.n_chains);
        for (std::size_t i = 0; i < p.dim; ++i) {
            double sum = 0.0, sq = 0.0;
            for (std::size_t c = 0; c < opts.n_chains; ++c) {
                sum += out.x[c * p.dim + i];
            }
            const double mean = sum / n;
            for (std::size_t c = 0; c < opts.n_chains; ++c) {
                const double dx = out.x[c * p.dim + i] - mean;
                sq += dx * dx;
            }
            acc += (mean - pred[i].x) * (mean - pred[i].x);
            var += sq / (n - 1.0) / n;
        }
        rep.mc_residual_x.push_back(std::sqrt(acc));
        rep.mc_stderr_x.push_back(std::sqrt(var));
    }
    rep.fitted_slope_x = try_slope(h_values, rep.residual_x);
    rep.fitted_slope_m = try_slope(h_values, rep.residual_m);
    rep.fitted_slope_z = try_slope(h_values, rep.residual_z);
    rep.reference_slope_z = try_slope(h_values, rep.reference_z);
    rep.reference_slope_x = try_slope(h_values, rep.reference_x);
    rep.reference_slope_m = try_slope(h_values, rep.reference_m);
    return rep;
}

std::vector<double> score_lag_term(const PsldParams& p, const GaussianDataSpec& data, double t0, double h) {
    const double tau = p.t_max - t0;
    check_probe(p, data, tau, h);
    std::vector<double> out(p.dim);
    for (std::size_t i = 0; i < p.dim; ++i) {
        const BlockMoments at = forward_block(p, data.mu0_x[i], data.var0_x[i], tau);
        const Mat2 prec = inverse(at.sigma);
        const double dm = 0.5 * h * p.beta * (at.mu.x + 2.0 * p.nu * at.mu.m);
        out[i] = h * p.beta * p.gamma_cap * (-prec.a12) * dm;
    }
    return out;
}

ScoreLagComparison score_lag_comparison(const PsldParams& p, const GaussianDataSpec& data, double t0, double h,
                                        const ProbeOptions& opts) {
    const double tau = p.t_max - t0;
    check_probe(p, data, tau, h);
    if (opts.n_chains < 2) {
        throw ValidationError("score_lag_comparison needs at least two chains");
    }
    GaussianScoreProvider provider(p, data, opts.exec);
    const StepContext ctx = make_step_context(p.t_max, tau, tau - h);
    auto run_one = [&](Scheme s) {
        ChainStreams rng(opts.seed, opts.n_chains);
        const JointState init = perturbation_sample(p, data, tau, opts.n_chains, rng, opts.exec);
        ScoreRun run(provider);
        return step_scheme({s, std::nullopt, false}, p, run, init, ctx, rng, opts.exec).state;
    };
    const JointState naive = run_one(Scheme::NBAO);
    const JointState reduced = run_one(Scheme::RBAO);

    ScoreLagComparison out;
    out.h = h;
    out.analytic = score_lag_term(p, data, t0, h);
    const double n = static_cast<double>(opts.n_chains);
    for (std::size_t i = 0; i < p.dim; ++i) {
        double sum = 0.0;
        for (std::size_t c = 0; c < opts.n_chains; ++c) {
            sum += naive.x[c * p.dim + i] - reduced.x[c * p.dim + i];
        }
        const double mean = sum / n;
        double sq = 0.0;
        for (std::size_t c = 0; c < opts.n_chains; ++c) {
            const double dv = naive.x[c * p.dim + i] - reduced.x[c * p.dim + i] - mean;
            sq += dv * dv;
        }
        out.measured.push_back(mean);
        out.std_error.push_back(std::sqrt(sq / (n - 1.0) / n));
    }
    return out;
}

}  // namespace psld::analysis
