#include "psld/analysis/curves.hpp"

#include <cmath>

#include "psld/analysis/moments.hpp"
#include "psld/analysis/propagate.hpp"
#include "psld/errors.hpp"
#include "psld/splitting.hpp"

namespace psld::analysis {

std::string to_string(Metric m) {
    switch (m) {
        case Metric::w2: return "w2";
        case Metric::mean_abs: return "mean_abs";
        case Metric::cov_fro: return "cov_fro";
    }
    return "?";
}

Metric parse_metric(std::string_view name) {
    if (name == "w2") return Metric::w2;
    if (name == "mean_abs") return Metric::mean_abs;
    if (name == "cov_fro") return Metric::cov_fro;
    throw ValidationError("unknown metric '" + std::string(name) + "' (expected w2, mean_abs or cov_fro)");
}

std::string to_string(Estimator e) {
    return e == Estimator::exact ? "exact" : "monte_carlo";
}

Estimator parse_estimator(std::string_view name) {
    if (name == "monte_carlo") return Estimator::monte_carlo;
    if (name == "exact") return Estimator::exact;
    throw ValidationError("unknown estimator '" + std::string(name) + "' (expected monte_carlo or exact)");
}

double moment_error(Metric metric, const GaussianMoments& got, const GaussianMoments& want) {
    switch (metric) {
        case Metric::w2: return gaussian_w2(got, want);
        case Metric::mean_abs: return mean_x_error(got, want);
        case Metric::cov_fro: return covariance_fro_error(got, want);
    }
    return 0.0;
}

GaussianMoments sampling_target(const PsldParams& p, const GaussianDataSpec& data, bool denoise_last) {
    return forward_moments(p, data, denoise_last ? 0.0 : p.eps_cutoff);
}

GaussianMoments terminal_moments(const PsldParams& p, ScoreProvider& provider, const SchemeSpec& spec,
                                 const TimeGrid& grid, const RunOptions& opts) {
    if (opts.estimator == Estimator::exact) {
        return propagate_moments(p, provider, spec, grid);
    }
    SampleOptions so;
    so.n_chains = opts.n_chains;
    so.seed = opts.seed;
    so.exec = opts.exec;
    return empirical_moments(sample(p, provider, spec, grid, so).state);
}

namespace {

SchemeSpec resolve_lambda(SchemeSpec spec, std::size_t n, bool from_table) {
    if (from_table && is_reduced(spec.scheme) && !spec.lambda_s) {
        spec.lambda_s = default_lambda_s(spec.scheme, n);
    }
    return spec;
}

std::size_t expected_nfe(const SchemeSpec& spec, std::size_t n) {
    return n * nfe_per_step(spec.scheme) + (spec.denoise_last ? 1 : 0);
}

}  // namespace

ErrorCurve weak_error_curve(const PsldParams& p, const GaussianDataSpec& data, ScoreProvider& provider,
                            const SchemeSpec& spec, const std::vector<std::size_t>& budgets,
                            const RunOptions& opts, Metric metric) {
    validate_params(p);
    validate_data(p, data);
    validate_scheme(spec);
    if (budgets.empty()) {
        throw ValidationError("weak_error_curve: empty budget list");
    }
    for (std::size_t k = 1; k < budgets.size(); ++k) {
        if (budgets[k] <= budgets[k - 1]) {
            throw ValidationError("weak_error_curve: budgets must be strictly increasing");
        }
    }
    const GaussianMoments target = sampling_target(p, data, spec.denoise_last);
    ErrorCurve curve{spec, metric, {}};
    for (const std::size_t n : budgets) {
        const SchemeSpec s = resolve_lambda(spec, n, opts.lambda_from_table);
        const TimeGrid grid = build_time_grid(p.t_max, p.eps_cutoff, n, opts.striding);
        const GaussianMoments got = terminal_moments(p, provider, s, grid, opts);
        curve.points.push_back({n, expected_nfe(s, n), s.lambda_s, moment_error(metric, got, target)});
    }
    return curve;
}

ErrorCurve weak_error_curve(const PsldParams& p, const GaussianDataSpec& data, const SchemeSpec& spec,
                            const std::vector<std::size_t>& budgets, const RunOptions& opts, Metric metric) {
    GaussianScoreProvider provider(p, data, opts.exec);
    return weak_error_curve(p, data, provider, spec, budgets, opts, metric);
}

LambdaSweep lambda_sweep(const PsldParams& p, const GaussianDataSpec& data, ScoreProvider& provider,
                         Scheme scheme, std::size_t n_steps, const std::vector<double>& grid,
                         const RunOptions& opts, Metric metric, bool denoise_last) {
    validate_params(p);
    validate_data(p, data);
    if (!is_reduced(scheme)) {
        throw ValidationError("lambda_sweep needs a reduced scheme, got " + to_string(scheme));
    }
    if (grid.empty()) {
        throw ValidationError("lambda_sweep: empty lambda_s grid");
    }
    const GaussianMoments target = sampling_target(p, data, denoise_last);
    const TimeGrid tg = build_time_grid(p.t_max, p.eps_cutoff, n_steps, opts.striding);
    LambdaSweep out;
    out.scheme = {scheme, std::nullopt, denoise_last};
    out.n_steps = n_steps;
    out.metric = metric;
    for (const double lam : grid) {
        const SchemeSpec spec{scheme, lam, denoise_last};
        validate_scheme(spec);
        const double err = moment_error(metric, terminal_moments(p, provider, spec, tg, opts), target);
        out.points.push_back({lam, err});
    }
    bool have = false;
    for (const SweepPoint& pt : out.points) {
        if (!have || pt.error < out.best_error || (pt.error == out.best_error && pt.lambda_s < out.best_lambda)) {
            out.best_lambda = pt.lambda_s;
            out.best_error = pt.error;
            have = true;
        }
    }
    out.scheme.lambda_s = out.best_lambda;
    return out;
}

LambdaSweep lambda_sweep(const PsldParams& p, const GaussianDataSpec& data, Scheme scheme, std::size_t n_steps,
                         const std::vector<double>& grid, const RunOptions& opts, Metric metric, bool denoise_last) {
    GaussianScoreProvider provider(p, data, opts.exec);
    return lambda_sweep(p, data, provider, scheme, n_steps, grid, opts, metric, denoise_last);
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0) || !(hi >= lo) || count == 0) {
        throw ValidationError("geometric_grid needs 0 < lo <= hi and count >= 1");
    }
    if (count == 1) {
        return {lo};
    }
    std::vector<double> g(count);
    const double r = std::log(hi / lo) / static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k) {
        g[k] = lo * std::exp(r * static_cast<double>(k));
    }
    g.back() = hi;
    return g;
}

std::vector<double> default_sweep_grid(Scheme scheme, std::size_t n_steps, std::size_t count, double spread) {
    const std::optional<double> center = default_lambda_s(scheme, n_steps);
    if (!center) {
        throw ValidationError("no default lambda_s for scheme " + to_string(scheme));
    }
    if (!(spread >= 1.0)) {
        throw ValidationError("default_sweep_grid: spread must be >= 1");
    }
    if (count % 2 == 0) {
        ++count;
    }
    std::vector<double> g = geometric_grid(*center / spread, *center * spread, count);
    g[count / 2] = *center;
    return g;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw ValidationError("loglog_slope needs at least two (x, y) pairs");
    }
    const std::size_t n = x.size();
    double sx = 0.0, sy = 0.0;
    std::vector<double> lx(n), ly(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (!(x[k] > 0.0) || !(y[k] > 0.0)) {
            throw NumericalError("loglog_slope: non-positive value at point " + std::to_string(k));
        }
        lx[k] = std::log(x[k]);
        ly[k] = std::log(y[k]);
        sx += lx[k];
        sy += ly[k];
    }
    const double mx = sx / static_cast<double>(n);
    const double my = sy / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sxx += (lx[k] - mx) * (lx[k] - mx);
        sxy += (lx[k] - mx) * (ly[k] - my);
    }
    if (sxx == 0.0) {
        throw ValidationError("loglog_slope: all x values coincide");
    }
    return sxy / sxx;
}

double observed_order(const ErrorCurve& curve) {
    std::vector<double> n, e;
    for (const CurvePoint& pt : curve.points) {
        n.push_back(static_cast<double>(pt.n_steps));
        e.push_back(pt.error);
    }
    return -loglog_slope(n, e);
}

}  // namespace psld::analysis
