#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "psld/analysis/curves.hpp"
#include "psld/analysis/moments.hpp"
#include "psld/analysis/propagate.hpp"
#include "psld/analysis/truncation.hpp"
#include "psld/errors.hpp"
#include "psld/splitting.hpp"

using namespace psld;
namespace an = psld::analysis;

namespace {

const GaussianDataSpec kData{{1.0, -0.5}, {0.25, 0.5}};

GaussianMoments block(Vec2 mu, Mat2 s) {
    return {{mu}, {s}};
}

Mat2 random_psd(std::mt19937_64& gen) {
    std::normal_distribution<double> n01;
    const Mat2 b{n01(gen), n01(gen), n01(gen), n01(gen)};
    return symmetrized(b * b.transpose());
}

class CubicProvider final : public ScoreProvider {
public:
    ScoreEval evaluate(const JointState& s, double t) override {
        ScoreEval e(s.n_chains, s.dim, t);
        for (std::size_t j = 0; j < s.size(); ++j) {
            e.sx[j] = -s.x[j] * s.x[j] * s.x[j];
        }
        return e;
    }
    std::string name() const override { return "cubic"; }
};

}  // namespace

TEST_CASE("empirical_moments examples") {
    JointState c(5, 1, 0.0);
    c.x.assign(5, 3.0);
    c.m.assign(5, -1.0);
    const GaussianMoments mc = an::empirical_moments(c);
    CHECK(mc.mu[0] == Vec2{3.0, -1.0});
    CHECK(mc.sigma[0] == Mat2{0.0, 0.0, 0.0, 0.0});

    JointState two(2, 1, 0.0);
    two.x = {0.0, 2.0};
    two.m = {0.0, 0.0};
    const GaussianMoments mt = an::empirical_moments(two);
    CHECK(mt.mu[0] == Vec2{1.0, 0.0});
    CHECK(mt.sigma[0].a11 == 2.0);
    CHECK_THROWS_AS(an::empirical_moments(JointState(1, 1, 0.0)), ValidationError);
}

TEST_CASE("empirical_moments of a million stationary draws") {
    const PsldParams p = cifar10_preset();
    const std::size_t n = 1000000;
    ChainStreams rng(77, n);
    const GaussianMoments e = an::empirical_moments(sample_moments(stationary_moments(p), n, 1.0, rng, {4}));
    const double M = p.mass();
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(std::abs(e.mu[i].x) < 4.0 / std::sqrt(double(n)));
        CHECK(std::abs(e.mu[i].m) < 4.0 * std::sqrt(M / n));
        CHECK(std::abs(e.sigma[i].a11 - 1.0) < 4.0 * std::sqrt(2.0 / n));
        CHECK(std::abs(e.sigma[i].a22 - M) < 4.0 * M * std::sqrt(2.0 / n));
        CHECK(std::abs(e.sigma[i].a12) < 4.0 * std::sqrt(M / n));
    }
}

TEST_CASE("gaussian_w2 examples") {
    const GaussianMoments a = block({0.5, -1.0}, Mat2{2.0, 0.3, 0.3, 1.0});
    CHECK(an::gaussian_w2(a, a) < 1e-7);
    const GaussianMoments shifted = block({1.5, 1.0}, Mat2{2.0, 0.3, 0.3, 1.0});
    CHECK(an::gaussian_w2(a, shifted) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-7));
    CHECK(an::gaussian_w2(block({0, 0}, Mat2::identity()), block({0, 0}, Mat2::diag(4.0, 1.0))) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(an::gaussian_w2(block({0, 0}, Mat2::diag(-1.0, 1.0)), a), ValidationError);
    CHECK_THROWS_AS(an::gaussian_w2(a, GaussianMoments{}), ValidationError);
}

TEST_CASE("gaussian_w2 agrees with the oracle and is a metric") {
    std::mt19937_64 gen(123);
    std::normal_distribution<double> n01;
    for (int k = 0; k < 100; ++k) {
        const GaussianMoments a = block({n01(gen), n01(gen)}, random_psd(gen));
        const GaussianMoments b = block({n01(gen), n01(gen)}, random_psd(gen));
        const GaussianMoments c = block({n01(gen), n01(gen)}, random_psd(gen));
        const double ab = an::gaussian_w2(a, b), ba = an::gaussian_w2(b, a);
        const double ac = an::gaussian_w2(a, c), bc = an::gaussian_w2(b, c);
        CHECK(std::abs(ab - ba) < 1e-12 * std::max(1.0, ab));
        CHECK(ac <= ab + bc + 1e-12);
        CHECK(ab > 0.0);
        const Mat2& sa = a.sigma[0];
        const Mat2& sb = b.sigma[0];
        const double want = oracle::w2_squared({a.mu[0].x, a.mu[0].m}, {sa.a11, sa.a12, sa.a21, sa.a22},
                                               {b.mu[0].x, b.mu[0].m}, {sb.a11, sb.a12, sb.a21, sb.a22});
        CHECK(ab * ab == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("moment_error metrics") {
    GaussianMoments a{{Vec2{1.0, 0.0}, Vec2{0.0, 0.0}}, {Mat2::identity(), Mat2::identity()}};
    GaussianMoments b{{Vec2{4.0, 9.0}, Vec2{4.0, 9.0}}, {Mat2::identity(), Mat2::diag(2.0, 1.0)}};
    CHECK(an::moment_error(an::Metric::mean_abs, a, b) == doctest::Approx(5.0));
    CHECK(an::moment_error(an::Metric::cov_fro, a, b) == doctest::Approx(1.0));
    CHECK(an::parse_metric("cov_fro") == an::Metric::cov_fro);
    CHECK_THROWS_AS(an::parse_metric("fid"), ValidationError);
    CHECK(an::parse_estimator(an::to_string(an::Estimator::exact)) == an::Estimator::exact);
}

TEST_CASE("sampling targets") {
    const PsldParams p = cifar10_preset();
    const GaussianMoments d = an::sampling_target(p, kData, true);
    CHECK(d.mu[1].x == -0.5);
    CHECK(d.sigma[1].a11 == doctest::Approx(0.5));
    const GaussianMoments e = an::sampling_target(p, kData, false);
    CHECK(e.mu[0] == forward_moments(p, kData, p.eps_cutoff).mu[0]);
}

TEST_CASE("exact propagation agrees with sampling") {
    const PsldParams p = cifar10_preset();
    GaussianScoreProvider prov(p, kData);
    const TimeGrid g = build_time_grid(1.0, p.eps_cutoff, 20, Striding::quadratic);
    const std::size_t n = 100000;
    for (const Scheme s : {Scheme::EM, Scheme::NOBAB, Scheme::ROBAB, Scheme::RBAO}) {
        const SchemeSpec spec{s, std::nullopt, s == Scheme::EM};
        const GaussianMoments law = an::propagate_moments(p, prov, spec, g);
        const GaussianMoments e = an::empirical_moments(sample(p, prov, spec, g, {n, 9, false, {4}}).state);
        for (std::size_t i = 0; i < 2; ++i) {
            const Mat2& S = law.sigma[i];
            CHECK(std::abs(e.mu[i].x - law.mu[i].x) < 4.0 * std::sqrt(S.a11 / n));
            CHECK(std::abs(e.mu[i].m - law.mu[i].m) < 4.0 * std::sqrt(S.a22 / n));
            CHECK(std::abs(e.sigma[i].a11 - S.a11) < 4.0 * S.a11 * std::sqrt(2.0 / (n - 1)));
            CHECK(std::abs(e.sigma[i].a22 - S.a22) < 4.0 * S.a22 * std::sqrt(2.0 / (n - 1)));
        }
    }
    const GaussianMoments one = an::propagate_step(p, prov, {Scheme::NOBA, std::nullopt, false}, 0.6, 0.5,
                                                   forward_moments(p, kData, 0.6));
    CHECK(one.dim() == 2);
}

TEST_CASE("exact propagation rejects a non-affine provider") {
    const PsldParams p = cifar10_preset();
    CubicProvider cubic;
    const TimeGrid g = build_time_grid(1.0, p.eps_cutoff, 4, Striding::quadratic);
    CHECK_THROWS_WITH_AS(an::propagate_moments(p, cubic, {Scheme::ROBA, std::nullopt, false}, g),
                         doctest::Contains("not affine"), ContractError);
}

TEST_CASE("weak_error_curve for EM is nonincreasing within Monte Carlo noise") {
    const PsldParams p = cifar10_preset();
    const std::vector<std::size_t> budgets{25, 50, 100, 200};
    std::vector<std::vector<double>> errs(budgets.size());
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        an::RunOptions opts;
        opts.seed = seed;
        opts.exec.threads = 4;
        const an::ErrorCurve c = an::weak_error_curve(p, kData, {Scheme::EM, std::nullopt, false}, budgets, opts);
        REQUIRE(c.points.size() == budgets.size());
        for (std::size_t k = 0; k < budgets.size(); ++k) {
            CHECK(c.points[k].nfe == budgets[k]);
            errs[k].push_back(c.points[k].error);
        }
    }
    auto mean_sd = [](const std::vector<double>& v) {
        double m = 0.0, s = 0.0;
        for (const double x : v) m += x;
        m /= v.size();
        for (const double x : v) s += (x - m) * (x - m);
        return std::pair{m, std::sqrt(s / (v.size() - 1))};
    };
    for (std::size_t k = 0; k + 1 < budgets.size(); ++k) {
        const auto [m0, s0] = mean_sd(errs[k]);
        const auto [m1, s1] = mean_sd(errs[k + 1]);
        CHECK(m1 <= m0 + 3.0 * std::hypot(s0, s1));
    }
}

TEST_CASE("ROBA beats NOBA at matched NFE") {
    const PsldParams p = cifar10_preset();
    an::RunOptions opts;
    opts.seed = 3;
    opts.exec.threads = 4;
    opts.lambda_from_table = true;
    for (const std::size_t nfe : {50u, 100u}) {
        const an::ErrorCurve roba = an::weak_error_curve(p, kData, {Scheme::ROBA, std::nullopt, false}, {nfe}, opts);
        const an::ErrorCurve noba =
            an::weak_error_curve(p, kData, {Scheme::NOBA, std::nullopt, false}, {nfe / 2}, opts);
        CHECK(roba.points[0].nfe == noba.points[0].nfe);
        CHECK(roba.points[0].lambda_s == default_lambda_s(Scheme::ROBA, nfe));
        CHECK(roba.points[0].error <= noba.points[0].error);
    }
}

TEST_CASE("fine EM beats coarse EM and curves are reproducible") {
    const PsldParams p = cifar10_preset();
    an::RunOptions exact;
    exact.estimator = an::Estimator::exact;
    const an::ErrorCurve c = an::weak_error_curve(p, kData, {Scheme::EM, std::nullopt, false}, {50, 1000}, exact);
    CHECK(c.points[1].error < c.points[0].error);

    an::RunOptions mc;
    mc.n_chains = 5000;
    mc.seed = 8;
    const an::ErrorCurve a = an::weak_error_curve(p, kData, {Scheme::ROBAB, 0.14, true}, {10, 20}, mc);
    mc.exec.threads = 3;
    const an::ErrorCurve b = an::weak_error_curve(p, kData, {Scheme::ROBAB, 0.14, true}, {10, 20}, mc);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(a.points[k].error == b.points[k].error);
        CHECK(a.points[k].nfe == 20 * (k + 1) + 1);
    }
    CHECK_THROWS_AS(an::weak_error_curve(p, kData, {Scheme::EM, std::nullopt, false}, {20, 20}, mc), ValidationError);
    CHECK_THROWS_AS(an::weak_error_curve(p, kData, {Scheme::EM, std::nullopt, false}, {}, mc), ValidationError);
}

TEST_CASE("lambda_sweep") {
    const PsldParams p = cifar10_preset();
    an::RunOptions exact;
    exact.estimator = an::Estimator::exact;
    const an::LambdaSweep one = an::lambda_sweep(p, kData, Scheme::ROBA, 100, {0.5}, exact);
    CHECK(one.best_lambda == 0.5);
    REQUIRE(one.points.size() == 1);
    CHECK(one.best_error == one.points[0].error);

    const an::LambdaSweep range = an::lambda_sweep(p, kData, Scheme::ROBA, 100, an::geometric_grid(0.1, 1.2, 11), exact);
    for (const an::SweepPoint& pt : range.points) {
        CHECK(std::isfinite(pt.error));
        CHECK(pt.error >= range.best_error);
    }
    CHECK(range.points.front().lambda_s == doctest::Approx(0.1));
    CHECK(range.points.back().lambda_s == doctest::Approx(1.2));

    // lambda only scales the noise, so the mean error is flat and every point ties.
    const an::LambdaSweep tie = an::lambda_sweep(p, kData, Scheme::RBAO, 50, {0.9, 0.3, 0.6}, exact, an::Metric::mean_abs);
    CHECK(tie.points[0].error == tie.points[1].error);
    CHECK(tie.best_lambda == 0.3);

    CHECK_THROWS_AS(an::lambda_sweep(p, kData, Scheme::ROBA, 100, {}, exact), ValidationError);
    CHECK_THROWS_AS(an::lambda_sweep(p, kData, Scheme::NOBA, 100, {0.5}, exact), ValidationError);

    const std::vector<double> g = an::default_sweep_grid(Scheme::ROBA, 100);
    REQUIRE(g.size() % 2 == 1);
    CHECK(g[g.size() / 2] == doctest::Approx(0.37).epsilon(1e-14));
    CHECK(g.front() == doctest::Approx(0.37 / 4.0));
    CHECK(g.back() == doctest::Approx(0.37 * 4.0));
    CHECK_THROWS_AS(an::default_sweep_grid(Scheme::EM, 100), ValidationError);
}

TEST_CASE("log-log slope") {
    const std::vector<double> x{1.0, 2.0, 4.0, 8.0};
    std::vector<double> y;
    for (const double v : x) y.push_back(3.0 * v * v);
    CHECK(an::loglog_slope(x, y) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(an::loglog_slope({1.0}, {1.0}), ValidationError);
    CHECK_THROWS_AS(an::loglog_slope({1.0, 2.0}, {1.0, 0.0}), NumericalError);
    an::ErrorCurve c;
    for (const std::size_t n : {10u, 20u, 40u}) c.points.push_back({n, n, std::nullopt, 1.0 / n});
    CHECK(an::observed_order(c) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Ito-Taylor prediction for the zero score") {
    PsldParams p = cifar10_preset();
    const double h = 0.01;
    const std::vector<Vec2> pred = an::ito_taylor_mean(p, kData, an::ProbeScore::zero, 0.4, h);
    const GaussianMoments start = forward_moments(p, kData, 0.4);
    const Mat2 k = -1.0 * drift_matrix(p);
    for (std::size_t i = 0; i < 2; ++i) {
        const Vec2 mu = start.mu[i];
        const Vec2 want = mu + h * (k * mu) + 0.5 * h * h * (k * (k * mu));
        CHECK(pred[i].x == doctest::Approx(want.x).epsilon(1e-14));
        CHECK(pred[i].m == doctest::Approx(want.m).epsilon(1e-14));
    }
}

TEST_CASE("truncation residuals shrink with h") {
    const PsldParams p = cifar10_preset();
    const std::vector<double> hs{0.04, 0.02, 0.01, 0.005};
    for (const Scheme s : kAllSchemes) {
        const an::TruncationReport r =
            an::truncation_residual(p, kData, {s, std::nullopt, false}, an::ProbeScore::gaussian, 0.5, hs, {20000, 2, {}});
        REQUIRE(r.residual_x.size() == hs.size());
        CHECK(r.residual_x.front() > r.residual_x.back());
        CHECK(r.residual_z.front() > r.residual_z.back());
        CHECK(r.reference_slope_z.value_or(0.0) >= 2.7);
        for (std::size_t k = 0; k < hs.size(); ++k) {
            CHECK(std::isfinite(r.residual_m[k]));
            CHECK(std::abs(r.mc_residual_x[k] - r.residual_x[k]) <= 4.0 * r.mc_stderr_x[k] + 1e-12);
        }
    }
    CHECK_THROWS_AS(an::truncation_residual(p, kData, {Scheme::EM, std::nullopt, false}, an::ProbeScore::zero, 0.5,
                                            {0.01, 0.02}, {100, 1, {}}),
                    ValidationError);
    CHECK_THROWS_AS(an::truncation_residual(p, kData, {Scheme::EM, std::nullopt, false}, an::ProbeScore::zero, 0.99,
                                            {0.04, 0.02}, {100, 1, {}}),
                    ValidationError);
}

TEST_CASE("zero-score linear slopes") {
    PsldParams lin = cifar10_preset();
    lin.gamma_cap = 1e-9;
    lin.nu = 1e-9;
    const std::vector<double> hs{0.04, 0.02, 0.01, 0.005};
    for (const Scheme s : kAllSchemes) {
        const an::TruncationReport r =
            an::truncation_residual(lin, kData, {s, std::nullopt, false}, an::ProbeScore::zero, 0.5, hs, {100, 1, {}});
        const bool symmetric = s == Scheme::NOBAB || s == Scheme::ROBAB;
        CHECK(r.fitted_slope_z.value_or(0.0) >= (symmetric ? 2.7 : 1.9));
        CHECK(r.reference_slope_z.value_or(0.0) >= 2.7);
    }
}

TEST_CASE("score-lag term between NBAO and RBAO") {
    const PsldParams p = cifar10_preset();
    const an::ScoreLagComparison c = an::score_lag_comparison(p, kData, 0.5, 0.02, {100000, 4, {4}});
    const std::vector<double> direct = an::score_lag_term(p, kData, 0.5, 0.02);
    REQUIRE(c.analytic.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(c.analytic[i] == direct[i]);
        CHECK(c.analytic[i] != 0.0);
        CHECK(std::abs(c.measured[i] - c.analytic[i]) <= 4.0 * c.std_error[i]);
    }
}
