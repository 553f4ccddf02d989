#include "psld/harness/experiment.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "psld/analysis/moments.hpp"
#include "psld/analysis/propagate.hpp"
#include "psld/errors.hpp"
#include "psld/splitting.hpp"

namespace psld::harness {

namespace fs = std::filesystem;
using nlohmann::json;

int Manifest::exit_code() const {
    int code = 0;
    for (const RunError& e : errors) {
        code = std::max(code, e.code);
    }
    return code;
}

json Manifest::to_json() const {
    json outs = json::array();
    for (const OutputFile& f : outputs) {
        outs.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    }
    json errs = json::array();
    for (const RunError& e : errors) {
        errs.push_back({{"where", e.where}, {"message", e.message}, {"code", e.code}});
    }
    return {{"experiment", experiment},
            {"status", ok() ? "ok" : "error"},
            {"exit_code", exit_code()},
            {"config_sha256", config_sha256},
            {"config", config},
            {"seeds", seeds},
            {"seed_derivation", seed_derivation},
            {"library_version", library_version},
            {"wall_time_s", wall_time_s},
            {"total_nfe", total_nfe},
            {"outputs", outs},
            {"errors", errs}};
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    std::string hex;
    for (unsigned int k = 0; k < len; ++k) {
        hex += fmt::format("{:02x}", digest[k]);
    }
    return hex;
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

json canonical_config(const ExperimentConfig& cfg) {
    json j = serialize(cfg);
    j.erase("output_dir");
    j.erase("threads");
    return j;
}

namespace {

struct Row {
    std::string scheme;
    std::optional<std::size_t> n;
    std::size_t nfe = 0;
    std::optional<double> lambda_s;
    std::string metric;
    double value = 0.0;
    std::uint64_t seed = 0;
};

std::string csv_rows(const std::vector<Row>& rows) {
    std::string out = "scheme,N,nfe,lambda_s,metric,value,seed\n";
    for (const Row& r : rows) {
        out += fmt::format("{},{},{},{},{},{},{}\n", r.scheme, r.n ? fmt::format("{}", *r.n) : "",
                           r.nfe, r.lambda_s ? fmt::format("{}", *r.lambda_s) : "", r.metric, r.value, r.seed);
    }
    return out;
}

json opt_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

json moments_json(const GaussianMoments& m) {
    json mu = json::array(), sigma = json::array();
    for (std::size_t i = 0; i < m.dim(); ++i) {
        mu.push_back({m.mu[i].x, m.mu[i].m});
        const Mat2& s = m.sigma[i];
        sigma.push_back({{s.a11, s.a12}, {s.a21, s.a22}});
    }
    return {{"mu", mu}, {"sigma", sigma}};
}

json report_json(const analysis::TruncationReport& r) {
    return {{"scheme", to_string(r.scheme.scheme)},
            {"lambda_s", opt_json(r.scheme.lambda_s)},
            {"score", analysis::to_string(r.score)},
            {"t0", r.t0},
            {"h_values", r.h_values},
            {"residual_x", r.residual_x},
            {"residual_m", r.residual_m},
            {"residual_z", r.residual_z},
            {"reference_x", r.reference_x},
            {"reference_m", r.reference_m},
            {"reference_z", r.reference_z},
            {"cov_residual", r.cov_residual},
            {"mc_residual_x", r.mc_residual_x},
            {"mc_stderr_x", r.mc_stderr_x},
            {"fitted_slope_x", opt_json(r.fitted_slope_x)},
            {"fitted_slope_m", opt_json(r.fitted_slope_m)},
            {"fitted_slope_z", opt_json(r.fitted_slope_z)},
            {"reference_slope_x", opt_json(r.reference_slope_x)},
            {"reference_slope_m", opt_json(r.reference_slope_m)},
            {"reference_slope_z", opt_json(r.reference_slope_z)}};
}

std::size_t run_nfe(const SchemeSpec& s, std::size_t n) {
    return n * nfe_per_step(s.scheme) + (s.denoise_last ? 1 : 0);
}

void write_file(const fs::path& dir, const std::string& name, const std::string& body,
                std::vector<OutputFile>& outputs) {
    const fs::path path = dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    out << body;
    out.close();
    if (!out) {
        throw std::runtime_error("write failed for '" + path.string() + "'");
    }
    outputs.push_back({name, sha256_hex(body), body.size()});
}

void prepare_output_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw ValidationError("field 'output_dir': cannot create '" + dir + "': " + ec.message());
    }
    const fs::path probe = fs::path(dir) / ".write_test";
    {
        std::ofstream out(probe);
        if (!out) {
            throw ValidationError("field 'output_dir': '" + dir + "' is not writable");
        }
    }
    fs::remove(probe, ec);
}

class Runner {
public:
    explicit Runner(const ExperimentConfig& cfg) : cfg_(cfg), exec_{cfg.threads} {}

    void run() {
        std::unique_ptr<ScoreProvider> provider;
        try {
            provider = make_provider(cfg_.provider, cfg_.params, cfg_.data, exec_);
        } catch (const std::exception& e) {
            record("provider " + cfg_.provider, e);
            return;
        }
        switch (cfg_.experiment) {
            case ExperimentKind::sample: run_sample(*provider); break;
            case ExperimentKind::error_curve: run_curve(*provider); break;
            case ExperimentKind::lambda_sweep: run_sweep(*provider); break;
            case ExperimentKind::truncation: run_truncation(); break;
        }
    }

    std::vector<Row> rows;
    json runs = json::array();
    std::vector<RunError> errors;
    std::vector<std::pair<std::string, std::string>> extra_files;
    std::string truncation_csv;
    std::size_t total_nfe = 0;

private:
    template <class Fn>
    void guarded(const std::string& where, Fn&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            record(where, e);
        }
    }

    void record(const std::string& where, const std::exception& e) {
        const bool validation = dynamic_cast<const ValidationError*>(&e) != nullptr;
        errors.push_back({where, e.what(), validation ? 1 : 2});
    }

    analysis::RunOptions options(std::uint64_t seed) const {
        analysis::RunOptions o;
        o.n_chains = cfg_.n_chains;
        o.seed = seed;
        o.striding = cfg_.striding;
        o.estimator = cfg_.estimator;
        o.lambda_from_table = cfg_.lambda_mode == LambdaMode::table;
        o.exec = exec_;
        return o;
    }

    void run_sample(ScoreProvider& provider) {
        const PsldParams& p = cfg_.params;
        const GaussianMoments target = analysis::sampling_target(p, cfg_.data, cfg_.denoise);
        for (const Scheme s : cfg_.schemes) {
            for (const std::size_t n : cfg_.n_steps) {
                for (const std::uint64_t seed : cfg_.seeds) {
                    const SchemeSpec spec = scheme_for(cfg_, s, n);
                    const std::string where = fmt::format("scheme={} N={} seed={}", to_string(s), n, seed);
                    guarded(where, [&] {
                        const TimeGrid grid = build_time_grid(p.t_max, p.eps_cutoff, n, cfg_.striding);
                        GaussianMoments got;
                        std::size_t nfe = 0;
                        if (cfg_.estimator == analysis::Estimator::exact) {
                            got = analysis::propagate_moments(p, provider, spec, grid);
                            nfe = run_nfe(spec, n);
                        } else {
                            SampleOptions so;
                            so.n_chains = cfg_.n_chains;
                            so.seed = seed;
                            so.exec = exec_;
                            const SampleResult res = sample(p, provider, spec, grid, so);
                            got = analysis::empirical_moments(res.state);
                            nfe = res.total_nfe;
                            if (cfg_.write_samples) {
                                extra_files.emplace_back(
                                    fmt::format("samples_{}_N{}_seed{}.csv", to_string(s), n, seed),
                                    samples_csv(res.state));
                            }
                        }
                        total_nfe += nfe;
                        json metrics;
                        for (const auto m : {analysis::Metric::w2, analysis::Metric::mean_abs, analysis::Metric::cov_fro}) {
                            const double v = analysis::moment_error(m, got, target);
                            rows.push_back({to_string(s), n, nfe, spec.lambda_s, analysis::to_string(m), v, seed});
                            metrics[analysis::to_string(m)] = v;
                        }
                        runs.push_back({{"scheme", to_string(s)},
                                        {"N", n},
                                        {"nfe", nfe},
                                        {"lambda_s", opt_json(spec.lambda_s)},
                                        {"denoise", spec.denoise_last},
                                        {"seed", seed},
                                        {"moments", moments_json(got)},
                                        {"target", moments_json(target)},
                                        {"metrics", metrics}});
                    });
                }
            }
        }
    }

    void run_curve(ScoreProvider& provider) {
        for (const Scheme s : cfg_.schemes) {
            for (const std::uint64_t seed : cfg_.seeds) {
                const std::string where = fmt::format("scheme={} seed={}", to_string(s), seed);
                guarded(where, [&] {
                    SchemeSpec spec = scheme_for(cfg_, s, cfg_.n_steps.front());
                    if (cfg_.lambda_mode == LambdaMode::table) {
                        spec.lambda_s.reset();
                    }
                    const analysis::ErrorCurve curve = analysis::weak_error_curve(
                        cfg_.params, cfg_.data, provider, spec, cfg_.n_steps, options(seed), cfg_.metric);
                    json pts = json::array();
                    for (const analysis::CurvePoint& pt : curve.points) {
                        total_nfe += pt.nfe;
                        rows.push_back({to_string(s), pt.n_steps, pt.nfe, pt.lambda_s, analysis::to_string(cfg_.metric),
                                        pt.error, seed});
                        pts.push_back({{"N", pt.n_steps},
                                       {"nfe", pt.nfe},
                                       {"lambda_s", opt_json(pt.lambda_s)},
                                       {"error", pt.error}});
                    }
                    json run = {{"scheme", to_string(s)},
                                {"seed", seed},
                                {"metric", analysis::to_string(cfg_.metric)},
                                {"points", pts}};
                    if (curve.points.size() >= 2) {
                        try {
                            run["observed_order"] = analysis::observed_order(curve);
                        } catch (const std::exception&) {
                            run["observed_order"] = nullptr;
                        }
                    }
                    runs.push_back(run);
                });
            }
        }
    }

    void run_sweep(ScoreProvider& provider) {
        for (const Scheme s : cfg_.schemes) {
            for (const std::size_t n : cfg_.n_steps) {
                for (const std::uint64_t seed : cfg_.seeds) {
                    const std::string where = fmt::format("scheme={} N={} seed={}", to_string(s), n, seed);
                    guarded(where, [&] {
                        const std::vector<double> grid =
                            cfg_.lambda_grid.empty() ? analysis::default_sweep_grid(s, n) : cfg_.lambda_grid;
                        const analysis::LambdaSweep sw = analysis::lambda_sweep(
                            cfg_.params, cfg_.data, provider, s, n, grid, options(seed), cfg_.metric, cfg_.denoise);
                        const SchemeSpec spec{s, std::nullopt, cfg_.denoise};
                        json pts = json::array();
                        for (const analysis::SweepPoint& pt : sw.points) {
                            total_nfe += run_nfe(spec, n);
                            rows.push_back({to_string(s), n, run_nfe(spec, n), pt.lambda_s,
                                            analysis::to_string(cfg_.metric), pt.error, seed});
                            pts.push_back({{"lambda_s", pt.lambda_s}, {"error", pt.error}});
                        }
                        runs.push_back({{"scheme", to_string(s)},
                                        {"N", n},
                                        {"seed", seed},
                                        {"metric", analysis::to_string(cfg_.metric)},
                                        {"best_lambda_s", sw.best_lambda},
                                        {"best_error", sw.best_error},
                                        {"points", pts}});
                    });
                }
            }
        }
    }

    void run_truncation() {
        const auto& tr = cfg_.truncation;
        truncation_csv =
            "scheme,score,t0,h,residual_x,residual_m,residual_z,reference_x,reference_m,reference_z,cov_residual,"
            "mc_residual_x,mc_stderr_x,seed\n";
        for (const Scheme s : cfg_.schemes) {
            for (const std::uint64_t seed : cfg_.seeds) {
                const std::string where = fmt::format("scheme={} seed={}", to_string(s), seed);
                guarded(where, [&] {
                    SchemeSpec spec{s, std::nullopt, false};
                    if (is_reduced(s) && cfg_.lambda_mode == LambdaMode::fixed) {
                        spec.lambda_s = cfg_.lambda_s;
                    }
                    analysis::ProbeOptions po{cfg_.n_chains, seed, exec_};
                    const analysis::TruncationReport r =
                        analysis::truncation_residual(cfg_.params, cfg_.data, spec, tr.score, tr.t0, tr.h_values, po);
                    for (std::size_t k = 0; k < r.h_values.size(); ++k) {
                        truncation_csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", to_string(s),
                                                      analysis::to_string(tr.score), tr.t0, r.h_values[k],
                                                      r.residual_x[k], r.residual_m[k], r.residual_z[k],
                                                      r.reference_x[k], r.reference_m[k], r.reference_z[k],
                                                      r.cov_residual[k], r.mc_residual_x[k], r.mc_stderr_x[k], seed);
                    }
                    const std::size_t nfe = nfe_per_step(s) * r.h_values.size();
                    total_nfe += nfe;
                    const std::pair<const char*, std::optional<double>> slopes[] = {
                        {"slope_x", r.fitted_slope_x}, {"slope_m", r.fitted_slope_m}, {"slope_z", r.fitted_slope_z}};
                    for (const auto& [name, v] : slopes) {
                        if (v) {
                            rows.push_back({to_string(s), std::nullopt, nfe, spec.lambda_s, name, *v, seed});
                        }
                    }
                    json run = report_json(r);
                    run["seed"] = seed;
                    runs.push_back(run);
                });
            }
        }
    }

    static std::string samples_csv(const JointState& s) {
        std::string out = "chain,dim,x,m\n";
        for (std::size_t c = 0; c < s.n_chains; ++c) {
            for (std::size_t i = 0; i < s.dim; ++i) {
                out += fmt::format("{},{},{},{}\n", c, i, s.x[c * s.dim + i], s.m[c * s.dim + i]);
            }
        }
        return out;
    }

    const ExperimentConfig& cfg_;
    Executor exec_;
};

}  // namespace

Manifest run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    prepare_output_dir(cfg.output_dir);
    const auto start = std::chrono::steady_clock::now();

    Manifest man;
    man.experiment = to_string(cfg.experiment);
    man.config = canonical_config(cfg);
    man.config_sha256 = sha256_hex(man.config.dump());
    man.seeds = cfg.seeds;

    Runner runner(cfg);
    runner.run();
    man.total_nfe = runner.total_nfe;
    man.errors = runner.errors;

    json errs = json::array();
    for (const RunError& e : man.errors) {
        errs.push_back({{"where", e.where}, {"message", e.message}, {"code", e.code}});
    }
    const json summary = {{"experiment", man.experiment},
                          {"config", man.config},
                          {"config_sha256", man.config_sha256},
                          {"library_version", kLibraryVersion},
                          {"total_nfe", man.total_nfe},
                          {"runs", runner.runs},
                          {"errors", errs}};

    const fs::path dir(cfg.output_dir);
    try {
        write_file(dir, "results.csv", csv_rows(runner.rows), man.outputs);
        if (cfg.experiment == ExperimentKind::truncation) {
            write_file(dir, "truncation.csv", runner.truncation_csv, man.outputs);
        }
        for (const auto& [name, body] : runner.extra_files) {
            write_file(dir, name, body, man.outputs);
        }
        write_file(dir, "summary.json", summary.dump(2) + "\n", man.outputs);
    } catch (const std::exception& e) {
        man.errors.push_back({"output", e.what(), 2});
    }
    man.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream mf(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    mf << man.to_json().dump(2) << "\n";
    if (!mf) {
        man.errors.push_back({"output", "cannot write manifest.json", 2});
    }
    return man;
}

std::vector<std::string> verify_manifest(const Manifest& m, const std::string& output_dir) {
    std::vector<std::string> bad;
    for (const OutputFile& f : m.outputs) {
        const fs::path path = fs::path(output_dir) / f.path;
        std::error_code ec;
        if (!fs::exists(path, ec)) {
            bad.push_back(f.path);
            continue;
        }
        if (sha256_file(path.string()) != f.sha256) {
            bad.push_back(f.path);
        }
    }
    return bad;
}

}  // namespace psld::harness
