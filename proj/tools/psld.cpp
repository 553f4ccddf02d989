#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "psld/errors.hpp"
#include "psld/harness/config.hpp"
#include "psld/harness/experiment.hpp"

namespace {

using nlohmann::json;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> chains;
    std::vector<std::string> schemes;
    std::vector<std::size_t> steps;
    std::optional<std::string> lambda_s;
    std::optional<bool> denoise;
    std::optional<std::string> provider;
    std::optional<unsigned> threads;
    std::optional<std::string> estimator;
    std::optional<std::string> metric;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON experiment config");
    cmd->add_option("--seed", o.seed, "run seed (replaces the config's seed list)");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--chains", o.chains, "number of chains");
    cmd->add_option("--scheme", o.schemes, "EM, NOBA, NBAO, NOBAB, ROBA, RBAO or ROBAB (repeatable)")
        ->delimiter(',');
    cmd->add_option("--steps", o.steps, "step counts N (comma separated)")->delimiter(',');
    cmd->add_option("--lambda-s", o.lambda_s, "position noise scale: a number, 'table' or 'naive'");
    cmd->add_flag_callback("--denoise", [&o] { o.denoise = true; }, "apply the last denoising step");
    cmd->add_flag_callback("--no-denoise", [&o] { o.denoise = false; }, "stop at eps");
    cmd->add_option("--provider", o.provider, "gaussian, zero or external:<cmd>");
    cmd->add_option("--threads", o.threads, "worker threads (results do not depend on it)");
    cmd->add_option("--estimator", o.estimator, "monte_carlo or exact");
    cmd->add_option("--metric", o.metric, "w2, mean_abs or cov_fro");
}

json merged_config(const Overrides& o, const std::optional<std::string>& experiment) {
    json j = o.config.empty() ? json::object() : psld::harness::read_config_json(o.config);
    if (!j.is_object()) {
        throw psld::ValidationError("config must be a JSON object");
    }
    if (experiment) j["experiment"] = *experiment;
    if (o.seed) {
        j.erase("seed");
        j["seeds"] = json::array({*o.seed});
    }
    if (o.out) j["output_dir"] = *o.out;
    if (o.chains) j["n_chains"] = *o.chains;
    if (!o.schemes.empty()) j["scheme"] = o.schemes;
    if (!o.steps.empty()) j["N"] = o.steps;
    if (o.lambda_s) {
        if (*o.lambda_s == "table") {
            j["lambda_s"] = "table";
        } else if (*o.lambda_s == "naive") {
            j["lambda_s"] = nullptr;
        } else {
            try {
                std::size_t used = 0;
                const double v = std::stod(*o.lambda_s, &used);
                if (used != o.lambda_s->size()) {
                    throw std::invalid_argument("trailing characters");
                }
                j["lambda_s"] = v;
            } catch (const std::exception&) {
                throw psld::ValidationError("--lambda-s: expected a number, 'table' or 'naive'");
            }
        }
    }
    if (o.denoise) j["denoise"] = *o.denoise;
    if (o.provider) j["provider"] = *o.provider;
    if (o.threads) j["threads"] = *o.threads;
    if (o.estimator) j["estimator"] = *o.estimator;
    if (o.metric) j["metric"] = *o.metric;
    return j;
}

int run(const Overrides& o, const std::optional<std::string>& experiment) {
    const psld::harness::ExperimentConfig cfg = psld::harness::parse_config(merged_config(o, experiment));
    if (!experiment) {
        std::cout << psld::harness::serialize(cfg).dump(2) << "\n";
        return 0;
    }
    const psld::harness::Manifest man = psld::harness::run_experiment(cfg);
    fmt::print("{}: {} ({} outputs, total NFE {}, {:.2f} s) -> {}/manifest.json\n", man.experiment,
               man.ok() ? "ok" : "FAILED", man.outputs.size(), man.total_nfe, man.wall_time_s, cfg.output_dir);
    for (const auto& e : man.errors) {
        fmt::print(stderr, "error [{}]: {}\n", e.where, e.message);
    }
    return man.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Splitting-integrator sampler and experiment runner for phase-space Langevin diffusions"};
    app.require_subcommand(1);
    Overrides o;
    std::optional<std::string> experiment;
    const std::pair<const char*, const char*> commands[] = {{"sample", "sample"},
                                                            {"curve", "error_curve"},
                                                            {"sweep", "lambda_sweep"},
                                                            {"truncation", "truncation"}};
    for (const auto& [name, kind] : commands) {
        CLI::App* cmd = app.add_subcommand(name, std::string("run the ") + kind + " experiment");
        add_common(cmd, o);
        cmd->callback([&experiment, k = std::string(kind)] { experiment = k; });
    }
    CLI::App* check = app.add_subcommand("validate-config", "expand and validate a config, print it");
    add_common(check, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    try {
        return run(o, experiment);
    } catch (const psld::ValidationError& e) {
        fmt::print(stderr, "validation error: {}\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 2;
    }
}
