#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "psld/analysis/curves.hpp"
#include "psld/analysis/truncation.hpp"
#include "psld/gaussian.hpp"
#include "psld/params.hpp"
#include "psld/scheme.hpp"
#include "psld/time_grid.hpp"

namespace psld::harness {

enum class ExperimentKind { sample, error_curve, lambda_sweep, truncation };

std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment(std::string_view name);

/// How reduced schemes pick lambda_s.
///   table: the tuned default for each (scheme, N), resolved at run time.
///   fixed: `lambda_s` for every reduced scheme.
///   naive: no lambda_s, i.e. the exact OU position noise.
enum class LambdaMode { table, fixed, naive };

struct TruncationSettings {
    analysis::ProbeScore score = analysis::ProbeScore::gaussian;
    double t0 = 0.5;
    std::vector<double> h_values{0.04, 0.02, 0.01, 0.005};
    friend bool operator==(const TruncationSettings&, const TruncationSettings&) = default;
};

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::sample;
    /// Preset the params were expanded from, empty for fully custom params.
    std::string preset = "cifar10";
    PsldParams params = cifar10_preset();
    GaussianDataSpec data{{1.0, -0.5}, {0.25, 0.5}};
    std::vector<Scheme> schemes{Scheme::ROBA};
    LambdaMode lambda_mode = LambdaMode::table;
    std::optional<double> lambda_s;
    bool denoise = false;
    Striding striding = Striding::quadratic;
    std::vector<std::size_t> n_steps{100};
    std::size_t n_chains = 100000;
    std::vector<std::uint64_t> seeds{0};
    std::string output_dir = "out";
    std::string provider = "gaussian";
    analysis::Metric metric = analysis::Metric::w2;
    analysis::Estimator estimator = analysis::Estimator::monte_carlo;
    /// Sweep grid; empty means a grid centred on the tabulated default.
    std::vector<double> lambda_grid;
    TruncationSettings truncation;
    /// Write every terminal chain of `sample` runs to CSV.
    bool write_samples = false;
    unsigned threads = 1;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Default d = 2 data model: mu0_x = (1, -0.5), var0_x = (0.25, 0.5).
GaussianDataSpec default_data(std::size_t dim);

/// Scheme spec of one run, with lambda_s resolved for (scheme, N).
SchemeSpec scheme_for(const ExperimentConfig& cfg, Scheme scheme, std::size_t n_steps);

/// Reads a JSON document. ValidationError with line and column on a syntax error.
nlohmann::json read_config_json(const std::string& path);
nlohmann::json parse_config_text(const std::string& text, const std::string& origin = "<config>");

/// Expands preset and defaults, then validates. Unknown keys, wrong types and
/// violated invariants throw ValidationError naming the field.
ExperimentConfig parse_config(const nlohmann::json& j);

ExperimentConfig load_config(const std::string& path);

/// Fully expanded form; parse_config(serialize(cfg)) == cfg.
nlohmann::json serialize(const ExperimentConfig& cfg);

/// Invariants that do not depend on the filesystem.
void validate_config(const ExperimentConfig& cfg);

}  // namespace psld::harness
