#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "psld/harness/config.hpp"

namespace psld::harness {

inline constexpr const char* kLibraryVersion = "0.1.0";

/// How chain noise is derived from a run seed; recorded in every manifest.
inline constexpr const char* kSeedDerivation =
    "Philox4x32-10, key = run seed (low, high 32 bits), counter = (block index low, high, chain index low, "
    "high); chain c draws only from its own counter range, so values do not depend on thread count";

struct OutputFile {
    std::string path;  // relative to output_dir
    std::string sha256;
    std::size_t bytes = 0;
};

struct RunError {
    std::string where;
    std::string message;
    /// 1 validation, 2 runtime or numerical.
    int code = 2;
};

struct Manifest {
    std::string experiment;
    std::string config_sha256;
    nlohmann::json config;
    std::vector<std::uint64_t> seeds;
    std::string seed_derivation = kSeedDerivation;
    std::string library_version = kLibraryVersion;
    double wall_time_s = 0.0;
    std::size_t total_nfe = 0;
    std::vector<OutputFile> outputs;
    std::vector<RunError> errors;

    bool ok() const { return errors.empty(); }
    /// 0 if ok, else the highest error code.
    int exit_code() const;
    nlohmann::json to_json() const;
};

/// Hex SHA-256 of a byte string / of a file's contents.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

/// Config with the fields that cannot change results (output_dir, threads)
/// removed; this is what the config hash covers.
nlohmann::json canonical_config(const ExperimentConfig& cfg);

/// Runs every (scheme, N, seed) tuple of the configured experiment and
/// writes into cfg.output_dir:
///   results.csv   scheme,N,nfe,lambda_s,metric,value,seed
///   summary.json  structured per-run results
///   truncation.csv, samples_*.csv  when applicable
///   manifest.json (not reproducible bitwise: it carries the wall time)
/// A failing tuple is recorded in the manifest and the others still run.
/// Throws ValidationError only if the output directory is unusable.
Manifest run_experiment(const ExperimentConfig& cfg);

/// Re-hashes every output listed in a manifest; returns the paths that are
/// missing or do not match.
std::vector<std::string> verify_manifest(const Manifest& m, const std::string& output_dir);

}  // namespace psld::harness
