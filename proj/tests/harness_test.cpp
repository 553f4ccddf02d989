#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "psld/errors.hpp"
#include "psld/harness/config.hpp"
#include "psld/harness/experiment.hpp"

using namespace psld;
using namespace psld::harness;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("psld_harness_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int count_lines(const std::string& s) {
    int n = 0;
    for (const char c : s) n += c == '\n';
    return n;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PSLD_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExperimentConfig small_config(ExperimentKind kind, const fs::path& out) {
    ExperimentConfig cfg = parse_config(json{{"preset", "cifar10"}, {"scheme", "ROBA"}, {"N", 100}});
    cfg.experiment = kind;
    cfg.n_chains = 2000;
    cfg.output_dir = out.string();
    return cfg;
}

}  // namespace

TEST_CASE("minimal config is fully defaulted") {
    const ExperimentConfig cfg = parse_config(json{{"preset", "cifar10"}, {"scheme", "ROBA"}, {"N", 100}});
    CHECK(cfg.params.beta == 8.0);
    CHECK(cfg.params.gamma_cap == 0.01);
    CHECK(cfg.params.nu == 4.01);
    CHECK(cfg.lambda_s == 0.37);
    CHECK(cfg.lambda_mode == LambdaMode::fixed);
    CHECK(cfg.schemes == std::vector<Scheme>{Scheme::ROBA});
    CHECK(cfg.n_steps == std::vector<std::size_t>{100});
    CHECK(scheme_for(cfg, Scheme::ROBA, 100).lambda_s == 0.37);
}

TEST_CASE("unknown keys and bad fields are rejected by name") {
    CHECK_THROWS_WITH_AS(parse_config(json{{"preset", "cifar10"}, {"foo", 1}}), doctest::Contains("foo"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(parse_config(json{{"N", "many"}}), doctest::Contains("'N'"), ValidationError);
    CHECK_THROWS_WITH_AS(parse_config(json{{"preset", "imagenet"}}), doctest::Contains("preset"), ValidationError);
    CHECK_THROWS_WITH_AS(parse_config(json{{"scheme", "OBABO"}}), doctest::Contains("scheme"), ValidationError);
    CHECK_THROWS_WITH_AS(parse_config(json{{"n_chains", 1}}), doctest::Contains("n_chains"), ValidationError);
    CHECK_THROWS_WITH_AS(parse_config(json{{"seeds", json::array()}}), doctest::Contains("seeds"), ValidationError);
    CHECK_THROWS_AS(parse_config(json{{"N", {100, 50}}}), ValidationError);
    CHECK_THROWS_AS(parse_config(json{{"scheme", "NOBA"}, {"lambda_s", 0.5}}), ValidationError);
    CHECK_THROWS_AS(parse_config(json{{"params", {{"beta", -1.0}}}}), ValidationError);
    CHECK_THROWS_AS(parse_config(json{{"experiment", "lambda_sweep"}, {"scheme", "EM"}}), ValidationError);
    CHECK_THROWS_AS(parse_config(json{{"provider", "oracle"}}), ValidationError);
}

TEST_CASE("celeba64 preset expansion") {
    const ExperimentConfig cfg = parse_config(json{{"preset", "celeba64"}});
    CHECK(cfg.params.gamma_cap == 0.005);
    CHECK(cfg.params.nu == 4.005);
    CHECK(cfg.params.beta == 8.0);
    const ExperimentConfig over = parse_config(json{{"preset", "celeba64"}, {"params", {{"beta", 4.0}}}});
    CHECK(over.params.beta == 4.0);
    CHECK(over.params.nu == 4.005);
}

TEST_CASE("config round trip") {
    const ExperimentConfig base = parse_config(json{{"preset", "celeba64"},
                                                    {"experiment", "error_curve"},
                                                    {"scheme", {"EM", "ROBAB", "RBAO"}},
                                                    {"N", {20, 40}},
                                                    {"lambda_s", "table"},
                                                    {"denoise", true},
                                                    {"seeds", {3, 4}},
                                                    {"metric", "cov_fro"},
                                                    {"estimator", "exact"},
                                                    {"truncation", {{"t0", 0.3}, {"score", "zero"}}}});
    CHECK(parse_config(serialize(base)) == base);
    CHECK(base.truncation.t0 == 0.3);
    CHECK(base.lambda_mode == LambdaMode::table);
    const ExperimentConfig naive = parse_config(json{{"scheme", "ROBA"}, {"lambda_s", nullptr}});
    CHECK(naive.lambda_mode == LambdaMode::naive);
    CHECK(parse_config(serialize(naive)) == naive);
    const ExperimentConfig def;
    CHECK(parse_config(serialize(def)) == def);
}

TEST_CASE("syntax errors report line and column") {
    CHECK_THROWS_WITH_AS(parse_config_text("{\n  \"N\": 100,\n  \"scheme\" \"ROBA\"\n}", "cfg.json"),
                         doctest::Contains("cfg.json:3:"), ValidationError);
    const fs::path dir = scratch("load");
    std::ofstream(dir / "ok.json") << R"({"preset": "cifar10", "scheme": "RBAO", "N": 50})";
    const ExperimentConfig cfg = load_config((dir / "ok.json").string());
    CHECK(cfg.lambda_s == 0.7);
    CHECK_THROWS_AS(load_config((dir / "missing.json").string()), ValidationError);
}

TEST_CASE("sample experiment is reproducible bitwise") {
    const fs::path a = scratch("sample_a"), b = scratch("sample_b");
    ExperimentConfig cfg = small_config(ExperimentKind::sample, a);
    cfg.seeds = {7};
    cfg.write_samples = true;
    const Manifest ma = run_experiment(cfg);
    cfg.output_dir = b.string();
    cfg.threads = 3;
    const Manifest mb = run_experiment(cfg);
    CHECK(ma.ok());
    CHECK(ma.exit_code() == 0);
    CHECK(ma.total_nfe == 100);
    CHECK(ma.config_sha256 == mb.config_sha256);
    REQUIRE(ma.outputs.size() == mb.outputs.size());
    for (std::size_t k = 0; k < ma.outputs.size(); ++k) {
        CHECK(ma.outputs[k].path == mb.outputs[k].path);
        CHECK(ma.outputs[k].sha256 == mb.outputs[k].sha256);
        CHECK(slurp(a / ma.outputs[k].path) == slurp(b / mb.outputs[k].path));
    }
    CHECK(fs::exists(a / "samples_ROBA_N100_seed7.csv"));
    CHECK(verify_manifest(ma, a.string()).empty());
    const json man = json::parse(slurp(a / "manifest.json"));
    CHECK(man["library_version"] == kLibraryVersion);
    CHECK(man["seeds"] == json{7});
    CHECK(man.contains("wall_time_s"));
    CHECK(man["seed_derivation"] == kSeedDerivation);

    std::ofstream(a / "results.csv", std::ios::app) << "tampered\n";
    CHECK(verify_manifest(ma, a.string()) == std::vector<std::string>{"results.csv"});
}

TEST_CASE("error curve writes three rows per seed per scheme") {
    const fs::path out = scratch("curve");
    ExperimentConfig cfg = small_config(ExperimentKind::error_curve, out);
    cfg.schemes = {Scheme::ROBA, Scheme::NOBA};
    cfg.n_steps = {50, 100, 200};
    cfg.seeds = {1, 2};
    cfg.lambda_mode = LambdaMode::table;
    cfg.lambda_s.reset();
    cfg.estimator = analysis::Estimator::exact;
    const Manifest m = run_experiment(cfg);
    REQUIRE(m.ok());
    const std::string csv = slurp(out / "results.csv");
    CHECK(csv.rfind("scheme,N,nfe,lambda_s,metric,value,seed\n", 0) == 0);
    CHECK(count_lines(csv) == 1 + 3 * 2 * 2);
    CHECK(csv.find("ROBA,100,100,0.37,w2,") != std::string::npos);
    CHECK(csv.find("NOBA,200,400,,w2,") != std::string::npos);
    CHECK(m.total_nfe == 2 * (350 + 700));
}

TEST_CASE("truncation experiment reports fitted slopes") {
    const fs::path out = scratch("trunc");
    ExperimentConfig cfg = small_config(ExperimentKind::truncation, out);
    cfg.schemes = {Scheme::NBAO, Scheme::RBAO};
    cfg.lambda_mode = LambdaMode::naive;
    cfg.lambda_s.reset();
    const Manifest m = run_experiment(cfg);
    REQUIRE(m.ok());
    const json summary = json::parse(slurp(out / "summary.json"));
    REQUIRE(summary["runs"].size() == 2);
    for (const json& run : summary["runs"]) {
        CHECK(run["fitted_slope_x"].is_number());
        CHECK(run["fitted_slope_m"].is_number());
        CHECK(run["h_values"].size() == 4);
    }
    CHECK(count_lines(slurp(out / "truncation.csv")) == 1 + 2 * 4);
    CHECK(verify_manifest(m, out.string()).empty());
}

TEST_CASE("lambda sweep experiment") {
    const fs::path out = scratch("sweep");
    ExperimentConfig cfg = small_config(ExperimentKind::lambda_sweep, out);
    cfg.lambda_grid = {0.2, 0.37, 0.6};
    cfg.estimator = analysis::Estimator::exact;
    const Manifest m = run_experiment(cfg);
    REQUIRE(m.ok());
    CHECK(count_lines(slurp(out / "results.csv")) == 1 + 3);
    CHECK(m.total_nfe == 300);
}

TEST_CASE("failing runs are recorded and give a nonzero exit") {
    const fs::path out = scratch("fail");
    ExperimentConfig cfg = small_config(ExperimentKind::sample, out);
    cfg.provider = "external:false";
    cfg.n_chains = 4;
    const Manifest m = run_experiment(cfg);
    CHECK_FALSE(m.ok());
    CHECK(m.exit_code() == 2);
    const json man = json::parse(slurp(out / "manifest.json"));
    CHECK(man["errors"].size() == 1);
    CHECK(verify_manifest(m, out.string()).empty());

    ExperimentConfig bad = small_config(ExperimentKind::sample, out);
    const fs::path file = out / "not_a_dir";
    std::ofstream(file) << "x";
    bad.output_dir = (file / "sub").string();
    CHECK_THROWS_AS(run_experiment(bad), ValidationError);
}

TEST_CASE("canonical config ignores output location and threads") {
    ExperimentConfig a = small_config(ExperimentKind::sample, "/tmp/x");
    ExperimentConfig b = a;
    b.output_dir = "/tmp/y";
    b.threads = 8;
    CHECK(canonical_config(a) == canonical_config(b));
    b.n_chains = 2001;
    CHECK(canonical_config(a) != canonical_config(b));
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("CLI exit codes") {
    const fs::path dir = scratch("cli");
    std::ofstream(dir / "good.json") << R"({"preset": "cifar10", "scheme": "ROBA", "N": 20, "n_chains": 200})";
    std::ofstream(dir / "bad.json") << R"({"preset": "cifar10", "foo": 1})";
    std::ofstream(dir / "broken.json") << "{";
    CHECK(run_cli("validate-config --config " + (dir / "good.json").string()) == 0);
    CHECK(run_cli("validate-config --config " + (dir / "bad.json").string()) == 1);
    CHECK(run_cli("validate-config --config " + (dir / "broken.json").string()) == 1);
    CHECK(run_cli("sample --config " + (dir / "good.json").string() + " --out " + (dir / "o1").string()) == 0);
    CHECK(fs::exists(dir / "o1" / "manifest.json"));
    CHECK(run_cli("sample --steps 1 --out " + (dir / "o2").string()) == 1);
    CHECK(run_cli("curve --scheme NOBA --lambda-s 0.3 --out " + (dir / "o3").string()) == 1);
    CHECK(run_cli("sample --chains 4 --steps 4 --provider external:false --out " + (dir / "o4").string()) == 2);
    CHECK(run_cli("sample --no-such-flag") == 1);
    CHECK(run_cli("curve --chains 500 --steps 10,20 --scheme EM,ROBA --lambda-s naive --denoise --seed 3 --out " +
                  (dir / "o5").string()) == 0);
    CHECK(count_lines(slurp(dir / "o5" / "results.csv")) == 1 + 4);
    CHECK(run_cli("truncation --chains 500 --scheme NBAO --provider zero --out " + (dir / "o6").string()) == 0);
}
