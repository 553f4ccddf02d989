#include "psld/harness/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "psld/errors.hpp"

namespace psld::harness {

using nlohmann::json;

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::sample: return "sample";
        case ExperimentKind::error_curve: return "error_curve";
        case ExperimentKind::lambda_sweep: return "lambda_sweep";
        case ExperimentKind::truncation: return "truncation";
    }
    return "?";
}

ExperimentKind parse_experiment(std::string_view name) {
    if (name == "sample") return ExperimentKind::sample;
    if (name == "error_curve") return ExperimentKind::error_curve;
    if (name == "lambda_sweep") return ExperimentKind::lambda_sweep;
    if (name == "truncation") return ExperimentKind::truncation;
    throw ValidationError("field 'experiment': unknown experiment '" + std::string(name) +
                          "' (expected sample, error_curve, lambda_sweep or truncation)");
}

GaussianDataSpec default_data(std::size_t dim) {
    GaussianDataSpec d;
    for (std::size_t i = 0; i < dim; ++i) {
        d.mu0_x.push_back(i % 2 == 0 ? 1.0 : -0.5);
        d.var0_x.push_back(i % 2 == 0 ? 0.25 : 0.5);
    }
    return d;
}

SchemeSpec scheme_for(const ExperimentConfig& cfg, Scheme scheme, std::size_t n_steps) {
    SchemeSpec s{scheme, std::nullopt, cfg.denoise};
    if (is_reduced(scheme)) {
        if (cfg.lambda_mode == LambdaMode::fixed) {
            s.lambda_s = cfg.lambda_s;
        } else if (cfg.lambda_mode == LambdaMode::table) {
            s.lambda_s = default_lambda_s(scheme, n_steps);
        }
    }
    return s;
}

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
    throw ValidationError("field '" + field + "': " + what);
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& item : obj.items()) {
        if (!allowed.count(item.key())) {
            throw ValidationError("unknown key '" + where + item.key() + "'");
        }
    }
}

double get_real(const json& v, const std::string& field) {
    if (!v.is_number()) {
        field_error(field, "expected a number");
    }
    return v.get<double>();
}

std::uint64_t get_uint(const json& v, const std::string& field) {
    if (v.is_number_unsigned()) {
        return v.get<std::uint64_t>();
    }
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    field_error(field, "expected a non-negative integer");
}

std::string get_string(const json& v, const std::string& field) {
    if (!v.is_string()) {
        field_error(field, "expected a string");
    }
    return v.get<std::string>();
}

bool get_bool(const json& v, const std::string& field) {
    if (!v.is_boolean()) {
        field_error(field, "expected true or false");
    }
    return v.get<bool>();
}

std::vector<double> get_real_list(const json& v, const std::string& field) {
    if (!v.is_array()) {
        field_error(field, "expected an array of numbers");
    }
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k) {
        out.push_back(get_real(v[k], field + "[" + std::to_string(k) + "]"));
    }
    return out;
}

template <class T, class Fn>
std::vector<T> one_or_many(const json& v, const std::string& field, Fn&& get) {
    std::vector<T> out;
    if (v.is_array()) {
        for (std::size_t k = 0; k < v.size(); ++k) {
            out.push_back(get(v[k], field + "[" + std::to_string(k) + "]"));
        }
    } else {
        out.push_back(get(v, field));
    }
    return out;
}

template <class Fn>
auto wrap_parse(const std::string& field, Fn&& fn) {
    try {
        return fn();
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        if (msg.rfind("field '", 0) == 0) {
            throw;
        }
        field_error(field, msg);
    }
}

void apply_params(const json& j, PsldParams& p, bool& dim_given) {
    if (!j.is_object()) {
        field_error("params", "expected an object");
    }
    reject_unknown(j, {"beta", "gamma_cap", "nu", "m_inv", "gamma_init", "dim", "t_max", "eps_cutoff"}, "params.");
    if (j.contains("beta")) p.beta = get_real(j["beta"], "params.beta");
    if (j.contains("gamma_cap")) p.gamma_cap = get_real(j["gamma_cap"], "params.gamma_cap");
    if (j.contains("nu")) p.nu = get_real(j["nu"], "params.nu");
    if (j.contains("m_inv")) p.m_inv = get_real(j["m_inv"], "params.m_inv");
    if (j.contains("gamma_init")) p.gamma_init = get_real(j["gamma_init"], "params.gamma_init");
    if (j.contains("t_max")) p.t_max = get_real(j["t_max"], "params.t_max");
    if (j.contains("eps_cutoff")) p.eps_cutoff = get_real(j["eps_cutoff"], "params.eps_cutoff");
    if (j.contains("dim")) {
        p.dim = static_cast<std::size_t>(get_uint(j["dim"], "params.dim"));
        dim_given = true;
    }
}

const std::set<std::string> kTopLevel{"experiment", "preset",   "params",      "data",        "scheme",
                                      "lambda_s",   "denoise",  "striding",    "N",           "n_chains",
                                      "seeds",      "seed",     "output_dir",  "provider",    "metric",
                                      "estimator",  "lambda_grid", "truncation", "write_samples", "threads"};

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k < std::min(byte, text.size()); ++k) {
        if (text[k] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace

json parse_config_text(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ValidationError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                              ": JSON parse error: " + e.what());
    }
}

json read_config_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open config file '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

ExperimentConfig parse_config(const json& j) {
    if (!j.is_object()) {
        throw ValidationError("config must be a JSON object");
    }
    reject_unknown(j, kTopLevel, "");
    ExperimentConfig cfg;

    if (j.contains("experiment")) {
        cfg.experiment = parse_experiment(get_string(j["experiment"], "experiment"));
    }
    if (j.contains("preset")) {
        cfg.preset = get_string(j["preset"], "preset");
        const auto p = preset_by_name(cfg.preset);
        if (!p) {
            field_error("preset", "unknown preset '" + cfg.preset + "' (expected cifar10 or celeba64)");
        }
        cfg.params = *p;
    }
    bool dim_given = false;
    if (j.contains("params")) {
        apply_params(j["params"], cfg.params, dim_given);
    }
    if (j.contains("data")) {
        const json& d = j["data"];
        if (!d.is_object()) {
            field_error("data", "expected an object");
        }
        reject_unknown(d, {"mu0_x", "var0_x"}, "data.");
        if (!d.contains("mu0_x") || !d.contains("var0_x")) {
            field_error("data", "needs both mu0_x and var0_x");
        }
        cfg.data.mu0_x = get_real_list(d["mu0_x"], "data.mu0_x");
        cfg.data.var0_x = get_real_list(d["var0_x"], "data.var0_x");
        if (!dim_given) {
            cfg.params.dim = cfg.data.mu0_x.size();
        }
    } else {
        cfg.data = default_data(cfg.params.dim);
    }

    if (j.contains("scheme")) {
        cfg.schemes = one_or_many<Scheme>(j["scheme"], "scheme", [](const json& v, const std::string& f) {
            const std::string name = get_string(v, f);
            return wrap_parse(f, [&] { return parse_scheme(name); });
        });
    }
    if (j.contains("denoise")) cfg.denoise = get_bool(j["denoise"], "denoise");
    if (j.contains("striding")) {
        const std::string name = get_string(j["striding"], "striding");
        cfg.striding = wrap_parse("striding", [&] { return parse_striding(name); });
    }
    if (j.contains("N")) {
        cfg.n_steps = one_or_many<std::size_t>(j["N"], "N", [](const json& v, const std::string& f) {
            return static_cast<std::size_t>(get_uint(v, f));
        });
    }
    if (j.contains("n_chains")) cfg.n_chains = static_cast<std::size_t>(get_uint(j["n_chains"], "n_chains"));
    if (j.contains("seeds") && j.contains("seed")) {
        field_error("seed", "give either seed or seeds, not both");
    }
    if (j.contains("seeds")) {
        if (!j["seeds"].is_array()) {
            field_error("seeds", "expected an array of non-negative integers");
        }
        cfg.seeds = one_or_many<std::uint64_t>(j["seeds"], "seeds", get_uint);
    }
    if (j.contains("seed")) cfg.seeds = {get_uint(j["seed"], "seed")};
    if (j.contains("output_dir")) cfg.output_dir = get_string(j["output_dir"], "output_dir");
    if (j.contains("provider")) cfg.provider = get_string(j["provider"], "provider");
    if (j.contains("metric")) {
        const std::string name = get_string(j["metric"], "metric");
        cfg.metric = wrap_parse("metric", [&] { return analysis::parse_metric(name); });
    }
    if (j.contains("estimator")) {
        const std::string name = get_string(j["estimator"], "estimator");
        cfg.estimator = wrap_parse("estimator", [&] { return analysis::parse_estimator(name); });
    }
    if (j.contains("lambda_grid")) cfg.lambda_grid = get_real_list(j["lambda_grid"], "lambda_grid");
    if (j.contains("truncation")) {
        const json& t = j["truncation"];
        if (!t.is_object()) {
            field_error("truncation", "expected an object");
        }
        reject_unknown(t, {"score", "t0", "h_values"}, "truncation.");
        if (t.contains("score")) {
            const std::string name = get_string(t["score"], "truncation.score");
            cfg.truncation.score = wrap_parse("truncation.score", [&] { return analysis::parse_probe_score(name); });
        }
        if (t.contains("t0")) cfg.truncation.t0 = get_real(t["t0"], "truncation.t0");
        if (t.contains("h_values")) cfg.truncation.h_values = get_real_list(t["h_values"], "truncation.h_values");
    }
    if (j.contains("write_samples")) cfg.write_samples = get_bool(j["write_samples"], "write_samples");
    if (j.contains("threads")) cfg.threads = static_cast<unsigned>(get_uint(j["threads"], "threads"));

    const std::size_t n_reduced = static_cast<std::size_t>(
        std::count_if(cfg.schemes.begin(), cfg.schemes.end(), [](Scheme s) { return is_reduced(s); }));
    if (j.contains("lambda_s")) {
        const json& l = j["lambda_s"];
        if (l.is_null()) {
            cfg.lambda_mode = LambdaMode::naive;
        } else if (l.is_string() && l.get<std::string>() == "table") {
            cfg.lambda_mode = LambdaMode::table;
        } else if (l.is_number()) {
            cfg.lambda_mode = LambdaMode::fixed;
            cfg.lambda_s = l.get<double>();
        } else {
            field_error("lambda_s", "expected a positive number, null (naive noise) or \"table\"");
        }
    } else if (n_reduced == 1 && cfg.schemes.size() == 1 && cfg.n_steps.size() == 1) {
        cfg.lambda_mode = LambdaMode::fixed;
        cfg.lambda_s = default_lambda_s(cfg.schemes.front(), cfg.n_steps.front());
    }

    validate_config(cfg);
    return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
    wrap_parse("params", [&] { return validate_params(cfg.params); });
    wrap_parse("data", [&] {
        validate_data(cfg.params, cfg.data);
        return 0;
    });
    if (cfg.schemes.empty()) {
        field_error("scheme", "at least one scheme is required");
    }
    if (cfg.n_steps.empty()) {
        field_error("N", "at least one step count is required");
    }
    for (const std::size_t n : cfg.n_steps) {
        if (n < 2) {
            field_error("N", "every step count must be >= 2");
        }
    }
    for (std::size_t k = 1; k < cfg.n_steps.size(); ++k) {
        if (cfg.n_steps[k] <= cfg.n_steps[k - 1]) {
            field_error("N", "step counts must be strictly increasing");
        }
    }
    if (cfg.n_chains < 2) {
        field_error("n_chains", "must be >= 2");
    }
    if (cfg.seeds.empty()) {
        field_error("seeds", "at least one seed is required");
    }
    if (cfg.output_dir.empty()) {
        field_error("output_dir", "must not be empty");
    }
    if (cfg.threads == 0) {
        field_error("threads", "must be >= 1");
    }
    const bool any_reduced = std::any_of(cfg.schemes.begin(), cfg.schemes.end(), [](Scheme s) { return is_reduced(s); });
    if (cfg.lambda_mode == LambdaMode::fixed) {
        if (!cfg.lambda_s || !(*cfg.lambda_s > 0.0)) {
            field_error("lambda_s", "must be > 0");
        }
        if (!any_reduced) {
            field_error("lambda_s", "only reduced schemes (ROBA, RBAO, ROBAB) take lambda_s");
        }
    } else if (cfg.lambda_s) {
        field_error("lambda_s", "a value is only allowed in fixed mode");
    }
    const bool external = cfg.provider.rfind("external:", 0) == 0;
    if (!(cfg.provider == "gaussian" || cfg.provider == "zero" || (external && cfg.provider.size() > 9))) {
        field_error("provider", "expected gaussian, zero or external:<command>");
    }
    if (external && cfg.estimator == analysis::Estimator::exact) {
        field_error("estimator", "exact moment propagation needs an in-process provider");
    }
    for (const double l : cfg.lambda_grid) {
        if (!(l > 0.0)) {
            field_error("lambda_grid", "every value must be > 0");
        }
    }
    if (cfg.experiment == ExperimentKind::lambda_sweep && !std::all_of(cfg.schemes.begin(), cfg.schemes.end(), is_reduced)) {
        field_error("scheme", "lambda_sweep needs reduced schemes only");
    }
    const auto& tr = cfg.truncation;
    if (tr.h_values.size() < 2) {
        field_error("truncation.h_values", "needs at least two step sizes");
    }
    for (std::size_t k = 0; k < tr.h_values.size(); ++k) {
        if (!(tr.h_values[k] > 0.0) || (k > 0 && !(tr.h_values[k] < tr.h_values[k - 1]))) {
            field_error("truncation.h_values", "must be positive and strictly decreasing");
        }
    }
    if (!(tr.t0 >= 0.0) || !(tr.t0 + tr.h_values.front() <= cfg.params.t_max)) {
        field_error("truncation.t0", "t0 + max(h) must lie in [0, T]");
    }
}

ExperimentConfig load_config(const std::string& path) {
    return parse_config(read_config_json(path));
}

json serialize(const ExperimentConfig& cfg) {
    json j;
    j["experiment"] = to_string(cfg.experiment);
    j["preset"] = cfg.preset;
    const PsldParams& p = cfg.params;
    j["params"] = {{"beta", p.beta},   {"gamma_cap", p.gamma_cap},   {"nu", p.nu},       {"m_inv", p.m_inv},
                   {"gamma_init", p.gamma_init}, {"dim", p.dim}, {"t_max", p.t_max}, {"eps_cutoff", p.eps_cutoff}};
    j["data"] = {{"mu0_x", cfg.data.mu0_x}, {"var0_x", cfg.data.var0_x}};
    json schemes = json::array();
    for (const Scheme s : cfg.schemes) {
        schemes.push_back(to_string(s));
    }
    j["scheme"] = schemes;
    switch (cfg.lambda_mode) {
        case LambdaMode::table: j["lambda_s"] = "table"; break;
        case LambdaMode::naive: j["lambda_s"] = nullptr; break;
        case LambdaMode::fixed: j["lambda_s"] = *cfg.lambda_s; break;
    }
    j["denoise"] = cfg.denoise;
    j["striding"] = to_string(cfg.striding);
    j["N"] = cfg.n_steps;
    j["n_chains"] = cfg.n_chains;
    j["seeds"] = cfg.seeds;
    j["output_dir"] = cfg.output_dir;
    j["provider"] = cfg.provider;
    j["metric"] = analysis::to_string(cfg.metric);
    j["estimator"] = analysis::to_string(cfg.estimator);
    j["lambda_grid"] = cfg.lambda_grid;
    j["truncation"] = {{"score", analysis::to_string(cfg.truncation.score)},
                       {"t0", cfg.truncation.t0},
                       {"h_values", cfg.truncation.h_values}};
    j["write_samples"] = cfg.write_samples;
    j["threads"] = cfg.threads;
    return j;
}

}  // namespace psld::harness
