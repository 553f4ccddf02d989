#include "psld/scheme.hpp"

#include <cmath>

#include "psld/errors.hpp"

namespace psld {

std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::EM: return "EM";
        case Scheme::NOBA: return "NOBA";
        case Scheme::NBAO: return "NBAO";
        case Scheme::NOBAB: return "NOBAB";
        case Scheme::ROBA: return "ROBA";
        case Scheme::RBAO: return "RBAO";
        case Scheme::ROBAB: return "ROBAB";
    }
    return "?";
}

Scheme parse_scheme(std::string_view name) {
    for (Scheme s : kAllSchemes) {
        if (to_string(s) == name) {
            return s;
        }
    }
    throw ValidationError("unknown scheme '" + std::string(name) + "' (expected EM, NOBA, NBAO, NOBAB, ROBA, RBAO, ROBAB)");
}

Scheme naive_counterpart(Scheme s) {
    switch (s) {
        case Scheme::ROBA: return Scheme::NOBA;
        case Scheme::RBAO: return Scheme::NBAO;
        case Scheme::ROBAB: return Scheme::NOBAB;
        default: return s;
    }
}

const SchemeSpec& validate_scheme(const SchemeSpec& spec) {
    if (spec.lambda_s) {
        if (!is_reduced(spec.scheme)) {
            throw ValidationError("lambda_s is only permitted for reduced schemes (ROBA, RBAO, ROBAB), not " +
                                  to_string(spec.scheme));
        }
        if (!(std::isfinite(*spec.lambda_s) && *spec.lambda_s > 0.0)) {
            throw ValidationError("lambda_s must be > 0");
        }
    }
    return spec;
}

namespace {

constexpr std::array<double, 5> kBudgets{50, 70, 100, 150, 200};
constexpr std::array<double, 5> kRoba{1.16, 0.66, 0.37, 0.2, 0.13};
constexpr std::array<double, 5> kRbao{0.7, 0.44, 0.3, 0.18, 0.1};
constexpr std::array<double, 5> kRobab{0.2, 0.16, 0.14, 0.12, 0.1};

double interpolate(const std::array<double, 5>& table, double n) {
    if (n <= kBudgets.front()) {
        return table.front();
    }
    for (std::size_t i = 1; i < kBudgets.size(); ++i) {
        if (n <= kBudgets[i]) {
            const double w = (n - kBudgets[i - 1]) / (kBudgets[i] - kBudgets[i - 1]);
            return table[i - 1] + w * (table[i] - table[i - 1]);
        }
    }
    return table.back();
}

}  // namespace

std::optional<double> default_lambda_s(Scheme s, std::size_t n_steps) {
    const double n = static_cast<double>(n_steps);
    switch (s) {
        case Scheme::ROBA: return interpolate(kRoba, n);
        case Scheme::RBAO: return interpolate(kRbao, n);
        case Scheme::ROBAB: return interpolate(kRobab, n);
        default: return std::nullopt;
    }
}

}  // namespace psld
