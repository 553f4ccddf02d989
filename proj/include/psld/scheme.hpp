#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace psld {

/// EM is plain Euler-Maruyama on the reverse SDE. N* are the naive
/// compositions of the A, B, O splitting pieces; R* are the reduced variants
/// that share the first score evaluation, shift the last half-step
/// conditioning time, and may scale position-space noise by lambda_s.
enum class Scheme { EM, NOBA, NBAO, NOBAB, ROBA, RBAO, ROBAB };

inline constexpr std::array<Scheme, 7> kAllSchemes{Scheme::EM,   Scheme::NOBA, Scheme::NBAO, Scheme::NOBAB,
                                                   Scheme::ROBA, Scheme::RBAO, Scheme::ROBAB};

std::string to_string(Scheme s);
Scheme parse_scheme(std::string_view name);

/// Score evaluations per composed step.
constexpr std::size_t nfe_per_step(Scheme s) {
    switch (s) {
        case Scheme::EM: return 1;
        case Scheme::NOBA: return 2;
        case Scheme::NBAO: return 2;
        case Scheme::NOBAB: return 3;
        case Scheme::ROBA: return 1;
        case Scheme::RBAO: return 1;
        case Scheme::ROBAB: return 2;
    }
    return 0;
}

constexpr bool is_reduced(Scheme s) {
    return s == Scheme::ROBA || s == Scheme::RBAO || s == Scheme::ROBAB;
}

/// Naive counterpart of a reduced scheme (identity for the others).
Scheme naive_counterpart(Scheme s);

struct SchemeSpec {
    Scheme scheme = Scheme::ROBA;
    /// Absent: the O step injects the exact OU position noise 1 - e^{-h beta Gamma}.
    std::optional<double> lambda_s;
    bool denoise_last = false;

    friend bool operator==(const SchemeSpec&, const SchemeSpec&) = default;
};

/// Throws ValidationError if lambda_s is given for a non-reduced scheme or is not positive.
const SchemeSpec& validate_scheme(const SchemeSpec& spec);

/// Tuned lambda_s per step budget for the reduced schemes (CIFAR-10 FID
/// tuning at 50/70/100/150/200 steps). Other budgets interpolate linearly in
/// N and clamp at the ends. nullopt for non-reduced schemes.
std::optional<double> default_lambda_s(Scheme s, std::size_t n_steps);

}  // namespace psld
