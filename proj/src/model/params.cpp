#include "psld/params.hpp"

#include <cmath>

#include "psld/errors.hpp"

namespace psld {

PsldParams cifar10_preset() {
    PsldParams p;
    p.gamma_cap = 0.01;
    p.nu = 4.01;
    return p;
}

PsldParams celeba64_preset() {
    PsldParams p;
    p.gamma_cap = 0.005;
    p.nu = 4.005;
    return p;
}

std::optional<PsldParams> preset_by_name(std::string_view name) {
    if (name == "cifar10") {
        return cifar10_preset();
    }
    if (name == "celeba64") {
        return celeba64_preset();
    }
    return std::nullopt;
}

namespace {

void require_positive(double v, const char* field) {
    if (!(std::isfinite(v) && v > 0.0)) {
        throw ValidationError(std::string(field) + " must be > 0");
    }
}

}  // namespace

const PsldParams& validate_params(const PsldParams& p) {
    require_positive(p.beta, "beta");
    require_positive(p.gamma_cap, "gamma_cap");
    require_positive(p.nu, "nu");
    require_positive(p.m_inv, "m_inv");
    require_positive(p.gamma_init, "gamma_init");
    require_positive(p.t_max, "t_max");
    require_positive(p.eps_cutoff, "eps_cutoff");
    if (p.dim == 0) {
        throw ValidationError("dim must be > 0");
    }
    if (!(p.eps_cutoff < p.t_max)) {
        throw ValidationError("eps_cutoff < t_max violated");
    }
    return p;
}

Mat2 drift_matrix(const PsldParams& p) {
    return p.half_beta() * Mat2{-p.gamma_cap, p.m_inv, -1.0, -p.nu};
}

Vec2 diffusion_diag(const PsldParams& p) {
    return {std::sqrt(p.gamma_cap * p.beta), std::sqrt(p.mass() * p.nu * p.beta)};
}

Mat2 diffusion_covariance(const PsldParams& p) {
    return Mat2::diag(p.gamma_cap * p.beta, p.mass() * p.nu * p.beta);
}

Mat2 stationary_covariance(const PsldParams& p) {
    return Mat2::diag(1.0, p.mass());
}

}  // namespace psld
