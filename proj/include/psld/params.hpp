#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "psld/mat2.hpp"

namespace psld {

/// Hyperparameters of the phase-space Langevin forward SDE
///   dz = F z dt + G dw,  F = (beta/2) [[-Gamma, M^-1], [-1, -nu]],
///   G = diag(sqrt(Gamma beta), sqrt(M nu beta)),
/// both Kronecker the d-dimensional identity.
struct PsldParams {
    double beta = 8.0;
    double gamma_cap = 0.01;
    double nu = 4.01;
    double m_inv = 4.0;
    /// Initial momentum covariance is gamma_init * M * I.
    double gamma_init = 0.04;
    std::size_t dim = 2;
    double t_max = 1.0;
    double eps_cutoff = 1e-3;

    double mass() const { return 1.0 / m_inv; }
    double half_beta() const { return 0.5 * beta; }

    friend bool operator==(const PsldParams&, const PsldParams&) = default;
};

PsldParams cifar10_preset();
PsldParams celeba64_preset();
/// "cifar10" or "celeba64"; nullopt for anything else.
std::optional<PsldParams> preset_by_name(std::string_view name);

/// Returns p unchanged or throws ValidationError naming the first violated field.
const PsldParams& validate_params(const PsldParams& p);

/// F per (x_i, m_i) block.
Mat2 drift_matrix(const PsldParams& p);

/// Diagonal of G per block: (sqrt(Gamma beta), sqrt(M nu beta)).
Vec2 diffusion_diag(const PsldParams& p);

/// G G^T per block.
Mat2 diffusion_covariance(const PsldParams& p);

/// Stationary covariance diag(1, M) of the forward SDE.
Mat2 stationary_covariance(const PsldParams& p);

}  // namespace psld
