#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace psld {

/// A batch of (x, m) chains. Both arrays are row-major [n_chains x dim].
/// `t` is the forward time the batch represents.
struct JointState {
    std::size_t n_chains = 0;
    std::size_t dim = 0;
    std::vector<double> x;
    std::vector<double> m;
    double t = 0.0;

    JointState() = default;
    JointState(std::size_t n, std::size_t d, double time = 0.0)
        : n_chains(n), dim(d), x(n * d, 0.0), m(n * d, 0.0), t(time) {}

    std::size_t size() const { return n_chains * dim; }
    std::span<double> x_row(std::size_t chain) { return {x.data() + chain * dim, dim}; }
    std::span<double> m_row(std::size_t chain) { return {m.data() + chain * dim, dim}; }
    std::span<const double> x_row(std::size_t chain) const { return {x.data() + chain * dim, dim}; }
    std::span<const double> m_row(std::size_t chain) const { return {m.data() + chain * dim, dim}; }

    friend bool operator==(const JointState&, const JointState&) = default;
};

/// Score components s^x, s^m for every chain of a JointState, plus the
/// forward time the provider was conditioned on.
struct ScoreEval {
    std::size_t n_chains = 0;
    std::size_t dim = 0;
    std::vector<double> sx;
    std::vector<double> sm;
    double t_cond = 0.0;

    ScoreEval() = default;
    ScoreEval(std::size_t n, std::size_t d, double t)
        : n_chains(n), dim(d), sx(n * d, 0.0), sm(n * d, 0.0), t_cond(t) {}

    friend bool operator==(const ScoreEval&, const ScoreEval&) = default;
};

/// Throws ContractError unless x and m sizes agree with n_chains * dim.
void check_shape(const JointState& s);
/// Throws ContractError unless `se` matches the shape of `s`.
void check_shape(const JointState& s, const ScoreEval& se);
/// Throws NumericalError naming `where` if any entry is NaN or Inf.
void check_finite(const JointState& s, const std::string& where);
void check_finite(const ScoreEval& se, const std::string& where);

}  // namespace psld
