#include "psld/state.hpp"

#include <algorithm>
#include <cmath>

#include "psld/errors.hpp"

namespace psld {

namespace {

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double e) { return std::isfinite(e); });
}

std::string shape_str(std::size_t n, std::size_t d) {
    return "[" + std::to_string(n) + " x " + std::to_string(d) + "]";
}

}  // namespace

void check_shape(const JointState& s) {
    const std::size_t want = s.n_chains * s.dim;
    if (s.x.size() != want || s.m.size() != want) {
        throw ContractError("JointState arrays do not match shape " + shape_str(s.n_chains, s.dim));
    }
}

void check_shape(const JointState& s, const ScoreEval& se) {
    check_shape(s);
    if (se.n_chains != s.n_chains || se.dim != s.dim || se.sx.size() != s.size() ||
        se.sm.size() != s.size()) {
        throw ContractError("ScoreEval shape " + shape_str(se.n_chains, se.dim) +
                            " does not match state " + shape_str(s.n_chains, s.dim));
    }
}

void check_finite(const JointState& s, const std::string& where) {
    if (!all_finite(s.x) || !all_finite(s.m)) {
        throw NumericalError("non-finite state at " + where);
    }
}

void check_finite(const ScoreEval& se, const std::string& where) {
    if (!all_finite(se.sx) || !all_finite(se.sm)) {
        throw NumericalError("non-finite score at " + where);
    }
}

}  // namespace psld
