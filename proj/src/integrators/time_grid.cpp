#include "psld/time_grid.hpp"

#include <cmath>

#include "psld/errors.hpp"

namespace psld {

std::string to_string(Striding s) {
    return s == Striding::quadratic ? "quadratic" : "uniform";
}

Striding parse_striding(std::string_view name) {
    if (name == "quadratic") {
        return Striding::quadratic;
    }
    if (name == "uniform") {
        return Striding::uniform;
    }
    throw ValidationError("striding must be 'quadratic' or 'uniform', got '" + std::string(name) + "'");
}

TimeGrid build_time_grid(double t_max, double eps, std::size_t n_steps, Striding striding) {
    if (n_steps < 2) {
        throw ValidationError("time grid needs N >= 2 steps");
    }
    if (!(eps >= 0.0 && eps < t_max) || !std::isfinite(t_max)) {
        throw ValidationError("time grid needs 0 <= eps < T");
    }
    TimeGrid g;
    g.striding = striding;
    g.times.resize(n_steps + 1);
    const double span = t_max - eps;
    const double n = static_cast<double>(n_steps);
    for (std::size_t i = 0; i <= n_steps; ++i) {
        const double u = static_cast<double>(i) / n;
        const double frac = striding == Striding::quadratic ? u * u : u;
        g.times[n_steps - i] = eps + span * frac;
    }
    g.times.front() = t_max;
    g.times.back() = eps;
    for (std::size_t k = 1; k < g.times.size(); ++k) {
        if (!(g.times[k] < g.times[k - 1])) {
            throw ValidationError("time grid is not strictly decreasing; reduce N or widen [eps, T]");
        }
    }
    return g;
}

}  // namespace psld
