#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace psld {

enum class Striding { quadratic, uniform };

std::string to_string(Striding s);
Striding parse_striding(std::string_view name);

/// Forward sampling times t_N = T > ... > t_0 = eps, stored in the order the
/// sampler visits them (times.front() == T, times.back() == eps).
struct TimeGrid {
    std::vector<double> times;
    Striding striding = Striding::quadratic;

    std::size_t n_steps() const { return times.empty() ? 0 : times.size() - 1; }
};

/// Quadratic: t_i = eps + (T - eps) (i/N)^2; uniform: t_i = eps + (T - eps) i/N.
/// Requires N >= 2 and 0 <= eps < T.
TimeGrid build_time_grid(double t_max, double eps, std::size_t n_steps, Striding striding);

}  // namespace psld
