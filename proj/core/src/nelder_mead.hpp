#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace streetnet::detail {

struct MinimizeResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  bool converged = false;
  int evaluations = 0;
};

// Derivative-free simplex minimization. Converges when the spread of simplex values is within
// `tolerance` relative to the best value; restarts from the best vertex until a restart no
// longer improves it, which guards against simplex collapse.
inline MinimizeResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                  std::vector<double> start, double tolerance = 1e-8,
                                  int max_evaluations = 40'000, double initial_step = 0.1) {
  const std::size_t dim = start.size();
  MinimizeResult best;
  best.x = start;
  best.value = f(start);
  best.evaluations = 1;
  auto eval = [&](const std::vector<double>& p) {
    ++best.evaluations;
    const double v = f(p);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  for (int restart = 0; restart < 8; ++restart) {
    std::vector<std::vector<double>> simplex(dim + 1, best.x);
    std::vector<double> values(dim + 1, best.value);
    for (std::size_t i = 0; i < dim; ++i) {
      const double step = best.x[i] != 0.0 ? initial_step * std::max(1.0, std::abs(best.x[i]))
                                           : initial_step;
      simplex[i + 1][i] += step;
      values[i + 1] = eval(simplex[i + 1]);
    }

    std::vector<std::size_t> order(dim + 1);
    bool converged = false;
    while (best.evaluations < max_evaluations) {
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
      const std::size_t lo = order.front();
      const std::size_t hi = order.back();
      const std::size_t second = order[dim - (dim > 0 ? 1 : 0)];
      const double spread = std::abs(values[hi] - values[lo]);
      if (std::isfinite(values[hi]) && spread <= tolerance * (std::abs(values[lo]) + tolerance)) {
        converged = true;
        break;
      }

      std::vector<double> centroid(dim, 0.0);
      for (std::size_t i = 0; i <= dim; ++i) {
        if (i == hi) continue;
        for (std::size_t j = 0; j < dim; ++j) centroid[j] += simplex[i][j] / static_cast<double>(dim);
      }
      auto along = [&](double t) {
        std::vector<double> p(dim);
        for (std::size_t j = 0; j < dim; ++j) p[j] = centroid[j] + t * (simplex[hi][j] - centroid[j]);
        return p;
      };

      std::vector<double> reflected = along(-1.0);
      const double fr = eval(reflected);
      if (fr < values[lo]) {
        std::vector<double> expanded = along(-2.0);
        const double fe = eval(expanded);
        if (fe < fr) {
          simplex[hi] = std::move(expanded);
          values[hi] = fe;
        } else {
          simplex[hi] = std::move(reflected);
          values[hi] = fr;
        }
        continue;
      }
      if (fr < values[second]) {
        simplex[hi] = std::move(reflected);
        values[hi] = fr;
        continue;
      }
      const bool outside = fr < values[hi];
      std::vector<double> contracted = along(outside ? -0.5 : 0.5);
      const double fc = eval(contracted);
      if (fc < (outside ? fr : values[hi])) {
        simplex[hi] = std::move(contracted);
        values[hi] = fc;
        continue;
      }
      for (std::size_t i = 0; i <= dim; ++i) {
        if (i == lo) continue;
        for (std::size_t j = 0; j < dim; ++j) simplex[i][j] = simplex[lo][j] + 0.5 * (simplex[i][j] - simplex[lo][j]);
        values[i] = eval(simplex[i]);
      }
    }

    const auto lo = static_cast<std::size_t>(
        std::min_element(values.begin(), values.end()) - values.begin());
    const bool improved = values[lo] < best.value - tolerance * (std::abs(best.value) + tolerance);
    if (values[lo] < best.value) {
      best.value = values[lo];
      best.x = simplex[lo];
    }
    best.converged = converged;
    if (!converged || !improved) break;
  }
  return best;
}

}  // namespace streetnet::detail
