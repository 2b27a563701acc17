#pragma once

// Derivative-free minimizer used as an independent oracle for the Newton fits.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace testsupport {

using Point = std::vector<double>;

inline Point nelder_mead(const std::function<double(const Point&)>& f, Point start,
                         double initial_step = 0.5, int restarts = 40, int max_evals = 200000) {
  const std::size_t n = start.size();
  Point best = start;
  double best_value = f(best);
  double step = initial_step;
  for (int restart = 0; restart < restarts; ++restart) {
    std::vector<Point> simplex{best};
    for (std::size_t i = 0; i < n; ++i) {
      Point p = best;
      p[i] += step;
      simplex.push_back(p);
    }
    std::vector<double> values;
    for (const auto& p : simplex) values.push_back(f(p));

    for (int evals = 0; evals < max_evals / restarts; ++evals) {
      std::vector<std::size_t> order(n + 1);
      for (std::size_t i = 0; i <= n; ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
      std::vector<Point> s2;
      std::vector<double> v2;
      for (auto i : order) {
        s2.push_back(simplex[i]);
        v2.push_back(values[i]);
      }
      simplex = std::move(s2);
      values = std::move(v2);

      double size = 0.0;
      for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t k = 0; k < n; ++k) size = std::max(size, std::abs(simplex[i][k] - simplex[0][k]));
      }
      if (size < 1e-11) break;

      Point centroid(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / static_cast<double>(n);
      }
      auto along = [&](double t) {
        Point p(n);
        for (std::size_t k = 0; k < n; ++k) p[k] = centroid[k] + t * (simplex[n][k] - centroid[k]);
        return p;
      };
      const Point reflected = along(-1.0);
      const double fr = f(reflected);
      if (fr < values[0]) {
        const Point expanded = along(-2.0);
        const double fe = f(expanded);
        if (fe < fr) {
          simplex[n] = expanded;
          values[n] = fe;
        } else {
          simplex[n] = reflected;
          values[n] = fr;
        }
      } else if (fr < values[n - 1]) {
        simplex[n] = reflected;
        values[n] = fr;
      } else {
        const Point contracted = fr < values[n] ? along(-0.5) : along(0.5);
        const double fc = f(contracted);
        if (fc < std::min(fr, values[n])) {
          simplex[n] = contracted;
          values[n] = fc;
        } else {
          for (std::size_t i = 1; i <= n; ++i) {
            for (std::size_t k = 0; k < n; ++k) {
              simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
            }
            values[i] = f(simplex[i]);
          }
        }
      }
    }
    const auto it = std::min_element(values.begin(), values.end());
    if (*it < best_value) {
      best_value = *it;
      best = simplex[static_cast<std::size_t>(it - values.begin())];
    }
    step = std::max(1e-4, step * 0.5);
  }
  return best;
}

}  // namespace testsupport
