#pragma once

// Derivative-free simplex maximization.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <numeric>

namespace bell_lab {

struct SimplexOptions {
  double initial_step = 5.0;
  double x_tol = 1e-6;   // simplex diameter (max-norm from best vertex)
  double f_tol = 1e-12;  // spread of objective values over the vertices
  long max_evaluations = 4000;
};

template <int N>
struct SimplexResult {
  Eigen::Matrix<double, N, 1> x;
  double value;
  long evaluations;
  bool converged;
};

/// Nelder-Mead with standard coefficients (reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2). Maximizes `objective`.
template <int N, typename Objective>
SimplexResult<N> maximize_simplex(Objective&& objective, const Eigen::Matrix<double, N, 1>& start,
                                  const SimplexOptions& opts) {
  using Vec = Eigen::Matrix<double, N, 1>;
  std::array<Vec, N + 1> pts;
  std::array<double, N + 1> val;
  long evals = 0;
  auto eval = [&](const Vec& x) {
    ++evals;
    return objective(x);
  };

  pts[0] = start;
  val[0] = eval(start);
  for (int i = 0; i < N; ++i) {
    pts[i + 1] = start;
    pts[i + 1](i) += opts.initial_step;
    val[i + 1] = eval(pts[i + 1]);
  }

  std::array<int, N + 1> order;
  bool converged = false;
  while (true) {
    std::iota(order.begin(), order.end(), 0);
    // Descending by value; index breaks ties so runs are reproducible.
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return val[a] != val[b] ? val[a] > val[b] : a < b;
    });
    const int best = order[0], worst = order[N], second_worst = order[N - 1];

    double diameter = 0;
    for (int i = 1; i <= N; ++i)
      diameter = std::max(diameter, (pts[order[i]] - pts[best]).template lpNorm<Eigen::Infinity>());
    if (diameter < opts.x_tol || val[best] - val[worst] < opts.f_tol) {
      converged = true;
      break;
    }
    if (evals >= opts.max_evaluations) break;

    Vec centroid = Vec::Zero();
    for (int i = 0; i < N; ++i) centroid += pts[order[i]];
    centroid /= N;

    const Vec reflected = centroid + (centroid - pts[worst]);
    const double f_reflected = eval(reflected);
    if (f_reflected > val[best]) {
      const Vec expanded = centroid + 2.0 * (centroid - pts[worst]);
      const double f_expanded = eval(expanded);
      if (f_expanded > f_reflected) {
        pts[worst] = expanded, val[worst] = f_expanded;
      } else {
        pts[worst] = reflected, val[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected > val[second_worst]) {
      pts[worst] = reflected, val[worst] = f_reflected;
      continue;
    }
    const bool outside = f_reflected > val[worst];
    const Vec contracted = outside ? Vec(centroid + 0.5 * (reflected - centroid))
                                   : Vec(centroid + 0.5 * (pts[worst] - centroid));
    const double f_contracted = eval(contracted);
    if (f_contracted > std::max(outside ? f_reflected : val[worst], val[worst])) {
      pts[worst] = contracted, val[worst] = f_contracted;
      continue;
    }
    for (int i = 1; i <= N; ++i) {
      const int k = order[i];
      pts[k] = pts[best] + 0.5 * (pts[k] - pts[best]);
      val[k] = eval(pts[k]);
    }
  }

  int best = 0;
  for (int i = 1; i <= N; ++i)
    if (val[i] > val[best]) best = i;
  return {pts[best], val[best], evals, converged};
}

}  // namespace bell_lab
