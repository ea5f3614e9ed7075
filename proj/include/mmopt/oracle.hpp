#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rng.hpp"
#include "solver.hpp"

namespace mmopt {

struct OracleResult {
  VectorXd best_theta;
  double best_objective = 0.0;
  int n_starts = 0;
  long long n_grid_points = 0;
  // distinct basins, deduplicated at 1e-4 in the infinity norm, best first
  std::vector<std::pair<VectorXd, double>> all_local_optima_found;
};

// exact radial pull-back onto the constraint set; the constraint is
// positively homogeneous of degree q, so the scaling is closed-form
inline VectorXd radial_feasibility_project(const VectorXd& theta,
                                           const MpeConstraintSpec& spec) {
  if (!theta.allFinite())
    throw std::invalid_argument(
        "radial_feasibility_project: non-finite input");
  GroupedVector g(theta, spec.group_sizes);
  const double f = mpe_value(g, spec);
  if (f <= spec.gamma) return theta;
  const double s = std::pow(spec.gamma / f, 1.0 / spec.q);
  return s * theta;
}

// Brute-force global reference: dense grid over [-B, B]^p pulled onto the
// feasible set, plus `budget` random feasible starts, every start polished
// by projected gradient descent with backtracking. Any point handed in via
// extra_starts is polished too, so the result is never worse than a
// submitted feasible point. Only sane for small p; hard cap at 6.
inline OracleResult oracle_global_solve(
    const ProblemInstance& instance, int budget, std::uint64_t seed,
    const std::vector<VectorXd>& extra_starts = {}) {
  instance.validate();
  const MatrixXd& A = instance.regressors;
  const VectorXd& y = instance.measurements;
  const MpeConstraintSpec& spec = instance.constraint;
  const Index p = A.cols();
  if (p > 6)
    throw std::invalid_argument(
        "oracle_global_solve: dimension " + std::to_string(p) +
        " exceeds the hard cap of 6 (grid cost grows exponentially)");
  if (budget < 1) throw std::invalid_argument("oracle_global_solve: budget < 1");

  auto objective = [&](const VectorXd& v) { return (y - A * v).squaredNorm(); };
  auto project = [&](const VectorXd& v) {
    return radial_feasibility_project(v, spec);
  };

  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);
  cod.setThreshold(1e-10);
  const VectorXd theta_ls = cod.solve(y);

  const double B = 2.0 * theta_ls.cwiseAbs().maxCoeff() + 1.0;
  int n_axis = static_cast<int>(
      std::floor(std::pow(static_cast<double>(budget), 1.0 / p)));
  n_axis = std::max(n_axis, 3);
  if (n_axis % 2 == 0) ++n_axis;
  VectorXd axis = VectorXd::LinSpaced(n_axis, -B, B);

  std::vector<std::pair<double, VectorXd>> pool;
  {
    std::vector<int> digit(static_cast<std::size_t>(p), 0);
    VectorXd v(p);
    while (true) {
      for (Index j = 0; j < p; ++j) v[j] = axis[digit[j]];
      VectorXd w = project(v);
      pool.emplace_back(objective(w), std::move(w));
      Index j = 0;
      while (j < p && ++digit[j] == n_axis) digit[j++] = 0;
      if (j == p) break;
    }
  }
  const long long n_grid = static_cast<long long>(pool.size());

  std::vector<VectorXd> random_starts;
  random_starts.reserve(static_cast<std::size_t>(budget));
  CounterRng rng(seed, /*stream=*/0);
  for (int s = 0; s < budget; ++s) {
    VectorXd v(p);
    for (Index j = 0; j < p; ++j) v[j] = rng.uniform(-B, B);
    random_starts.push_back(project(v));
  }
  for (const VectorXd& v : random_starts) pool.emplace_back(objective(v), v);

  auto lex_less = [](const VectorXd& a, const VectorXd& b) {
    for (Index i = 0; i < a.size(); ++i)
      if (a[i] != b[i]) return a[i] < b[i];
    return false;
  };
  std::sort(pool.begin(), pool.end(),
            [&](const auto& a, const auto& b) {
              if (a.first != b.first) return a.first < b.first;
              return lex_less(a.second, b.second);
            });

  std::vector<VectorXd> starts;
  const std::size_t keep = std::min<std::size_t>(32, pool.size());
  for (std::size_t i = 0; i < keep; ++i) starts.push_back(pool[i].second);
  for (const VectorXd& v : random_starts) starts.push_back(v);
  starts.push_back(project(theta_ls));
  for (const VectorXd& e : extra_starts) {
    if (e.size() != p)
      throw std::invalid_argument("oracle_global_solve: extra start has wrong dimension");
    starts.push_back(project(e));
  }

  const MatrixXd G = A.transpose() * A;
  const VectorXd b = A.transpose() * y;
  const double L =
      Eigen::SelfAdjointEigenSolver<MatrixXd>(G).eigenvalues().maxCoeff();

  auto polish = [&](VectorXd v) {
    double o = objective(v);
    double alpha = 1.0 / std::max(1e-12, L);
    int stall = 0;
    for (int it = 0; it < 2000; ++it) {
      VectorXd grad = 2.0 * (G * v - b);
      double step = 4.0 * alpha;
      bool improved = false;
      for (int bt = 0; bt < 60; ++bt) {
        VectorXd w = project(v - step * grad);
        const double ow = objective(w);
        if (ow < o * (1.0 - 1e-15)) {
          v = std::move(w);
          o = ow;
          alpha = step;
          improved = true;
          break;
        }
        step *= 0.5;
      }
      if (improved) {
        stall = 0;
      } else if (++stall >= 2) {
        break;
      }
    }
    return std::make_pair(std::move(v), o);
  };

  OracleResult res;
  res.n_grid_points = n_grid;
  res.n_starts = static_cast<int>(starts.size());
  for (const VectorXd& s : starts) {
    auto [v, o] = polish(s);
    bool merged = false;
    for (auto& entry : res.all_local_optima_found) {
      if ((entry.first - v).lpNorm<Eigen::Infinity>() <= 1e-4) {
        if (o < entry.second) entry = {v, o};
        merged = true;
        break;
      }
    }
    if (!merged) res.all_local_optima_found.emplace_back(v, o);
  }
  if (res.all_local_optima_found.empty())
    throw std::runtime_error("oracle_global_solve: no feasible point found");
  std::sort(res.all_local_optima_found.begin(), res.all_local_optima_found.end(),
            [&](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second < b.second;
              return lex_less(a.first, b.first);
            });
  res.best_theta = res.all_local_optima_found.front().first;
  res.best_objective = objective(res.best_theta);
  return res;
}

}  // namespace mmopt
