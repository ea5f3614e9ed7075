#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "options.hpp"

// Convex subproblem of one Marks iteration:
//   minimize ||y - A theta||^2   s.t.   (1/2) theta' diag(d) theta <= c.
// The dual is one-dimensional: theta(lambda) = (A'A + lambda diag(d))^{-1} A'y
// and h(lambda) = (1/2) theta' D theta is strictly decreasing, so the active
// case reduces to a safeguarded scalar root-find on log(lambda).
//
// Multiplier convention: the returned lambda is the one in the solve formula
// above; the KKT multiplier mu on the gradient 2A'(A theta - y) + mu d.theta
// is mu = 2 lambda. Certificates below are computed with mu.

namespace mmopt {

struct InnerQclsResult {
  Eigen::VectorXd theta;
  double lambda = 0.0;
  double stationarity_residual = 0.0;  // ||2A'(A theta - y) + 2 lambda d.theta||
  double primal_value = 0.0;           // (1/2) theta' D theta
  double complementarity = 0.0;        // 2 lambda * |primal - c|
  bool ls_feasible = false;            // unconstrained minimizer already inside
  int n_evaluations = 0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
};

inline InnerQclsResult inner_qcls_solve(const Eigen::MatrixXd& A,
                                        const Eigen::VectorXd& y,
                                        const Eigen::VectorXd& d, double c,
                                        const SolverOptions& opts = {}) {
  using Eigen::Index;
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  if (A.rows() != y.size())
    throw std::invalid_argument("inner_qcls_solve: A rows != y length");
  if (A.cols() != d.size())
    throw std::invalid_argument("inner_qcls_solve: A cols != weight length");
  if (d.minCoeff() <= 0.0)
    throw std::invalid_argument("inner_qcls_solve: weights must be > 0");
  if (c < 0.0)
    throw std::invalid_argument(
        "inner_qcls_solve: surrogate bound c is negative (" +
        std::to_string(c) + "), constraint unsatisfiable");

  const MatrixXd G = A.transpose() * A;
  const VectorXd b = A.transpose() * y;
  const double tol = opts.inner_multiplier_tolerance;

  InnerQclsResult res;

  auto half_quad = [&](const VectorXd& x) {
    return 0.5 * x.dot(d.asDiagonal() * x);
  };
  auto finish = [&](VectorXd x, double lam) {
    res.theta = std::move(x);
    res.lambda = lam;
    res.primal_value = half_quad(res.theta);
    res.stationarity_residual =
        (2.0 * (G * res.theta - b) + 2.0 * lam * d.cwiseProduct(res.theta))
            .norm();
    res.complementarity = 2.0 * lam * std::abs(res.primal_value - c);
    return res;
  };

  if (c == 0.0) {
    // the bound forces the origin; the multiplier diverges, report the
    // unbalanced gradient as the residual
    res.theta = VectorXd::Zero(A.cols());
    res.lambda = std::numeric_limits<double>::infinity();
    res.primal_value = 0.0;
    res.stationarity_residual = 2.0 * b.norm();
    res.complementarity = 0.0;
    return res;
  }

  // minimum-norm least squares (rank-revealing, relative threshold 1e-10)
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);
  cod.setThreshold(1e-10);
  const VectorXd theta_ls = cod.solve(y);
  ++res.n_evaluations;
  if (half_quad(theta_ls) <= c) {
    res.ls_feasible = true;
    return finish(theta_ls, 0.0);
  }

  auto solve_at = [&](double lam) -> VectorXd {
    ++res.n_evaluations;
    return (G + lam * MatrixXd(d.asDiagonal())).ldlt().solve(b);
  };
  auto h = [&](const VectorXd& x) { return half_quad(x); };

  // bracket: lo keeps h > c, hi keeps h <= c
  double lo = 1e-12, hi = 1e12;
  VectorXd x_lo = solve_at(lo);
  if (h(x_lo) <= c) {
    // root below 1e-12; extend downward, treating the limit as lambda ~ 0
    double probe = lo;
    VectorXd x_probe = x_lo;
    while (probe > 1e-250) {
      probe *= 1e-6;
      VectorXd xp = solve_at(probe);
      if (h(xp) > c) {
        lo = probe;
        hi = probe * 1e6;
        x_probe = std::move(xp);
        break;
      }
      x_probe = std::move(xp);
      hi = probe;
    }
    if (h(x_probe) <= c && probe <= 1e-250)
      return finish(x_probe, probe);  // indistinguishable from lambda = 0
  }
  VectorXd x_hi = solve_at(hi);
  while (h(x_hi) > c) {
    lo = hi;
    hi *= 10.0;
    if (hi > 1e300)
      throw std::runtime_error(
          "inner_qcls_solve: failed to bracket the multiplier in [1e-12, "
          "1e300]; last bracket [" +
          std::to_string(lo) + ", " + std::to_string(hi) + "]");
    x_hi = solve_at(hi);
  }
  res.bracket_lo = lo;
  res.bracket_hi = hi;

  // geometric bisection on the multiplier, converging to the feasible side
  // so every returned iterate satisfies the bound; h spans many decades and
  // can plateau, which rules out secant-type steps here
  double best_lam = hi;
  VectorXd best_x = std::move(x_hi);
  double best_h = h(best_x);
  for (int it = 0; it < 500; ++it) {
    const double mid = std::sqrt(lo * hi);
    VectorXd x = solve_at(mid);
    const double hv = h(x);
    if (hv <= c) {
      best_lam = mid;
      best_x = std::move(x);
      best_h = hv;
      hi = mid;
    } else {
      lo = mid;
    }
    if (std::abs(hv - c) <= tol * (1.0 + std::abs(c)) && hv <= c) break;
  }
  (void)best_h;
  return finish(best_x, best_lam);
}

}  // namespace mmopt
