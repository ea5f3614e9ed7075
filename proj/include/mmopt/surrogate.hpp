#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "constraint.hpp"
#include "rng.hpp"

// Quadratic surrogate of the group-lq constraint, anchored at theta_hat:
//   Q(theta) = sum_m (k_m/2) ||theta_m||^2 + b.theta + constant
// Built so that Q >= f everywhere and Q(theta_hat) = f(theta_hat) with
// matching gradient (tangency of the chord of a concave function of r^2).

namespace mmopt {

struct QuadraticSurrogate {
  GroupedVector anchor;
  VectorXd weights;        // k_1..k_M, one per group, all > 0
  VectorXd linear_offset;  // b, length dim
  double constant = 0.0;

  // per-coordinate diagonal (k_m replicated over its group)
  VectorXd expanded_weights() const {
    VectorXd d(anchor.dim());
    for (std::size_t m = 0; m < anchor.num_groups(); ++m)
      d.segment(anchor.offsets[m], anchor.group_sizes[m])
          .setConstant(weights[static_cast<Index>(m)]);
    return d;
  }

  double value(const VectorXd& theta) const {
    if (theta.size() != anchor.dim())
      throw std::invalid_argument("surrogate value: dimension mismatch");
    double v = constant + linear_offset.dot(theta);
    for (std::size_t m = 0; m < anchor.num_groups(); ++m)
      v += 0.5 * weights[static_cast<Index>(m)] *
           theta.segment(anchor.offsets[m], anchor.group_sizes[m])
               .squaredNorm();
    return v;
  }

  VectorXd gradient(const VectorXd& theta) const {
    if (theta.size() != anchor.dim())
      throw std::invalid_argument("surrogate gradient: dimension mismatch");
    VectorXd g = linear_offset;
    for (std::size_t m = 0; m < anchor.num_groups(); ++m)
      g.segment(anchor.offsets[m], anchor.group_sizes[m]) +=
          weights[static_cast<Index>(m)] *
          theta.segment(anchor.offsets[m], anchor.group_sizes[m]);
    return g;
  }
};

inline double surrogate_value(const QuadraticSurrogate& s,
                              const GroupedVector& theta) {
  return s.value(theta.values);
}

// Tangent surrogate at the anchor itself. Weights are capped at the
// singularity floor; the constant uses the exact anchor norms, so tangency is
// exact whenever no group sits below the floor.
inline QuadraticSurrogate build_constraint_surrogate(
    const GroupedVector& theta_hat, const MpeConstraintSpec& spec) {
  require_same_structure(theta_hat, spec);
  spec.validate();
  QuadraticSurrogate s;
  s.anchor = theta_hat;
  s.weights.resize(static_cast<Index>(spec.num_groups()));
  s.linear_offset = VectorXd::Zero(theta_hat.dim());
  s.constant = 0.0;
  for (std::size_t m = 0; m < spec.num_groups(); ++m) {
    const double k = vmgm_weight(theta_hat.group(m), m, spec);
    const double r = theta_hat.group_norm(m);
    const double c = spec.group_scale(m);
    s.weights[static_cast<Index>(m)] = k;
    s.constant += (r > 0.0 ? std::pow(c * r, spec.q) : 0.0) - 0.5 * k * r * r;
  }
  return s;
}

// Variant used by the solver: the tangent is taken at the clamped norm
// max(||theta_hat_m||, anchor_floor) in BOTH the weight and the constant.
// A tangent of a concave function at any point is a global upper bound, so
// this keeps exact majorization even when a group has collapsed; the price is
// a controlled tangency lift of (c_m*floor)^q*(1-q/2) on floored groups.
inline QuadraticSurrogate build_constraint_surrogate(
    const GroupedVector& theta_hat, const MpeConstraintSpec& spec,
    double anchor_floor) {
  require_same_structure(theta_hat, spec);
  spec.validate();
  if (!(anchor_floor > 0.0))
    throw std::invalid_argument("anchor floor must be > 0");
  QuadraticSurrogate s;
  s.anchor = theta_hat;
  s.weights.resize(static_cast<Index>(spec.num_groups()));
  s.linear_offset = VectorXd::Zero(theta_hat.dim());
  s.constant = 0.0;
  for (std::size_t m = 0; m < spec.num_groups(); ++m) {
    const double rt = std::max(theta_hat.group_norm(m), anchor_floor);
    const double c = spec.group_scale(m);
    const double k = spec.q * std::pow(c, spec.q) * std::pow(rt, spec.q - 2.0);
    s.weights[static_cast<Index>(m)] = k;
    s.constant += std::pow(c * rt, spec.q) - 0.5 * k * rt * rt;
  }
  return s;
}

struct MarksConditionReport {
  long majorization_violations = 0;
  double worst_violation = 0.0;  // magnitude of the worst g - Q excess
  double tangency_gap = 0.0;
  double gradient_gap = 0.0;
  long skipped_samples = 0;
};

// samples uniformly in a Euclidean ball around the anchor (plus the anchor
// itself) and reports the three surrogate conditions
inline MarksConditionReport check_marks_conditions(
    const QuadraticSurrogate& s,
    const std::function<double(const VectorXd&)>& g,
    const GroupedVector& theta_hat, long n_samples, double radius,
    std::uint64_t sample_seed = 0x6d61726b73ull) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be > 0");
  MarksConditionReport rep;
  const Index n = theta_hat.dim();

  const double g_anchor = g(theta_hat.values);
  rep.tangency_gap = std::abs(s.value(theta_hat.values) - g_anchor);

  CounterRng rng(sample_seed, 0);
  for (long i = 0; i < n_samples; ++i) {
    VectorXd dir(n);
    for (Index j = 0; j < n; ++j) dir[j] = rng.normal();
    const double nrm = dir.norm();
    if (nrm == 0.0) {
      ++rep.skipped_samples;
      continue;
    }
    const double u = rng.uniform01();
    VectorXd x = theta_hat.values +
                 (radius * std::pow(u, 1.0 / static_cast<double>(n)) / nrm) * dir;
    const double gv = g(x);
    if (!std::isfinite(gv)) {
      ++rep.skipped_samples;
      continue;
    }
    const double gap = gv - s.value(x);  // > 0 means majorization violated
    if (gap > 0.0) {
      ++rep.majorization_violations;
      rep.worst_violation = std::max(rep.worst_violation, gap);
    }
  }

  // finite-difference gradient at the anchor vs analytic surrogate gradient
  const double step = 1e-6 * std::max(1.0, theta_hat.values.norm());
  const VectorXd sg = s.gradient(theta_hat.values);
  double worst = 0.0;
  VectorXd x = theta_hat.values;
  for (Index j = 0; j < n; ++j) {
    const double x0 = x[j];
    x[j] = x0 + step;
    const double fp = g(x);
    x[j] = x0 - step;
    const double fm = g(x);
    x[j] = x0;
    const double fd = (fp - fm) / (2.0 * step);
    worst = std::max(worst, std::abs(fd - sg[j]));
  }
  rep.gradient_gap = worst;
  return rep;
}

// numerical witness that d/dtheta value_fn at the anchor matches the
// surrogate gradient (the identity that pins the k_m)
inline FisherReport check_fisher_identity(
    const std::function<double(const VectorXd&)>& value_fn,
    const QuadraticSurrogate& s, const GroupedVector& theta_hat,
    double step) {
  if (!(step > 0.0)) throw std::invalid_argument("step must be > 0");
  const Index n = theta_hat.dim();
  FisherReport rep;
  rep.step_size_used = step;
  rep.per_coordinate_gaps.resize(n);
  const VectorXd sg = s.gradient(theta_hat.values);
  VectorXd x = theta_hat.values;
  for (Index j = 0; j < n; ++j) {
    const double x0 = x[j];
    x[j] = x0 + step;
    const double fp = value_fn(x);
    x[j] = x0 - step;
    const double fm = value_fn(x);
    x[j] = x0;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::runtime_error(
          "check_fisher_identity: non-finite value at coordinate " +
          std::to_string(j));
    const double gap = std::abs((fp - fm) / (2.0 * step) - sg[j]);
    rep.per_coordinate_gaps[j] = gap;
    rep.max_abs_gradient_gap = std::max(rep.max_abs_gradient_gap, gap);
  }
  return rep;
}

// recover the diagonal curvature from a gradient sample: r_i = (g_i - b_i)/x_i
inline VectorXd diagonal_R_from_fisher(const VectorXd& grad_J_at_anchor,
                                       const VectorXd& b,
                                       const GroupedVector& theta_hat) {
  if (grad_J_at_anchor.size() != theta_hat.dim() || b.size() != theta_hat.dim())
    throw std::invalid_argument("diagonal_R_from_fisher: dimension mismatch");
  constexpr double kDivideFloor = 1e-12;
  VectorXd r(theta_hat.dim());
  for (Index i = 0; i < theta_hat.dim(); ++i) {
    if (std::abs(theta_hat.values[i]) <= kDivideFloor)
      throw std::domain_error(
          "diagonal_R_from_fisher: coordinate " + std::to_string(i) +
          " of the anchor is too close to zero");
    r[i] = (grad_J_at_anchor[i] - b[i]) / theta_hat.values[i];
  }
  return r;
}

// theta_i = -b_i / r_i, the unique stationary point of the diagonal quadratic
inline VectorXd quadratic_stationary_point(const VectorXd& weights_expanded,
                                           const VectorXd& b) {
  if (weights_expanded.size() != b.size())
    throw std::invalid_argument("quadratic_stationary_point: size mismatch");
  VectorXd theta(b.size());
  for (Index i = 0; i < b.size(); ++i) {
    if (!(weights_expanded[i] > 0.0))
      throw std::domain_error(
          "quadratic_stationary_point: nonpositive curvature at coordinate " +
          std::to_string(i));
    theta[i] = -b[i] / weights_expanded[i];
  }
  return theta;
}

}  // namespace mmopt
