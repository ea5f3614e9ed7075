#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "grouped_vector.hpp"

// Group lq-norm constraint family ("multivariate power-exponential" kernel):
//   f(theta) = sum_m ( (sqrt(beta_m)/tau) * ||theta_m||_2 )^q  <=  gamma,
// with q in (0,2]. For q < 2 each group term is a concave function of
// ||theta_m||^2, which is what makes a quadratic tangent an upper bound.

namespace mmopt {

// weight cap below this group norm; the divergence k ~ r^(q-2) as r -> 0 is
// the sparsity mechanism, the floor just keeps the linear algebra finite
inline constexpr double kDefaultSingularityFloor = 1e-8;

struct MpeConstraintSpec {
  double q = 0.4;
  double tau = 0.2;
  double gamma = 7.0;
  std::vector<Index> group_sizes;

  void validate() const {
    if (!(q > 0.0) || !(q <= 2.0))
      throw std::invalid_argument("MpeConstraintSpec: q must be in (0,2]");
    if (!(tau > 0.0))
      throw std::invalid_argument("MpeConstraintSpec: tau must be > 0");
    if (!(gamma > 0.0))
      throw std::invalid_argument("MpeConstraintSpec: gamma must be > 0");
    if (group_sizes.empty())
      throw std::invalid_argument("MpeConstraintSpec: no groups");
    for (auto b : group_sizes)
      if (b < 1)
        throw std::invalid_argument("MpeConstraintSpec: group size < 1");
  }

  std::size_t num_groups() const { return group_sizes.size(); }
  Index dim() const {
    Index n = 0;
    for (auto b : group_sizes) n += b;
    return n;
  }
  // c_m = sqrt(beta_m)/tau
  double group_scale(std::size_t m) const {
    return std::sqrt(static_cast<double>(group_sizes[m])) / tau;
  }
};

inline void require_same_structure(const GroupedVector& theta,
                                   const MpeConstraintSpec& spec) {
  if (!theta.same_structure(spec.group_sizes))
    throw std::invalid_argument(
        "group structure mismatch between vector and constraint spec");
}

inline double mpe_value(const GroupedVector& theta,
                        const MpeConstraintSpec& spec) {
  require_same_structure(theta, spec);
  double v = 0.0;
  for (std::size_t m = 0; m < spec.num_groups(); ++m) {
    const double r = theta.group_norm(m);
    if (r > 0.0) v += std::pow(spec.group_scale(m) * r, spec.q);
  }
  return v;
}

// gradient block for group m: q * c_m^q * ||theta_m||^(q-2) * theta_m
inline VectorXd mpe_gradient(const GroupedVector& theta,
                             const MpeConstraintSpec& spec,
                             double singularity_floor = kDefaultSingularityFloor) {
  require_same_structure(theta, spec);
  VectorXd g(theta.dim());
  for (std::size_t m = 0; m < spec.num_groups(); ++m) {
    const double r = theta.group_norm(m);
    if (spec.q < 2.0 && r < singularity_floor)
      throw std::domain_error("mpe_gradient: group " + std::to_string(m) +
                              " has norm " + std::to_string(r) +
                              " below the singularity floor");
    const double c = spec.group_scale(m);
    const double coef =
        spec.q * std::pow(c, spec.q) * (spec.q == 2.0 ? 1.0 : std::pow(r, spec.q - 2.0));
    g.segment(theta.offsets[m], theta.group_sizes[m]) =
        coef * theta.group(m);
  }
  return g;
}

// k_m: the unique tangent curvature at the anchor (Fisher identity), capped
// at the floor so a collapsed group keeps a finite, huge weight
inline double vmgm_weight(const Eigen::Ref<const VectorXd>& theta_hat_group,
                          std::size_t group_index,
                          const MpeConstraintSpec& spec,
                          double singularity_floor = kDefaultSingularityFloor) {
  if (group_index >= spec.num_groups())
    throw std::invalid_argument("vmgm_weight: group index out of range");
  if (theta_hat_group.size() != spec.group_sizes[group_index])
    throw std::invalid_argument("vmgm_weight: group length mismatch");
  const double r = std::max(theta_hat_group.norm(), singularity_floor);
  const double c = spec.group_scale(group_index);
  return spec.q * std::pow(c, spec.q) * std::pow(r, spec.q - 2.0);
}

struct FisherReport {
  double max_abs_gradient_gap = 0.0;
  VectorXd per_coordinate_gaps;
  double step_size_used = 0.0;
};

}  // namespace mmopt
