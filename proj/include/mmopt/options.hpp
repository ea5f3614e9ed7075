#pragma once

#include <cstdint>
#include <stdexcept>

namespace mmopt {

struct SolverOptions {
  int max_iterations = 100;
  double objective_tolerance = 1e-6;              // relative
  double constraint_feasibility_tolerance = 1e-6;  // absolute
  double inner_multiplier_tolerance = 1e-11;       // absolute, on the dual map
  double singularity_floor = 1e-8;  // weight cap outside the solver loop
  std::uint64_t random_seed = 0;

  void validate() const {
    if (max_iterations < 1)
      throw std::invalid_argument("SolverOptions: max_iterations < 1");
    if (!(objective_tolerance > 0.0) ||
        !(constraint_feasibility_tolerance > 0.0) ||
        !(inner_multiplier_tolerance > 0.0) || !(singularity_floor > 0.0))
      throw std::invalid_argument("SolverOptions: tolerances must be > 0");
  }
};

}  // namespace mmopt
