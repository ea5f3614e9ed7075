#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "rng.hpp"
#include "solver.hpp"

namespace mmopt {

struct ExperimentConfig {
  Index n_measurements = 256;
  GroupedVector true_theta;
  double q = 0.4;
  double tau = 0.2;
  double gamma = 7.0;
  double noise_variance = 0.01;
  int n_monte_carlo = 150;
  std::uint64_t seed = 42;
  SolverOptions solver;

  MpeConstraintSpec constraint_spec() const {
    MpeConstraintSpec s;
    s.q = q;
    s.tau = tau;
    s.gamma = gamma;
    s.group_sizes = true_theta.group_sizes;
    return s;
  }

  void validate() const {
    if (true_theta.dim() < 1)
      throw std::invalid_argument("ExperimentConfig: true_theta is empty");
    constraint_spec().validate();
    solver.validate();
    if (n_measurements < 1)
      throw std::invalid_argument("ExperimentConfig: n_measurements < 1");
    if (!(noise_variance > 0.0))
      throw std::invalid_argument("ExperimentConfig: noise_variance must be > 0");
    if (n_monte_carlo < 1)
      throw std::invalid_argument("ExperimentConfig: n_monte_carlo must be >= 1");
  }
};

// the benchmark setup: q=0.4, tau=0.2, gamma=7, four groups of three,
// 256 measurements, N(0, 0.01) noise, 150 Monte Carlo repetitions
inline ExperimentConfig paper_preset() {
  ExperimentConfig cfg;
  VectorXd th(12);
  th << 0.54, 1.83, -2.26, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.86, 0.32, -1.31;
  cfg.true_theta = GroupedVector(th, {3, 3, 3, 3});
  return cfg;
}

// Each run draws from two dedicated counter streams keyed by (seed,
// run_index), so runs are order-independent and reproducible in isolation.
inline ProblemInstance generate_instance(const ExperimentConfig& config,
                                         int run_index) {
  config.validate();
  if (run_index < 0 || run_index >= config.n_monte_carlo)
    throw std::invalid_argument("generate_instance: run_index out of range");
  const Index N = config.n_measurements;
  const Index p = config.true_theta.dim();
  const std::uint64_t run = static_cast<std::uint64_t>(run_index);

  ProblemInstance inst;
  inst.constraint = config.constraint_spec();
  inst.regressors.resize(N, p);
  CounterRng rng_a(config.seed, 2 * run);
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < p; ++j) inst.regressors(i, j) = rng_a.normal();

  const double sigma = std::sqrt(config.noise_variance);
  CounterRng rng_n(config.seed, 2 * run + 1);
  VectorXd noise(N);
  for (Index i = 0; i < N; ++i) noise[i] = sigma * rng_n.normal();
  inst.measurements = inst.regressors * config.true_theta.values + noise;
  return inst;
}

struct LeastSquaresResult {
  VectorXd theta;
  Index rank = 0;
  bool rank_deficient = false;
};

inline LeastSquaresResult least_squares_baseline(const MatrixXd& A,
                                                 const VectorXd& y) {
  if (A.rows() != y.size())
    throw std::invalid_argument("least_squares_baseline: A rows != y length");
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);
  cod.setThreshold(1e-10);
  LeastSquaresResult res;
  res.theta = cod.solve(y);
  res.rank = cod.rank();
  res.rank_deficient = res.rank < A.cols();
  return res;
}

struct RunRecord {
  int run_index = 0;
  double mse_constrained = 0.0;   // (1/p) * ||theta_hat - theta_true||^2
  double mse_least_squares = 0.0;
  int iterations = 0;
  double final_objective = 0.0;
  double constraint_value = 0.0;
  bool feasible = false;
  std::string termination;
  bool ls_rank_deficient = false;
  bool failed = false;
  std::string error;
};

struct ExperimentSummary {
  double mse_constrained = 0.0;
  double mse_least_squares = 0.0;
  double win_rate = 0.0;        // fraction of runs where constrained beats LS
  double mean_iterations = 0.0;
  int n_failures = 0;
  std::vector<RunRecord> per_run_records;
};

inline ExperimentSummary run_monte_carlo(const ExperimentConfig& config) {
  config.validate();
  const int n = config.n_monte_carlo;
  const double p = static_cast<double>(config.true_theta.dim());
  std::vector<RunRecord> records(static_cast<std::size_t>(n));

  auto run_one = [&](int i) {
    RunRecord rec;
    rec.run_index = i;
    try {
      ProblemInstance inst = generate_instance(config, i);
      LeastSquaresResult ls =
          least_squares_baseline(inst.regressors, inst.measurements);
      rec.ls_rank_deficient = ls.rank_deficient;
      rec.mse_least_squares =
          (ls.theta - config.true_theta.values).squaredNorm() / p;

      GroupedVector theta0 = zeros_like_structure(config.true_theta.group_sizes);
      auto [theta, trace] = marks_solve(inst, theta0, config.solver);
      if (trace.records.empty())
        throw std::runtime_error("solver produced no iterates");
      const IterateRecord& last = trace.records.back();
      rec.mse_constrained =
          (theta.values - config.true_theta.values).squaredNorm() / p;
      rec.iterations = last.iter;
      rec.final_objective = last.objective;
      rec.constraint_value = last.constraint_value;
      rec.feasible = last.feasible;
      rec.termination = to_string(trace.termination);
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
    }
    return rec;
  };

  // runs are independent; fill slots in parallel, aggregate in index order
  unsigned n_threads = std::thread::hardware_concurrency();
  n_threads = std::max(1u, std::min<unsigned>(n_threads, static_cast<unsigned>(n)));
  if (n_threads == 1) {
    for (int i = 0; i < n; ++i) records[static_cast<std::size_t>(i)] = run_one(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t)
      workers.emplace_back([&]() {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1))
          records[static_cast<std::size_t>(i)] = run_one(i);
      });
    for (auto& w : workers) w.join();
  }

  ExperimentSummary summary;
  double sum_c = 0.0, sum_ls = 0.0, sum_it = 0.0;
  int wins = 0, ok = 0;
  for (const RunRecord& rec : records) {
    if (rec.failed) {
      ++summary.n_failures;
      continue;
    }
    ++ok;
    sum_c += rec.mse_constrained;
    sum_ls += rec.mse_least_squares;
    sum_it += rec.iterations;
    if (rec.mse_constrained < rec.mse_least_squares) ++wins;
  }
  if (summary.n_failures * 20 > n)
    throw std::runtime_error("run_monte_carlo: " +
                             std::to_string(summary.n_failures) + " of " +
                             std::to_string(n) + " runs failed (> 5%)");
  summary.mse_constrained = sum_c / ok;
  summary.mse_least_squares = sum_ls / ok;
  summary.win_rate = static_cast<double>(wins) / ok;
  summary.mean_iterations = sum_it / ok;
  summary.per_run_records = std::move(records);
  return summary;
}

}  // namespace mmopt
