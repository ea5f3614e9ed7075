#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include <mmopt/experiment.hpp>

using namespace mmopt;

TEST(Preset, BenchmarkSetupIsStrictlyFeasibleAtTheTruth) {
  ExperimentConfig cfg = paper_preset();
  EXPECT_EQ(cfg.n_measurements, 256);
  EXPECT_EQ(cfg.q, 0.4);
  EXPECT_EQ(cfg.tau, 0.2);
  EXPECT_EQ(cfg.gamma, 7.0);
  EXPECT_EQ(cfg.noise_variance, 0.01);
  EXPECT_EQ(cfg.n_monte_carlo, 150);
  ASSERT_EQ(cfg.true_theta.dim(), 12);
  ASSERT_EQ(cfg.true_theta.group_sizes, (std::vector<Index>{3, 3, 3, 3}));
  VectorXd expected(12);
  expected << 0.54, 1.83, -2.26, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.86, 0.32,
      -1.31;
  EXPECT_TRUE(cfg.true_theta.values == expected);
  // the generating parameter sits inside the constraint set with slack
  const double v = mpe_value(cfg.true_theta, cfg.constraint_spec());
  EXPECT_NEAR(v, 6.520787811402104, 1e-12);
  EXPECT_LT(v, cfg.gamma);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(GenerateInstance, DeterministicPerRunAndDistinctAcrossRuns) {
  ExperimentConfig cfg = paper_preset();
  ProblemInstance a = generate_instance(cfg, 0);
  ProblemInstance b = generate_instance(cfg, 0);
  EXPECT_TRUE(a.regressors == b.regressors);
  EXPECT_TRUE(a.measurements == b.measurements);

  ProblemInstance c = generate_instance(cfg, 1);
  EXPECT_FALSE(a.regressors == c.regressors);

  EXPECT_THROW(generate_instance(cfg, -1), std::invalid_argument);
  EXPECT_THROW(generate_instance(cfg, cfg.n_monte_carlo),
               std::invalid_argument);
}

TEST(GenerateInstance, VanishingNoiseMakesTruthRecoverable) {
  ExperimentConfig cfg = paper_preset();
  cfg.noise_variance = 1e-30;
  ProblemInstance inst = generate_instance(cfg, 0);
  LeastSquaresResult ls =
      least_squares_baseline(inst.regressors, inst.measurements);
  EXPECT_LE((ls.theta - cfg.true_theta.values).lpNorm<Eigen::Infinity>(),
            1e-10);
}

TEST(GenerateInstance, NoiseMatchesRequestedVariance) {
  ExperimentConfig cfg = paper_preset();
  cfg.n_monte_carlo = 2000;
  double sum = 0.0, sumsq = 0.0;
  long count = 0;
  for (int run = 0; run < cfg.n_monte_carlo; ++run) {
    ProblemInstance inst = generate_instance(cfg, run);
    VectorXd noise =
        inst.measurements - inst.regressors * cfg.true_theta.values;
    sum += noise.sum();
    sumsq += noise.squaredNorm();
    count += noise.size();
  }
  const double mean = sum / static_cast<double>(count);
  const double var = sumsq / static_cast<double>(count) - mean * mean;
  EXPECT_NEAR(mean, 0.0, 7e-4);
  EXPECT_NEAR(var, cfg.noise_variance, 0.01 * cfg.noise_variance);
}

TEST(LeastSquares, IdentityDesignReturnsMeasurements) {
  MatrixXd A = MatrixXd::Identity(5, 5);
  VectorXd y(5);
  y << 1.0, -2.0, 0.5, 3.25, -0.125;
  LeastSquaresResult ls = least_squares_baseline(A, y);
  EXPECT_LE((ls.theta - y).lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_EQ(ls.rank, 5);
  EXPECT_FALSE(ls.rank_deficient);
}

TEST(LeastSquares, ExactWhenMeasurementsLieInSpan) {
  CounterRng rng(91, 0);
  MatrixXd A(10, 3);
  for (Index i = 0; i < 10; ++i)
    for (Index j = 0; j < 3; ++j) A(i, j) = rng.normal();
  VectorXd w(3);
  w << 0.7, -1.1, 2.3;
  VectorXd y = A * w;
  LeastSquaresResult ls = least_squares_baseline(A, y);
  EXPECT_LE((y - A * ls.theta).norm(), 1e-10 * y.norm());
  EXPECT_LE((ls.theta - w).lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(LeastSquares, ResidualOrthogonalAndMatchesNormalEquations) {
  ExperimentConfig cfg = paper_preset();
  ProblemInstance inst = generate_instance(cfg, 3);
  const MatrixXd& A = inst.regressors;
  const VectorXd& y = inst.measurements;
  LeastSquaresResult ls = least_squares_baseline(A, y);
  const VectorXd aty = A.transpose() * y;
  EXPECT_LE((A.transpose() * (y - A * ls.theta)).norm(), 1e-8 * aty.norm());
  const VectorXd ne = (A.transpose() * A).ldlt().solve(aty);
  EXPECT_LE((ls.theta - ne).lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(LeastSquares, RankDeficiencyIsFlagged) {
  CounterRng rng(92, 0);
  MatrixXd A(8, 4);
  for (Index i = 0; i < 8; ++i)
    for (Index j = 0; j < 3; ++j) A(i, j) = rng.normal();
  A.col(3) = A.col(0) + A.col(1);  // exactly dependent
  VectorXd y(8);
  for (Index i = 0; i < 8; ++i) y[i] = rng.normal();
  LeastSquaresResult ls = least_squares_baseline(A, y);
  EXPECT_TRUE(ls.rank_deficient);
  EXPECT_EQ(ls.rank, 3);
  EXPECT_THROW(least_squares_baseline(A, VectorXd::Ones(3)),
               std::invalid_argument);
}

TEST(MonteCarlo, SmallStudyIsDeterministicAndInternallyConsistent) {
  ExperimentConfig cfg = paper_preset();
  cfg.n_monte_carlo = 8;
  ExperimentSummary s1 = run_monte_carlo(cfg);
  ExperimentSummary s2 = run_monte_carlo(cfg);

  EXPECT_EQ(s1.mse_constrained, s2.mse_constrained);
  EXPECT_EQ(s1.mse_least_squares, s2.mse_least_squares);
  EXPECT_EQ(s1.win_rate, s2.win_rate);
  EXPECT_EQ(s1.mean_iterations, s2.mean_iterations);
  EXPECT_EQ(s1.n_failures, 0);
  ASSERT_EQ(s1.per_run_records.size(), 8u);

  double sum_c = 0.0, sum_ls = 0.0;
  for (std::size_t i = 0; i < s1.per_run_records.size(); ++i) {
    const RunRecord& r = s1.per_run_records[i];
    EXPECT_FALSE(r.failed);
    EXPECT_EQ(r.run_index, static_cast<int>(i));
    EXPECT_TRUE(r.feasible);
    EXPECT_LE(r.constraint_value, cfg.gamma + 1e-6);
    EXPECT_GE(r.iterations, 1);
    EXPECT_EQ(r.termination, "converged");
    EXPECT_EQ(r.mse_constrained, s2.per_run_records[i].mse_constrained);
    sum_c += r.mse_constrained;
    sum_ls += r.mse_least_squares;
  }
  EXPECT_NEAR(s1.mse_constrained, sum_c / 8.0, 1e-12 * (1.0 + sum_c));
  EXPECT_NEAR(s1.mse_least_squares, sum_ls / 8.0, 1e-12 * (1.0 + sum_ls));
}

TEST(MonteCarlo, InactiveConstraintCollapsesToLeastSquares) {
  ExperimentConfig cfg = paper_preset();
  cfg.n_monte_carlo = 3;
  cfg.gamma = 1e9;
  ExperimentSummary s = run_monte_carlo(cfg);
  EXPECT_EQ(s.n_failures, 0);
  for (const RunRecord& r : s.per_run_records) {
    EXPECT_NEAR(r.mse_constrained, r.mse_least_squares,
                1e-9 * (1.0 + r.mse_least_squares));
    EXPECT_EQ(r.iterations, 1);
  }
}

TEST(ExperimentConfig, Validation) {
  ExperimentConfig cfg = paper_preset();
  cfg.n_monte_carlo = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = paper_preset();
  cfg.noise_variance = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = paper_preset();
  cfg.n_measurements = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = paper_preset();
  cfg.q = 2.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}
