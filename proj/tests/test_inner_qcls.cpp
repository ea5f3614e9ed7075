#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include <mmopt/inner_qcls.hpp>
#include <mmopt/rng.hpp>

using namespace mmopt;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// ridge shrinkage solvable by hand: A = I, d = 1 => theta = y/(1+lambda),
// active case lambda = ||y||/sqrt(2c) - 1
TEST(InnerQcls, RidgeClosedForm) {
  CounterRng rng(3, 0);
  const Eigen::Index n = 5;
  VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = 1.0 + rng.uniform01();
  const double c = 0.5;  // ||y||^2 > 2c guaranteed by construction
  ASSERT_GT(y.squaredNorm(), 2.0 * c);
  InnerQclsResult r = inner_qcls_solve(MatrixXd::Identity(n, n), y,
                                       VectorXd::Ones(n), c);
  const double lam_expected = y.norm() / std::sqrt(2.0 * c) - 1.0;
  EXPECT_NEAR(r.lambda, lam_expected, 1e-10 * (1.0 + lam_expected));
  EXPECT_LE((r.theta - y / (1.0 + lam_expected)).lpNorm<Eigen::Infinity>(),
            1e-9);
  EXPECT_NEAR(r.primal_value, c, 1e-10 * (1.0 + c));
}

TEST(InnerQcls, KktCertificatesOnRandomActiveInstances) {
  CounterRng rng(17, 0);
  int tested = 0;
  for (int t = 0; t < 1000; ++t) {
    const Eigen::Index n = 8 + static_cast<Eigen::Index>(rng.below(9));
    const Eigen::Index p = 2 + static_cast<Eigen::Index>(rng.below(5));
    MatrixXd A(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < p; ++j) A(i, j) = rng.normal();
    VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = 2.0 * rng.normal();
    VectorXd d(p);
    for (Eigen::Index j = 0; j < p; ++j) d[j] = std::exp(rng.uniform(-2.0, 2.0));
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);
    const VectorXd ls = cod.solve(y);
    const double h_ls = 0.5 * ls.dot(d.cwiseProduct(ls));
    const double c = h_ls * rng.uniform(0.05, 0.8);
    if (!(c > 0.0)) continue;
    ++tested;
    InnerQclsResult r = inner_qcls_solve(A, y, d, c);
    const double scale = 1.0 + 2.0 * (A.transpose() * y).norm();
    EXPECT_LE(r.stationarity_residual, 1e-8 * scale);
    EXPECT_LE(r.primal_value, c + 1e-8 * (1.0 + std::abs(c)));
    EXPECT_GE(r.lambda, 0.0);
    EXPECT_GT(r.lambda, 0.0);  // active by construction
    EXPECT_LE(r.complementarity, 1e-6 * scale);
    EXPECT_FALSE(r.ls_feasible);
  }
  EXPECT_GE(tested, 990);
}

TEST(InnerQcls, InactiveConstraintReturnsLeastSquares) {
  CounterRng rng(19, 0);
  MatrixXd A(10, 3);
  for (Eigen::Index i = 0; i < 10; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) A(i, j) = rng.normal();
  VectorXd y(10);
  for (Eigen::Index i = 0; i < 10; ++i) y[i] = rng.normal();
  InnerQclsResult r = inner_qcls_solve(A, y, VectorXd::Ones(3), 1e9);
  EXPECT_TRUE(r.ls_feasible);
  EXPECT_DOUBLE_EQ(r.lambda, 0.0);
  EXPECT_LE((A.transpose() * (A * r.theta - y)).norm(),
            1e-10 * (1.0 + (A.transpose() * y).norm()));
}

TEST(InnerQcls, ZeroBoundForcesOrigin) {
  MatrixXd A = MatrixXd::Identity(4, 4);
  VectorXd y = VectorXd::Ones(4);
  InnerQclsResult r = inner_qcls_solve(A, y, VectorXd::Ones(4), 0.0);
  EXPECT_DOUBLE_EQ(r.theta.norm(), 0.0);
  EXPECT_TRUE(std::isinf(r.lambda));
  EXPECT_DOUBLE_EQ(r.primal_value, 0.0);
}

TEST(InnerQcls, ArgumentValidation) {
  MatrixXd A = MatrixXd::Identity(3, 3);
  VectorXd y = VectorXd::Ones(3);
  EXPECT_THROW(inner_qcls_solve(A, y, VectorXd::Ones(3), -1.0),
               std::invalid_argument);
  VectorXd d = VectorXd::Ones(3);
  d[1] = 0.0;
  EXPECT_THROW(inner_qcls_solve(A, y, d, 1.0), std::invalid_argument);
  EXPECT_THROW(inner_qcls_solve(A, VectorXd::Ones(2), VectorXd::Ones(3), 1.0),
               std::invalid_argument);
  EXPECT_THROW(inner_qcls_solve(A, y, VectorXd::Ones(2), 1.0),
               std::invalid_argument);
}

// returned iterate must sit on the feasible side of the bound: the outer
// solver relies on it for hard feasibility of every iterate
TEST(InnerQcls, FeasibleSideConvergence) {
  CounterRng rng(23, 0);
  for (int t = 0; t < 200; ++t) {
    MatrixXd A(12, 4);
    for (Eigen::Index i = 0; i < 12; ++i)
      for (Eigen::Index j = 0; j < 4; ++j) A(i, j) = rng.normal();
    VectorXd y(12);
    for (Eigen::Index i = 0; i < 12; ++i) y[i] = rng.normal();
    VectorXd d(4);
    for (Eigen::Index j = 0; j < 4; ++j) d[j] = std::exp(rng.uniform(-4.0, 4.0));
    const VectorXd ls = A.colPivHouseholderQr().solve(y);
    const double h_ls = 0.5 * ls.dot(d.cwiseProduct(ls));
    const double c = 0.3 * h_ls;
    if (!(c > 0.0)) continue;
    InnerQclsResult r = inner_qcls_solve(A, y, d, c);
    EXPECT_LE(r.primal_value, c * (1.0 + 1e-15));
  }
}

TEST(InnerQcls, DeterministicAcrossCalls) {
  CounterRng rng(29, 0);
  MatrixXd A(9, 3);
  for (Eigen::Index i = 0; i < 9; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) A(i, j) = rng.normal();
  VectorXd y(9);
  for (Eigen::Index i = 0; i < 9; ++i) y[i] = rng.normal();
  VectorXd d(3);
  d << 0.5, 2.0, 7.0;
  InnerQclsResult a = inner_qcls_solve(A, y, d, 0.1);
  InnerQclsResult b = inner_qcls_solve(A, y, d, 0.1);
  EXPECT_EQ(a.lambda, b.lambda);
  EXPECT_TRUE(a.theta == b.theta);
  EXPECT_EQ(a.n_evaluations, b.n_evaluations);
}
