#include <gtest/gtest.h>

#include <random>

#include "ghostplan/error.hpp"
#include "ghostplan/nnls.hpp"
#include "oracles.hpp"

using namespace ghostplan;

namespace {

struct Instance {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

Instance random_instance(std::mt19937_64& eng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Instance in{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
  for (Eigen::Index k = 0; k < in.A.size(); ++k) in.A.data()[k] = n(eng);
  for (Eigen::Index k = 0; k < rows; ++k) in.b(k) = n(eng);
  return in;
}

void expect_kkt(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const NnlsResult& r) {
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE((r.x.array() >= 0.0).all());
  EXPECT_LE(r.kkt_residual, r.effective_tol);
  EXPECT_NEAR(r.kkt_residual, nnls_kkt_residual(A, b, r.x), 1e-12);
  for (Eigen::Index k = 0; k < r.x.size(); ++k) {
    const bool in = std::find(r.support.begin(), r.support.end(), k) != r.support.end();
    EXPECT_EQ(in, r.x(k) > 0.0);
  }
  EXPECT_TRUE(std::is_sorted(r.support.begin(), r.support.end()));
  EXPECT_NEAR(r.residual_norm, (A * r.x - b).norm(), 1e-10 * (1 + b.norm()));
}

}  // namespace

TEST(Nnls, SixByFourMatchesSubsetOracle) {
  std::mt19937_64 eng(1);
  for (int t = 0; t < 50; ++t) {
    const auto in = random_instance(eng, 4, 6);
    const auto r = nnls(in.A, in.b);
    expect_kkt(in.A, in.b, r);
    EXPECT_NEAR((in.A * r.x - in.b).squaredNorm(), oracle::nnls_objective(in.A, in.b), 1e-8);
  }
}

TEST(Nnls, RandomSmallInstancesMatchOracle) {
  std::mt19937_64 eng(2);
  std::uniform_int_distribution<int> rows(1, 8), cols(1, 10);
  for (int t = 0; t < 200; ++t) {
    const auto in = random_instance(eng, rows(eng), cols(eng));
    const auto r = nnls(in.A, in.b);
    expect_kkt(in.A, in.b, r);
    EXPECT_NEAR((in.A * r.x - in.b).squaredNorm(), oracle::nnls_objective(in.A, in.b), 1e-8) << t;
  }
}

TEST(Nnls, NonNegativeMatricesMatchOracle) {
  // Transmission-like columns: all entries positive, heavily collinear.
  std::mt19937_64 eng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    Eigen::MatrixXd A(8, 10);
    for (Eigen::Index k = 0; k < A.size(); ++k) A.data()[k] = u(eng);
    Eigen::VectorXd b(8);
    for (Eigen::Index k = 0; k < 8; ++k) b(k) = u(eng) - 0.3;
    const auto r = nnls(A, b);
    expect_kkt(A, b, r);
    EXPECT_NEAR((A * r.x - b).squaredNorm(), oracle::nnls_objective(A, b), 1e-8) << t;
  }
}

TEST(Nnls, ScaledUnitBasis) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(5, 5);
  const Eigen::VectorXd c = (Eigen::VectorXd(5) << 2, 0.5, 3, 1, 4).finished();
  A.diagonal() = c;
  const Eigen::VectorXd b = (Eigen::VectorXd(5) << 1, -2, 0.3, 0, 5).finished();
  const auto r = nnls(A, b);
  for (Eigen::Index p = 0; p < 5; ++p) EXPECT_NEAR(r.x(p), std::max(b(p), 0.0) / c(p), 1e-14);
}

TEST(Nnls, DuplicateColumnsDoNotBreakSolve) {
  std::mt19937_64 eng(4);
  auto in = random_instance(eng, 6, 4);
  Eigen::MatrixXd A(6, 8);
  A << in.A, in.A;
  const auto r = nnls(A, in.b);
  expect_kkt(A, in.b, r);
  EXPECT_NEAR((A * r.x - in.b).squaredNorm(), oracle::nnls_objective(in.A, in.b), 1e-8);
}

TEST(Nnls, ZeroTargetGivesZero) {
  std::mt19937_64 eng(5);
  const auto in = random_instance(eng, 5, 7);
  const auto r = nnls(in.A, Eigen::VectorXd::Zero(5));
  EXPECT_TRUE(r.support.empty());
  EXPECT_EQ(r.x.norm(), 0.0);
  EXPECT_TRUE(r.converged);
}

TEST(Nnls, Deterministic) {
  std::mt19937_64 eng(6);
  const auto in = random_instance(eng, 30, 80);
  const auto a = nnls(in.A, in.b);
  const auto b = nnls(in.A, in.b);
  EXPECT_TRUE(a.x == b.x);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Nnls, IterationCapReportsNotConverged) {
  std::mt19937_64 eng(7);
  const auto in = random_instance(eng, 20, 40);
  NnlsOptions o;
  o.max_iter = 1;
  const auto r = nnls(in.A, in.b, o);
  EXPECT_FALSE(r.converged);
  EXPECT_TRUE((r.x.array() >= 0.0).all());
}

TEST(Nnls, ShapeMismatchRejected) {
  EXPECT_THROW(nnls(Eigen::MatrixXd::Ones(3, 2), Eigen::VectorXd::Ones(4)), Error);
}
