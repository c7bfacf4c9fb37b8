#pragma once

#include <Eigen/Dense>

#include <vector>

namespace ghostplan {

struct NnlsOptions {
  /// Relative KKT tolerance, scaled by ||A^T b||_inf.
  double tol = 1e-10;
  /// Outer (column-entering) iterations; 0 picks 3 * cols + 100.
  long max_iter = 0;
};

struct NnlsResult {
  Eigen::VectorXd x;
  std::vector<Eigen::Index> support;  // ascending
  long iterations = 0;
  /// max over support |g_k| and over the rest max(0, g_k), with
  /// g = A^T (b - A x), divided by ||A^T b||_inf.
  double kkt_residual = 0.0;
  double residual_norm = 0.0;
  /// Relative tolerance actually enforced: the requested one, raised to the
  /// rounding level of the gradient when the weights are large.
  double effective_tol = 0.0;
  bool converged = false;
};

/// Lawson-Hanson active-set solver for min ||A x - b||_2 subject to x >= 0.
///
/// The passive-set least-squares problems are solved through a thin QR
/// factorisation that is updated in place: appended columns are
/// orthogonalised with two Gram-Schmidt passes, removed columns are
/// retriangularised with Givens rotations. Entering columns are chosen by
/// the largest positive gradient entry, ties to the lowest index. A
/// candidate that is numerically dependent on the passive set, or whose
/// least-squares coefficient comes out non-positive, is rejected until the
/// iterate next changes.
///
/// The KKT test compares against max(tol * ||A^T b||_inf, the rounding
/// level of A^T (b - A x)); the latter is 8 eps max_j ||a_j|| sum_k x_k ||a_k||.
///
/// Returns with converged = false when max_iter is exhausted; x then holds
/// the best feasible iterate reached.
NnlsResult nnls(const Eigen::Ref<const Eigen::MatrixXd>& A, const Eigen::Ref<const Eigen::VectorXd>& b,
                const NnlsOptions& opts = {});

/// KKT residual as defined on NnlsResult, for an arbitrary feasible x.
double nnls_kkt_residual(const Eigen::Ref<const Eigen::MatrixXd>& A,
                         const Eigen::Ref<const Eigen::VectorXd>& b,
                         const Eigen::Ref<const Eigen::VectorXd>& x);

}  // namespace ghostplan
