#include "ghostplan/planner.hpp"

#include <cmath>
#include <string>

#include "ghostplan/analytics.hpp"

namespace ghostplan {

DesignMatrix build_design_matrix(const FovStack& stack, DesignMode mode) {
  require(stack.count() > 0, ErrorKind::Argument, "design matrix needs a non-empty stack");
  DesignMatrix M;
  M.mode = mode;
  M.column_means = stack.pixels.colwise().mean().transpose();
  M.matrix = stack.pixels;
  if (mode == DesignMode::DeMeaned) M.matrix.rowwise() -= M.column_means.transpose();
  return M;
}

namespace {

void check_target(const Eigen::MatrixXd& M, const TargetImage& target) {
  require(target.grid.size() == M.rows(), ErrorKind::Argument,
          "target dimensions do not match the FOV dimensions");
}

// Weights and derived quantities from a solver result. De-meaned columns
// leave the pedestal out of M w, so it is added back for the SNR.
Plan assemble(const DesignMatrix& M, const TargetImage& target, const NnlsResult& r, double tol,
              bool add_pedestal) {
  Plan p;
  p.weights = r.x;
  p.support.assign(r.support.begin(), r.support.end());
  p.pedestal = M.column_means.dot(r.x);
  p.residual_norm = r.residual_norm;
  p.solver_stats = {r.iterations, r.kkt_residual};
  p.tol = tol;
  Eigen::VectorXd flat = M.matrix * r.x;
  if (add_pedestal) flat.array() += p.pedestal;
  p.noise_free_snr = snr(target, Grid2D::from_flat(flat, target.rows(), target.cols()));
  return p;
}

Plan finish(const DesignMatrix& M, const TargetImage& target, const NnlsResult& r, const NnlsOptions& opts,
            bool add_pedestal) {
  Plan p = assemble(M, target, r, r.effective_tol, add_pedestal);
  if (!r.converged) {
    throw ConvergenceError("NNLS did not converge in " + std::to_string(r.iterations) +
                               " iterations (KKT residual " + std::to_string(r.kkt_residual) + ")",
                           std::move(p));
  }
  return p;
}

}  // namespace

Plan solve_nnls(const DesignMatrix& M, const TargetImage& target, const NnlsOptions& opts) {
  require(M.mode == DesignMode::DeMeaned, ErrorKind::Precondition, "solve_nnls expects de-meaned columns");
  check_target(M.matrix, target);
  const Eigen::VectorXd b = target.grid.flattened();
  return finish(M, target, nnls(M.matrix, b, opts), opts, true);
}

Plan solve_enforced_pedestal(const FovStack& stack, const TargetImage& target, double pedestal_target,
                             const NnlsOptions& opts) {
  require(pedestal_target > 0.0 && std::isfinite(pedestal_target), ErrorKind::Argument,
          "pedestal target must be positive");
  const DesignMatrix M = build_design_matrix(stack, DesignMode::Raw);
  check_target(M.matrix, target);
  Eigen::VectorXd b = target.grid.flattened();
  b.array() += pedestal_target;
  return finish(M, target, nnls(M.matrix, b, opts), opts, false);
}

Grid2D noise_free_projection(const FovStack& stack, const Plan& plan) {
  require(plan.weights.size() == stack.count(), ErrorKind::Argument, "plan does not match the stack");
  Eigen::VectorXd flat = Eigen::VectorXd::Zero(stack.pixels.rows());
  for (Index k : plan.support) flat.noalias() += plan.weights(k) * stack.pixels.col(k);
  return Grid2D::from_flat(flat, stack.shape.rows, stack.shape.cols);
}

PedestalFactors pedestal_factors(const FovStack& stack, const Plan& plan) {
  require(plan.weights.size() == stack.count(), ErrorKind::Argument, "plan does not match the stack");
  PedestalFactors f;
  f.n_prime = plan.n_prime();
  double wsum = 0.0;
  for (Index k : plan.support) {
    const double mu = stack.fov_mean(k);
    f.direct += plan.weights(k) * mu;
    wsum += plan.weights(k);
  }
  if (f.n_prime > 0) {
    f.mean_weight = wsum / static_cast<double>(f.n_prime);
    f.mean_transmission = wsum > 0.0 ? f.direct / wsum : 0.0;
  }
  return f;
}

}  // namespace ghostplan
