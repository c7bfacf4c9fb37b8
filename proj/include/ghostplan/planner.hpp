#pragma once

#include <vector>

#include "ghostplan/fov_sampler.hpp"
#include "ghostplan/nnls.hpp"
#include "ghostplan/target_images.hpp"

namespace ghostplan {

enum class DesignMode { DeMeaned, Raw };

/// Columns are the row-major flattened FOVs, optionally with each column's
/// mean subtracted. The means are kept so the pedestal can be rebuilt.
struct DesignMatrix {
  Eigen::MatrixXd matrix;
  DesignMode mode = DesignMode::DeMeaned;
  Eigen::VectorXd column_means;
};

DesignMatrix build_design_matrix(const FovStack& stack, DesignMode mode);

struct SolverStats {
  long iterations = 0;
  double kkt_residual = 0.0;
};

/// Non-negative exposure weights and the quantities derived from them.
struct Plan {
  Eigen::VectorXd weights;
  std::vector<Index> support;  // ascending, w_k > 0
  double pedestal = 0.0;
  double residual_norm = 0.0;
  double noise_free_snr = 0.0;
  SolverStats solver_stats;
  double tol = 0.0;  // relative KKT tolerance the solver certified

  Index n_prime() const noexcept { return static_cast<Index>(support.size()); }
};

/// Thrown when the solver runs out of iterations; carries the best iterate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, Plan best)
      : Error(ErrorKind::Convergence, what), best_(std::move(best)) {}
  const Plan& best() const noexcept { return best_; }

 private:
  Plan best_;
};

/// Fits the zero-mean target with de-meaned columns.
Plan solve_nnls(const DesignMatrix& M, const TargetImage& target, const NnlsOptions& opts = {});

/// Fits I + pedestal_target on the raw columns, fixing the pedestal level
/// by hand instead of leaving it free.
Plan solve_enforced_pedestal(const FovStack& stack, const TargetImage& target, double pedestal_target,
                             const NnlsOptions& opts = {});

/// P = sum_k w_k R_k.
Grid2D noise_free_projection(const FovStack& stack, const Plan& plan);

/// The two sides of the pedestal identity: sum_k w_k mean(R_k), and
/// N' * mean_support(w) * E_support[R] with E_support[R] the
/// exposure-weighted mean of the support FOV means.
struct PedestalFactors {
  double direct = 0.0;
  Index n_prime = 0;
  double mean_weight = 0.0;
  double mean_transmission = 0.0;
  double factored() const noexcept { return static_cast<double>(n_prime) * mean_weight * mean_transmission; }
};

PedestalFactors pedestal_factors(const FovStack& stack, const Plan& plan);

}  // namespace ghostplan
