#include "ghostplan/nnls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ghostplan/error.hpp"

namespace ghostplan {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Thin QR of the passive columns, A_P = Q R, updated by column append and
// column removal. Storage is preallocated for `cap` columns.
class UpdatedQr {
 public:
  UpdatedQr(Index rows, Index cap) : q_(rows, cap), r_(cap, cap), p_(0) {}

  Index size() const noexcept { return p_; }
  Index capacity() const noexcept { return q_.cols(); }

  // Appends column a. Returns false, leaving the factorisation unchanged,
  // when a is numerically in the span of the current columns.
  bool append(const Eigen::Ref<const VectorXd>& a, double dependence_tol) {
    if (p_ == capacity()) return false;
    VectorXd v = a;
    VectorXd coeff = VectorXd::Zero(p_);
    for (int pass = 0; pass < 2; ++pass) {
      if (p_ == 0) break;
      const VectorXd h = q_.leftCols(p_).transpose() * v;
      v.noalias() -= q_.leftCols(p_) * h;
      coeff += h;
    }
    const double norm = v.norm();
    const double anorm = a.norm();
    if (!(norm > dependence_tol * anorm) || norm == 0.0) return false;
    q_.col(p_) = v / norm;
    r_.col(p_).head(p_) = coeff;
    r_.col(p_).tail(r_.rows() - p_).setZero();
    r_(p_, p_) = norm;
    ++p_;
    return true;
  }

  // Drops the column at position pos and restores triangular form.
  void remove(Index pos) {
    for (Index c = pos; c + 1 < p_; ++c) r_.col(c).head(p_) = r_.col(c + 1).head(p_);
    for (Index k = pos; k + 1 < p_; ++k) {
      const double a = r_(k, k);
      const double b = r_(k + 1, k);
      const double h = std::hypot(a, b);
      if (h == 0.0) continue;
      const double c = a / h;
      const double s = b / h;
      for (Index j = k; j + 1 < p_; ++j) {
        const double top = r_(k, j);
        const double bot = r_(k + 1, j);
        r_(k, j) = c * top + s * bot;
        r_(k + 1, j) = -s * top + c * bot;
      }
      r_(k + 1, k) = 0.0;
      const VectorXd qk = q_.col(k);
      q_.col(k) = c * qk + s * q_.col(k + 1);
      q_.col(k + 1) = -s * qk + c * q_.col(k + 1);
    }
    --p_;
    r_.row(p_).head(p_ + 1).setZero();
  }

  // Least-squares coefficients of b on the current columns.
  VectorXd solve(const Eigen::Ref<const VectorXd>& b) const {
    if (p_ == 0) return VectorXd();
    const VectorXd qtb = q_.leftCols(p_).transpose() * b;
    return r_.topLeftCorner(p_, p_).triangularView<Eigen::Upper>().solve(qtb);
  }

 private:
  MatrixXd q_;
  MatrixXd r_;
  Index p_;
};

VectorXd residual(const Eigen::Ref<const MatrixXd>& A, const Eigen::Ref<const VectorXd>& b,
                  const std::vector<Index>& passive, const VectorXd& x) {
  VectorXd r = b;
  for (Index k : passive) r.noalias() -= x(k) * A.col(k);
  return r;
}

double kkt_from_gradient(const VectorXd& g, const VectorXd& x, double scale) {
  double worst = 0.0;
  for (Index k = 0; k < g.size(); ++k) {
    const double v = x(k) > 0.0 ? std::abs(g(k)) : std::max(0.0, g(k));
    worst = std::max(worst, v);
  }
  return scale > 0.0 ? worst / scale : worst;
}

}  // namespace

double nnls_kkt_residual(const Eigen::Ref<const MatrixXd>& A, const Eigen::Ref<const VectorXd>& b,
                         const Eigen::Ref<const VectorXd>& x) {
  require(b.size() == A.rows() && x.size() == A.cols(), ErrorKind::Argument, "vector lengths do not match the matrix");
  const VectorXd g = A.transpose() * (b - A * x);
  const double scale = (A.transpose() * b).cwiseAbs().maxCoeff();
  return kkt_from_gradient(g, x, scale);
}

NnlsResult nnls(const Eigen::Ref<const MatrixXd>& A, const Eigen::Ref<const VectorXd>& b,
                const NnlsOptions& opts) {
  const Index m = A.rows();
  const Index n = A.cols();
  require(b.size() == m, ErrorKind::Argument, "right-hand side length does not match the matrix rows");
  require(opts.tol >= 0.0 && opts.max_iter >= 0, ErrorKind::Argument, "invalid solver options");
  NnlsResult out;
  out.x = VectorXd::Zero(n);

  VectorXd g = A.transpose() * b;
  const double scale = n > 0 ? g.cwiseAbs().maxCoeff() : 0.0;
  if (n == 0 || scale == 0.0) {
    out.converged = true;
    out.residual_norm = b.norm();
    out.effective_tol = opts.tol;
    return out;
  }
  const double requested = opts.tol * scale;
  Eigen::VectorXd col_norms = A.colwise().norm().transpose();
  const double max_norm = col_norms.maxCoeff();
  // Gradient entries below the rounding level of A^T (b - A x) carry no
  // information, so the threshold never drops below it.
  const auto rounding_floor = [&](const std::vector<Index>& passive, const VectorXd& xv) {
    double mass = 0.0;
    for (Index k : passive) mass += xv(k) * col_norms(k);
    return 8.0 * std::numeric_limits<double>::epsilon() * max_norm * mass;
  };
  double threshold = requested;
  const long max_iter = opts.max_iter > 0 ? opts.max_iter : 3 * static_cast<long>(n) + 100;
  const double dependence_tol = 1e-10;

  UpdatedQr qr(m, std::min(m, n));
  std::vector<Index> passive;  // in QR column order
  std::vector<char> in_passive(static_cast<std::size_t>(n), 0);
  std::vector<char> rejected(static_cast<std::size_t>(n), 0);
  VectorXd& x = out.x;

  for (;;) {
    // Entering column: largest gradient entry, lowest index on ties.
    Index enter = -1;
    double best = threshold;
    for (Index k = 0; k < n; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      if (in_passive[ku] || rejected[ku]) continue;
      if (g(k) > best) {
        best = g(k);
        enter = k;
      }
    }
    if (enter < 0) {
      out.converged = true;
      break;
    }
    if (out.iterations >= max_iter) break;
    ++out.iterations;

    if (!qr.append(A.col(enter), dependence_tol)) {
      rejected[static_cast<std::size_t>(enter)] = 1;
      continue;
    }
    passive.push_back(enter);
    VectorXd z = qr.solve(b);
    if (!(z(z.size() - 1) > 0.0)) {
      qr.remove(qr.size() - 1);
      passive.pop_back();
      rejected[static_cast<std::size_t>(enter)] = 1;
      continue;
    }
    in_passive[static_cast<std::size_t>(enter)] = 1;

    // Inner loop: step back towards feasibility, dropping columns that hit
    // zero, until the passive least-squares solution is strictly positive.
    for (;;) {
      double alpha = std::numeric_limits<double>::infinity();
      Index blocking = -1;
      for (Index i = 0; i < static_cast<Index>(passive.size()); ++i) {
        if (z(i) <= 0.0) {
          const double xi = x(passive[static_cast<std::size_t>(i)]);
          const double a = xi / (xi - z(i));
          if (a < alpha) {
            alpha = a;
            blocking = i;
          }
        }
      }
      if (blocking < 0) break;
      for (Index i = 0; i < static_cast<Index>(passive.size()); ++i) {
        const Index k = passive[static_cast<std::size_t>(i)];
        x(k) += alpha * (z(i) - x(k));
      }
      x(passive[static_cast<std::size_t>(blocking)]) = 0.0;
      for (Index i = static_cast<Index>(passive.size()) - 1; i >= 0; --i) {
        const Index k = passive[static_cast<std::size_t>(i)];
        if (x(k) <= 0.0) {
          x(k) = 0.0;
          in_passive[static_cast<std::size_t>(k)] = 0;
          qr.remove(i);
          passive.erase(passive.begin() + i);
        }
      }
      z = qr.solve(b);
    }
    for (Index i = 0; i < static_cast<Index>(passive.size()); ++i) x(passive[static_cast<std::size_t>(i)]) = z(i);

    std::fill(rejected.begin(), rejected.end(), 0);
    g.noalias() = A.transpose() * residual(A, b, passive, x);
    threshold = std::max(requested, rounding_floor(passive, x));
  }

  const VectorXd r = residual(A, b, passive, x);
  g.noalias() = A.transpose() * r;
  out.residual_norm = r.norm();
  out.kkt_residual = kkt_from_gradient(g, x, scale);
  out.effective_tol = threshold / scale;
  for (Index k = 0; k < n; ++k)
    if (x(k) > 0.0) out.support.push_back(k);
  return out;
}

}  // namespace ghostplan
