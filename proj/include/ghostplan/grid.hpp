#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ghostplan/error.hpp"

namespace ghostplan {

using Index = Eigen::Index;

template <typename Scalar>
using RowMajorArray = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense 2-D grid of finite real values, row-major, with an optional pixel
/// pitch in micrometres. Index (i, j) is (row, column).
template <typename Scalar>
class Grid {
 public:
  using Array = RowMajorArray<Scalar>;

  Grid() = default;

  explicit Grid(Array values, std::optional<double> pitch_um = std::nullopt)
      : values_(std::move(values)), pitch_um_(pitch_um) {
    require(values_.rows() > 0 && values_.cols() > 0, ErrorKind::Argument,
            "grid dimensions must be positive");
    require(values_.allFinite(), ErrorKind::Argument, "grid values must be finite");
    require(!pitch_um_ || *pitch_um_ > 0.0, ErrorKind::Argument, "pixel pitch must be positive");
  }

  Grid(Index rows, Index cols, Scalar fill, std::optional<double> pitch_um = std::nullopt)
      : Grid(Array::Constant(rows, cols, fill), pitch_um) {}

  static Grid constant(Index rows, Index cols, Scalar value) { return Grid(rows, cols, value); }

  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }
  Index size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.size() == 0; }

  const Array& values() const noexcept { return values_; }
  Scalar operator()(Index i, Index j) const { return values_(i, j); }

  const std::optional<double>& pitch_um() const noexcept { return pitch_um_; }
  void set_pitch_um(std::optional<double> pitch) {
    require(!pitch || *pitch > 0.0, ErrorKind::Argument, "pixel pitch must be positive");
    pitch_um_ = pitch;
  }

  /// Row-major flattening, i.e. the column vector used by the design matrix.
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> flattened() const {
    return Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(values_.data(), values_.size());
  }

  static Grid from_flat(const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& flat,
                        Index rows, Index cols, std::optional<double> pitch_um = std::nullopt) {
    require(flat.size() == rows * cols, ErrorKind::Argument, "flat length does not match shape");
    Array a(rows, cols);
    Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(a.data(), a.size()) = flat;
    return Grid(std::move(a), pitch_um);
  }

  Grid block(Index row, Index col, Index rows, Index cols) const {
    require(row >= 0 && col >= 0 && row + rows <= this->rows() && col + cols <= this->cols(),
            ErrorKind::Argument, "block outside grid");
    return Grid(Array(values_.block(row, col, rows, cols)), pitch_um_);
  }

  bool same_shape(const Grid& other) const noexcept {
    return rows() == other.rows() && cols() == other.cols();
  }

 private:
  Array values_;
  std::optional<double> pitch_um_;
};

using Grid2D = Grid<double>;

/// Sums are taken about the first sample, which makes both statistics exact
/// for constant grids and keeps cancellation small for nearly constant ones.
template <typename Scalar>
Scalar grid_mean(const Grid<Scalar>& g) {
  const Scalar ref = g.values()(0, 0);
  return ref + (g.values() - ref).mean();
}

/// Population variance (divides by the number of samples).
template <typename Scalar>
Scalar grid_variance(const Grid<Scalar>& g) {
  const auto d = (g.values() - g.values()(0, 0)).eval();
  const Scalar mu = d.mean();
  return (d - mu).square().mean();
}

/// Catmull-Rom cubic weights (a = -0.5) for taps at offsets -1, 0, 1, 2
/// relative to floor(x), with t = x - floor(x).
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> catmull_rom_weights(Scalar t) {
  const Scalar t2 = t * t;
  const Scalar t3 = t2 * t;
  Eigen::Matrix<Scalar, 4, 1> w;
  w << Scalar(0.5) * (-t3 + Scalar(2) * t2 - t),
      Scalar(0.5) * (Scalar(3) * t3 - Scalar(5) * t2 + Scalar(2)),
      Scalar(0.5) * (-Scalar(3) * t3 + Scalar(4) * t2 + t),
      Scalar(0.5) * (t3 - t2);
  return w;
}

/// Catmull-Rom bicubic interpolation at fractional (x, y) = (row, column).
/// The point must lie at least one pixel inside the border; stencil taps
/// beyond the last row/column are clamped.
template <typename Scalar>
Scalar interp_bicubic(const Grid<Scalar>& g, Scalar x, Scalar y) {
  require(std::isfinite(static_cast<double>(x)) && std::isfinite(static_cast<double>(y)) &&
              x >= Scalar(1) && y >= Scalar(1) && x <= Scalar(g.rows() - 2) &&
              y <= Scalar(g.cols() - 2),
          ErrorKind::Domain, "bicubic sample point outside the interior of the grid");
  const Index r0 = static_cast<Index>(std::floor(x));
  const Index c0 = static_cast<Index>(std::floor(y));
  const auto wr = catmull_rom_weights<Scalar>(x - Scalar(r0));
  const auto wc = catmull_rom_weights<Scalar>(y - Scalar(c0));
  Scalar acc(0);
  for (int a = 0; a < 4; ++a) {
    const Index r = std::min<Index>(r0 - 1 + a, g.rows() - 1);
    Scalar row_acc(0);
    for (int b = 0; b < 4; ++b) {
      const Index c = std::min<Index>(c0 - 1 + b, g.cols() - 1);
      row_acc += wc(b) * g(r, c);
    }
    acc += wr(a) * row_acc;
  }
  return acc;
}

/// Re-samples the rows x cols window whose top-left corner sits at the
/// fractional position (row0, col0) of `g`. Equivalent to calling
/// interp_bicubic at every window pixel, but the separable weights are shared
/// since the fractional part is identical for the whole window.
template <typename Scalar>
RowMajorArray<Scalar> shifted_window(const Grid<Scalar>& g, Scalar row0, Scalar col0, Index rows,
                                     Index cols) {
  require(row0 >= Scalar(1) && col0 >= Scalar(1) && row0 + Scalar(rows - 1) <= Scalar(g.rows() - 2) &&
              col0 + Scalar(cols - 1) <= Scalar(g.cols() - 2),
          ErrorKind::Domain, "shifted window leaves the interior of the grid");
  const Index r0 = static_cast<Index>(std::floor(row0));
  const Index c0 = static_cast<Index>(std::floor(col0));
  const auto wr = catmull_rom_weights<Scalar>(row0 - Scalar(r0));
  const auto wc = catmull_rom_weights<Scalar>(col0 - Scalar(c0));
  const auto& v = g.values();
  const Index last_r = g.rows() - 1;
  const Index last_c = g.cols() - 1;

  // Horizontal pass over the rows the vertical stencil touches.
  RowMajorArray<Scalar> horiz(rows + 3, cols);
  for (Index rr = 0; rr < rows + 3; ++rr) {
    const Index r = std::min<Index>(r0 - 1 + rr, last_r);
    for (Index j = 0; j < cols; ++j) {
      const Index c = c0 + j;
      horiz(rr, j) = wc(0) * v(r, c - 1) + wc(1) * v(r, c) + wc(2) * v(r, std::min(c + 1, last_c)) +
                     wc(3) * v(r, std::min(c + 2, last_c));
    }
  }
  RowMajorArray<Scalar> out(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    out.row(i) = wr(0) * horiz.row(i) + wr(1) * horiz.row(i + 1) + wr(2) * horiz.row(i + 2) +
                 wr(3) * horiz.row(i + 3);
  }
  return out;
}

/// Azimuthally averaged power spectrum. Frequencies in cycles/pixel.
struct RadialSpectrum {
  std::vector<double> bin_centers;
  std::vector<double> power;
  std::vector<std::size_t> counts;  // frequency samples that fell in each bin
};

/// Unnormalised 2-D DFT, squared modulus, averaged over n_bins annuli of
/// uniform width spanning [0, sqrt(2)/2]. The DC sample lands in bin 0.
RadialSpectrum radial_power_spectrum(const Grid2D& g, int n_bins);

/// Unbinned |F(kx, ky)|^2 in FFT order (row frequency index, column index).
RowMajorArray<double> power_spectrum_2d(const Grid2D& g);

struct SpectrumSummary {
  double mode_freq;
  double mean_freq;
  double std_freq;
};

/// Arg-max bin centre over bins 1..n-1 (bin 0 holds DC, lowest index wins
/// ties); nullopt when every non-DC bin is empty of power.
std::optional<double> spectrum_mode(const RadialSpectrum& s);

/// Power-weighted mean and standard deviation of the bin centres over all
/// bins. Throws Undefined for an all-zero spectrum.
std::pair<double, double> spectrum_moments(const RadialSpectrum& s);

/// Mode plus weighted moments. Throws Undefined when either is undefined.
SpectrumSummary spectrum_summary(const RadialSpectrum& s);

}  // namespace ghostplan
