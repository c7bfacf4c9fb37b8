#pragma once

#include <optional>
#include <string>

#include "ghostplan/grid.hpp"

namespace ghostplan {

/// Zero-mean desired image I_ij with its mean square E[I^2] cached.
struct TargetImage {
  Grid2D grid;
  double norm_sq = 0.0;

  Index rows() const noexcept { return grid.rows(); }
  Index cols() const noexcept { return grid.cols(); }
};

/// Affine map to unit contrast followed by mean removal.
TargetImage normalize(const Grid2D& raw);

enum class PatternKind { GaussianDot, Square, Dots, LinearGradient, ResolutionChart };

PatternKind parse_pattern_kind(const std::string& name);
std::string pattern_kind_name(PatternKind kind);

struct PatternParams {
  /// Square side in pixels. Defaults to round(min(m, n) / 4).
  std::optional<Index> side;
  /// Gaussian dot standard deviation in pixels. Defaults to the width whose
  /// normalised E[I^2] equals that of the default square.
  std::optional<double> sigma_px;
  /// Dot lattice: `dots_per_axis` squares of 1x1 every `dot_spacing` pixels.
  Index dots_per_axis = 10;
  Index dot_spacing = 4;
  /// Target on-pixel fraction of the resolution chart.
  double on_fraction = 0.30;
};

TargetImage make_pattern(PatternKind kind, Index m, Index n, const PatternParams& params = {});

/// Binary on/off masks before normalisation (exposed for tests and export).
RowMajorArray<double> binary_square(Index m, Index n, Index side);
RowMajorArray<double> binary_dots(Index m, Index n, Index per_axis, Index spacing);
RowMajorArray<double> binary_resolution_chart(Index m, Index n, double on_fraction);

/// Standard deviation that gives the normalised Gaussian dot a mean square
/// of `norm_sq` on an m x n grid (rising branch of the curve).
double gaussian_dot_sigma(Index m, Index n, double norm_sq);

/// Convolution with a normalised Gaussian (radius ceil(4 sigma)),
/// half-sample symmetric padding. Keeps the mean; not re-normalised.
TargetImage gaussian_smooth(const TargetImage& img, double sigma_px);

}  // namespace ghostplan
