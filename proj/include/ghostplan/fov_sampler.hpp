#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ghostplan/grid.hpp"
#include "ghostplan/mask_lab.hpp"

namespace ghostplan {

/// Top-left corner of a sub-FOV inside its master, (row, column).
struct Offset {
  Index dy = 0;
  Index dx = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

/// One sub-FOV's placement. `b` is set for consecutive (two-mask) stacks.
struct OffsetRecord {
  Offset a;
  std::optional<Offset> b;
  friend bool operator==(const OffsetRecord&, const OffsetRecord&) = default;
};

struct FovShape {
  Index rows = 0;  // m
  Index cols = 0;  // n
};

/// Pixel steps between successive FOVs. Written "x-by-y" on the command
/// line, where x steps along columns.
struct Stride {
  Index y = 1;
  Index x = 1;
};

struct Systematic { Stride stride; };
struct RandomDraw { std::uint64_t seed = 0; };
struct UniqueTiling {};
struct ConsecutiveSystematic { Stride stride_a; Stride stride_b; };
struct ConsecutiveUnique { Stride stride_a; };
struct ConsecutiveRandom { std::uint64_t seed = 0; };

using SamplingProtocol = std::variant<Systematic, RandomDraw, UniqueTiling, ConsecutiveSystematic,
                                      ConsecutiveUnique, ConsecutiveRandom>;

std::string protocol_name(const SamplingProtocol& p);

/// Candidate ensemble R_ijk. FOV k is stored as column k of `pixels`
/// (row-major flattening of the m x n window), which is also the raw design
/// matrix layout.
struct FovStack {
  FovShape shape;
  Eigen::MatrixXd pixels;  // (m*n) x N, column-major
  std::vector<OffsetRecord> offsets;
  SamplingProtocol protocol;
  Index margin_px = 0;
  /// Optional illumination profile multiplied into every FOV.
  std::optional<Grid2D> illumination;

  Index count() const noexcept { return static_cast<Index>(offsets.size()); }
  bool consecutive() const noexcept { return !offsets.empty() && offsets.front().b.has_value(); }
  Grid2D fov(Index k) const;
  double fov_mean(Index k) const { return pixels.col(k).mean(); }
};

/// All valid top-left offsets along one axis for a master of extent `len`.
Index axis_capacity(Index len, Index fov, Index stride, Index margin);

FovStack sample_systematic(const MasterMask& m, FovShape fov, Stride stride, Index count,
                           Index margin_px = 0);

FovStack sample_random(const MasterMask& m, FovShape fov, Index count, std::uint64_t seed,
                       Index margin_px = 0);

FovStack sample_unique_tiling(const MasterMask& m, FovShape fov, Index margin_px = 0);

/// Two masks in series. `protocol` must be one of the Consecutive* variants.
FovStack sample_consecutive(const MasterMask& a, const MasterMask& b, FovShape fov,
                            const SamplingProtocol& protocol, Index count, Index margin_px = 0);

/// Re-reads the masters at the stored offsets (integer positions) and
/// returns FOV k exactly as it was sampled.
Grid2D extract_fov(std::span<const MasterMask> masters, const FovStack& stack, Index k);

/// Minimum margin for translational perturbations of standard deviation
/// sigma_px: ceil(3 sigma) + 2.
Index required_margin(double sigma_px);

/// Multiplies every FOV by the Gaussian source profile and records it so
/// that re-extraction reproduces the attenuated FOVs.
FovStack with_source_profile(FovStack stack, double corner_transmission);

}  // namespace ghostplan
