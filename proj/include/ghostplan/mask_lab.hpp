#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>

#include "ghostplan/grid.hpp"

namespace ghostplan {

struct SpeckleParams {
  Index rows = 0;
  Index cols = 0;
  double correlation_px = 2.0;  // std of the Gaussian blur kernel
  double t_min = 0.0;
  double t_max = 1.0;
  std::uint64_t seed = 0;
};

struct SyntheticOrigin {
  SpeckleParams params;
};

struct IngestedOrigin {
  std::string path;
};

using Provenance = std::variant<SyntheticOrigin, IngestedOrigin>;

/// Transmission map in [0, 1] from which sub-FOVs are cut.
struct MasterMask {
  Grid2D grid;
  double pitch_um = 1.0;
  std::string label;
  Provenance provenance;
};

/// Checks the transmission range invariant; throws Range otherwise.
void validate_transmission(const Grid2D& g, const std::string& what);

/// Blurred Gaussian noise rescaled affinely onto [t_min, t_max].
MasterMask synthesize_speckle(const SpeckleParams& p, double pitch_um = 1.0,
                              std::string label = "synthetic");

/// Reads a binary PGM (P5) or a raw little-endian float32 grid with a JSON
/// sidecar. See write_mask_pgm / write_mask_raw for the layouts.
MasterMask ingest_mask(const std::filesystem::path& path);

/// 16-bit P5 PGM, big-endian samples, transmission = sample / 65535. When
/// `sidecar` is set a JSON sidecar with pitch and label is written as well.
void write_mask_pgm(const MasterMask& m, const std::filesystem::path& path, bool sidecar = true);

/// Raw little-endian float32, row-major, plus <stem>.json sidecar holding
/// {"rows", "cols", "pitch_um", "label"}.
void write_mask_raw(const MasterMask& m, const std::filesystem::path& path);

/// Sidecar path used for a given pixel file: same stem, ".json" extension.
std::filesystem::path sidecar_path(const std::filesystem::path& pixel_file);

/// Elementwise t -> t^exponent (imaging-energy correction).
MasterMask energy_correct(const MasterMask& m, double exponent);

/// Solves exp(-alpha * r_corner^2) = corner_transmission for alpha, with
/// r_corner measured from the grid centre ((rows-1)/2, (cols-1)/2).
double source_profile_alpha(Index rows, Index cols, double corner_transmission);

/// The Gaussian illumination profile itself, s_ij in (0, 1].
Grid2D source_profile(Index rows, Index cols, double corner_transmission);

/// Multiplies g by the Gaussian source profile whose corner value is
/// corner_transmission.
Grid2D apply_source_profile(const Grid2D& g, double corner_transmission);

/// Transmissions of two masks in series multiply.
Grid2D compose_consecutive(const Grid2D& a, const Grid2D& b);

/// sqrt(Var[d_i g + d_j g]) with central differences, over interior pixels.
double delroughness(const Grid2D& g);

struct MaskStats {
  double mean = 0.0;
  double variance = 0.0;
  double delroughness = 0.0;
  RadialSpectrum spectrum;
  std::optional<double> mode_freq;
  std::optional<double> mean_freq;
  std::optional<double> std_freq;
  std::string error;  // set when a spectral statistic is undefined
};

MaskStats mask_stats(const Grid2D& g, int n_bins);
inline MaskStats mask_stats(const MasterMask& m, int n_bins) { return mask_stats(m.grid, n_bins); }

}  // namespace ghostplan
