#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ghostplan/planner.hpp"

namespace ghostplan {

struct NoiseConfig {
  double lambda_photons = 1e4;  // photons per pixel per unit contrast
  double sigma_w = 0.01;        // exposure std, weight units
  double sigma_ij = 0.1;        // positional std per axis, pixels
  Index runs = 100;
  std::uint64_t seed = 0;
  bool poisson = true;
  bool exposure = true;
  bool translational = true;

  bool any() const noexcept { return poisson || exposure || translational; }
  void validate() const;
};

struct SimResult {
  Grid2D projection;  // first run, contrast units
  std::vector<double> per_run_snr;
  double snr_mean = 0.0;
  double snr_std = 0.0;
  Index border_crop_px = 0;
  long clamp_count = 0;  // exposure draws that hit the zero clamp, all runs
  bool exact = false;    // no noise source enabled
};

/// Per support mask and pixel, Poisson(lambda w_k R_ijk) counts summed and
/// divided by lambda.
Grid2D simulate_poisson(const FovStack& stack, const Plan& plan, const NoiseConfig& cfg,
                        std::uint64_t run_seed);

/// sum_k max(0, w_k + sigma_w z_k) R_k over the support. `clamp_count`, if
/// given, is incremented once per clamped draw.
Grid2D simulate_exposure(const FovStack& stack, const Plan& plan, const NoiseConfig& cfg,
                         std::uint64_t run_seed, long* clamp_count = nullptr);

/// Every support FOV is re-cut from its master(s) at a Gaussian-perturbed
/// fractional offset (draws truncated at 3 sigma by re-sampling) with
/// bicubic interpolation. Two-mask stacks perturb each mask independently.
Grid2D simulate_translational(std::span<const MasterMask> masters, const FovStack& stack, const Plan& plan,
                              const NoiseConfig& cfg, std::uint64_t run_seed);

/// Enabled sources nested per mask: exposure draw, then positional draw,
/// then the Poisson draw of the perturbed exposure.
Grid2D simulate_all(std::span<const MasterMask> masters, const FovStack& stack, const Plan& plan,
                    const NoiseConfig& cfg, std::uint64_t run_seed, long* clamp_count = nullptr);

/// cfg.runs independent simulate_all calls with seeds
/// derive_run_seed(cfg.seed, run). SNR is taken with a 1-pixel border crop
/// when translational noise is on, unless `border_crop_px` overrides it.
/// Worker threads: GHOSTPLAN_THREADS, else the hardware concurrency.
SimResult monte_carlo(std::span<const MasterMask> masters, const FovStack& stack, const Plan& plan,
                      const TargetImage& target, const NoiseConfig& cfg,
                      std::optional<Index> border_crop_px = std::nullopt);

/// Sample mean and (n - 1) standard deviation; all-infinite input gives
/// (inf, 0).
std::pair<double, double> mean_and_std(const std::vector<double>& v);

}  // namespace ghostplan
