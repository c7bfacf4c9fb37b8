#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>

#include "ghostplan/noise_sim.hpp"

namespace ghostplan {

/// sqrt(E[I^2] / E[nu^2]) with nu = P - mean(P) - I over the region left
/// after removing `border_crop_px` pixels from each edge. Returns +inf when
/// the residual vanishes to rounding level.
double snr(const TargetImage& target, const Grid2D& projection, Index border_crop_px = 0);

enum class NoiseSource { Poisson, Exposure, Translational };

std::string noise_source_name(NoiseSource s);

struct NoisePrediction {
  NoiseSource source = NoiseSource::Poisson;
  double noise_std = 0.0;      // contrast units
  double predicted_snr = 0.0;  // sqrt(E[I^2]) / noise_std, inf when noise_std = 0
};

/// noise_std = sqrt(pedestal / lambda).
NoisePrediction predict_poisson(double norm_sq, double pedestal, double lambda);
NoisePrediction predict_poisson(const TargetImage& target, const Plan& plan, const NoiseConfig& cfg);

/// noise_std = sqrt(sigma_w^2 N' Var[R]).
NoisePrediction predict_exposure(double norm_sq, double sigma_w, Index n_prime, double variance);
NoisePrediction predict_exposure(const TargetImage& target, const FovStack& stack, const Plan& plan,
                                 const NoiseConfig& cfg);

/// Mean over support FOVs of each FOV's pixel variance.
double support_pooled_variance(const FovStack& stack, const Plan& plan);

/// noise_std = sigma_ij sqrt(sum_k w_k^2 D_k^2), D_k the delroughness of
/// FOV k. For two-mask stacks the masks move independently, so D_k^2 is
/// Var[B grad A] + Var[A grad B] computed from the masters.
NoisePrediction predict_translational(const TargetImage& target, std::span<const MasterMask> masters,
                                      const FovStack& stack, const Plan& plan, const NoiseConfig& cfg);

struct SimSummary {
  double mean = 0.0;
  double std = 0.0;
};

/// One row of the summary table.
struct PlanReport {
  std::string mask_label;
  Index n_fovs = 0;
  std::string stride;
  double nnls_snr = 0.0;
  double pedestal = 0.0;
  Index n_prime = 0;
  std::map<std::string, SimSummary> simulated;  // poisson, exposure, translational, all
  std::map<std::string, NoisePrediction> predicted;
  std::optional<double> t_s;
  std::optional<double> t_e;
};

PlanReport report_plan(const TargetImage& target, std::span<const MasterMask> masters, const FovStack& stack,
                       const Plan& plan, const NoiseConfig& cfg,
                       const std::map<std::string, SimResult>& sim_results);

/// Stable CSV schema of the report table.
std::string report_csv_header();
std::string report_csv_row(const PlanReport& r);

/// Number formatting shared by the CSV writers: shortest round-trip form,
/// "exact" for +inf, empty for missing.
std::string format_number(std::optional<double> v);

}  // namespace ghostplan
