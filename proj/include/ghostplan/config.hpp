#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ghostplan/noise_sim.hpp"
#include "ghostplan/target_images.hpp"

namespace ghostplan {

struct MaskConfig {
  std::string kind = "synth";  // synth | ingest
  SpeckleParams speckle{512, 512, 2.0, 0.0, 1.0, 0};
  std::string path;
  double pitch_um = 1.0;
  std::string label = "synthetic";
  std::optional<double> energy_exponent;
};

struct SamplingConfig {
  std::string protocol = "systematic";
  FovShape fov{40, 40};
  Index count = 0;  // 0: five times the FOV pixel count
  Stride stride;
  Stride stride_b;
  std::uint64_t seed = 0;
  std::optional<Index> margin_px;  // default: enough for the positional noise
  std::optional<double> source_corner;
};

struct TargetConfig {
  std::string pattern = "resolution_chart";
  std::string path;  // raw image instead of a pattern
  PatternParams params;
  std::optional<double> smooth_sigma_px;
};

struct SolverConfig {
  std::string mode = "demeaned";  // demeaned | enforced
  double pedestal_target = 0.0;
  double tol = 1e-10;
  long max_iter = 0;
};

struct RoutingConfig {
  double v_mm_s = 1.0;
  double flux = 1e4;
  std::uint64_t seed = 0;
};

/// Whole-pipeline configuration. Every section is optional; unknown keys
/// anywhere are rejected.
struct RunConfig {
  std::vector<MaskConfig> masks{MaskConfig{}};
  SamplingConfig sampling;
  TargetConfig target;
  SolverConfig solver;
  NoiseConfig noise;
  std::optional<Index> border_crop_px;
  RoutingConfig routing;
  std::string output_dir = "out";
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical JSON form of a parsed config (all defaults filled in).
nlohmann::json to_json(const RunConfig& c);

/// "12-by-8" -> x = 12, y = 8. A bare "4" means 4-by-4.
Stride parse_stride(const std::string& s);
std::string format_stride(Stride s);

/// Pipeline stages driven by the config.
std::vector<MasterMask> build_masters(const RunConfig& c);
FovStack build_stack(const RunConfig& c, const std::vector<MasterMask>& masters);
TargetImage build_target(const RunConfig& c);
Plan build_plan(const RunConfig& c, const FovStack& stack, const TargetImage& target);

/// Margin the sampler uses: explicit, or required_margin(sigma_ij) when
/// positional noise is enabled, else 0.
Index effective_margin(const RunConfig& c);

}  // namespace ghostplan
