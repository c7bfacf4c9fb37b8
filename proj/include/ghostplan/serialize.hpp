#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "ghostplan/analytics.hpp"
#include "ghostplan/config.hpp"
#include "ghostplan/routing.hpp"

namespace ghostplan {

inline constexpr const char* kToolVersion = "0.1.0";

/// FNV-1a 64-bit hash of the compact dump, as 16 hex digits. nlohmann
/// objects keep keys sorted, so equal documents hash equally.
std::string digest(const nlohmann::json& j);

/// Numbers that may be +inf (an exact SNR) are written as the string "exact".
nlohmann::json snr_value(double v);
double snr_from_json(const nlohmann::json& j);

nlohmann::json stack_manifest(const FovStack& stack);

/// Weights are stored sparsely as [index, value] pairs.
nlohmann::json plan_to_json(const Plan& plan, const FovStack& stack);
Plan plan_from_json(const nlohmann::json& j);

nlohmann::json prediction_to_json(const NoisePrediction& p);
nlohmann::json sim_to_json(const SimResult& r);
nlohmann::json route_to_json(const Route& r);
std::string route_polyline_csv(const Route& r);
nlohmann::json report_to_json(const PlanReport& r);
nlohmann::json mask_stats_to_json(const MaskStats& s);

/// Pretty-printed JSON plus trailing newline; throws Io on failure.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Little-endian float32 pixels plus a sidecar with rows, cols and `extra`.
void write_grid_raw(const Grid2D& g, const std::filesystem::path& path, nlohmann::json extra = nlohmann::json::object());

}  // namespace ghostplan
