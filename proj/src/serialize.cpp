#include "ghostplan/serialize.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace ghostplan {

using nlohmann::json;

std::string digest(const json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json snr_value(double v) {
  if (std::isinf(v) && v > 0) return "exact";
  if (!std::isfinite(v)) return nullptr;
  return v;
}

double snr_from_json(const json& j) {
  if (j.is_string() && j.get<std::string>() == "exact") return std::numeric_limits<double>::infinity();
  if (j.is_number()) return j.get<double>();
  fail(ErrorKind::Format, "expected an SNR value");
}

json stack_manifest(const FovStack& stack) {
  json offs = json::array();
  for (const auto& r : stack.offsets) {
    if (r.b) {
      offs.push_back({r.a.dy, r.a.dx, r.b->dy, r.b->dx});
    } else {
      offs.push_back({r.a.dy, r.a.dx});
    }
  }
  return json{{"fov", {stack.shape.rows, stack.shape.cols}},
              {"count", stack.count()},
              {"protocol", protocol_name(stack.protocol)},
              {"margin_px", stack.margin_px},
              {"illuminated", stack.illumination.has_value()},
              {"offsets", std::move(offs)}};
}

json plan_to_json(const Plan& plan, const FovStack& stack) {
  json w = json::array();
  for (Index k : plan.support) w.push_back({k, plan.weights(k)});
  const json manifest = stack_manifest(stack);
  return json{{"n_fovs", plan.weights.size()},
              {"n_prime", plan.n_prime()},
              {"weights", std::move(w)},
              {"pedestal", plan.pedestal},
              {"weight_sum", plan.weights.sum()},
              {"residual_norm", plan.residual_norm},
              {"noise_free_snr", snr_value(plan.noise_free_snr)},
              {"solver_stats", {{"iterations", plan.solver_stats.iterations},
                                {"kkt_residual", plan.solver_stats.kkt_residual}}},
              {"tol", plan.tol},
              {"stack_digest", digest(manifest)},
              {"offsets", manifest.at("offsets")}};
}

Plan plan_from_json(const json& j) {
  try {
    Plan p;
    const Index n = j.at("n_fovs").get<Index>();
    require(n > 0, ErrorKind::Format, "plan has no FOVs");
    p.weights = Eigen::VectorXd::Zero(n);
    for (const auto& e : j.at("weights")) {
      const Index k = e.at(0).get<Index>();
      const double w = e.at(1).get<double>();
      require(k >= 0 && k < n && w > 0.0, ErrorKind::Format, "plan weight entry out of range");
      p.weights(k) = w;
      p.support.push_back(k);
    }
    require(std::is_sorted(p.support.begin(), p.support.end()), ErrorKind::Format, "plan weights not sorted");
    p.pedestal = j.at("pedestal").get<double>();
    p.residual_norm = j.at("residual_norm").get<double>();
    p.noise_free_snr = snr_from_json(j.at("noise_free_snr"));
    p.solver_stats.iterations = j.at("solver_stats").at("iterations").get<long>();
    p.solver_stats.kkt_residual = j.at("solver_stats").at("kkt_residual").get<double>();
    p.tol = j.at("tol").get<double>();
    return p;
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, std::string("malformed plan: ") + e.what());
  }
}

json prediction_to_json(const NoisePrediction& p) {
  return json{{"source", noise_source_name(p.source)},
              {"noise_std", p.noise_std},
              {"predicted_snr", snr_value(p.predicted_snr)}};
}

json sim_to_json(const SimResult& r) {
  json runs = json::array();
  for (double v : r.per_run_snr) runs.push_back(snr_value(v));
  return json{{"status", r.exact ? "exact" : "simulated"},
              {"runs", r.per_run_snr.size()},
              {"snr_mean", snr_value(r.snr_mean)},
              {"snr_std", r.snr_std},
              {"per_run_snr", std::move(runs)},
              {"border_crop_px", r.border_crop_px},
              {"clamp_count", r.clamp_count}};
}

json route_to_json(const Route& r) {
  return json{{"order", r.order},
              {"path_length_px", r.path_length_px},
              {"nearest_neighbour_length_px", r.nearest_neighbour_length_px},
              {"scan_time_s", r.scan_time_s},
              {"exposure_time_s", r.exposure_time_s},
              {"total_time_s", r.scan_time_s + r.exposure_time_s},
              {"stage_speed_mm_s", r.stage_speed_mm_s},
              {"flux_photons_px_s", r.flux_photons_px_s}};
}

std::string route_polyline_csv(const Route& r) {
  std::string out = "step,fov_index,x_px,y_px\n";
  for (std::size_t i = 0; i < r.order.size(); ++i) {
    out += std::to_string(i) + "," + std::to_string(r.order[i]) + "," + format_number(r.points[i].x) + "," +
           format_number(r.points[i].y) + "\n";
  }
  return out;
}

json report_to_json(const PlanReport& r) {
  json sim = json::object();
  for (const auto& [name, s] : r.simulated) sim[name] = {{"mean", snr_value(s.mean)}, {"std", s.std}};
  json pred = json::object();
  for (const auto& [name, p] : r.predicted) pred[name] = prediction_to_json(p);
  json j{{"mask_label", r.mask_label},
         {"N", r.n_fovs},
         {"stride", r.stride},
         {"NNLS_SNR", snr_value(r.nnls_snr)},
         {"pedestal", r.pedestal},
         {"N_prime", r.n_prime},
         {"simulated", std::move(sim)},
         {"predicted", std::move(pred)}};
  j["t_s"] = r.t_s ? json(*r.t_s) : json(nullptr);
  j["t_e"] = r.t_e ? json(*r.t_e) : json(nullptr);
  return j;
}

json mask_stats_to_json(const MaskStats& s) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j{{"mean", s.mean},
         {"variance", s.variance},
         {"delroughness", s.delroughness},
         {"mode_freq", opt(s.mode_freq)},
         {"mean_freq", opt(s.mean_freq)},
         {"std_freq", opt(s.std_freq)},
         {"spectrum",
          {{"bin_centers", s.spectrum.bin_centers}, {"power", s.spectrum.power}, {"counts", s.spectrum.counts}}}};
  if (!s.error.empty()) j["error"] = s.error;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  out << text;
  require(static_cast<bool>(out), ErrorKind::Io, "failed writing " + path.string());
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, path.string() + ": " + e.what());
  }
}

void write_grid_raw(const Grid2D& g, const std::filesystem::path& path, json extra) {
  std::string raster(static_cast<std::size_t>(g.size()) * 4, '\0');
  for (Index k = 0; k < g.size(); ++k) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(g.values().data()[k]));
    for (int b = 0; b < 4; ++b)
      raster[4 * static_cast<std::size_t>(k) + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  write_text(path, raster);
  extra["rows"] = g.rows();
  extra["cols"] = g.cols();
  if (g.pitch_um()) extra["pitch_um"] = *g.pitch_um();
  write_json(sidecar_path(path), extra);
}

}  // namespace ghostplan
