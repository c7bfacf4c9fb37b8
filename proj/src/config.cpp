#include "ghostplan/config.hpp"

#include <fstream>
#include <regex>
#include <set>

namespace ghostplan {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so the rest
// can be rejected.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail(ErrorKind::Config, where_ + " must be a JSON object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return as<T>(key);
  }

  template <typename T>
  std::optional<T> opt(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return as<T>(key);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) fail(ErrorKind::Config, "unknown key '" + path(key) + "'");
  }

 private:
  template <typename T>
  T as(const std::string& key) {
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_unsigned()) return v.get<T>();
          if (v.get<long long>() < 0) throw std::invalid_argument("expected a non-negative integer");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw std::invalid_argument("expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("expected a string");
      }
      return v.get<T>();
    } catch (const std::exception& e) {
      fail(ErrorKind::Config, path(key) + ": " + e.what());
    }
  }

  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

MaskConfig parse_mask(const json& j, const std::string& where) {
  Section s(j, where);
  MaskConfig m;
  m.kind = s.get<std::string>("kind", m.kind);
  if (m.kind == "synth") {
    m.speckle.rows = s.get<Index>("rows", m.speckle.rows);
    m.speckle.cols = s.get<Index>("cols", m.speckle.cols);
    m.speckle.correlation_px = s.get<double>("correlation_px", m.speckle.correlation_px);
    m.speckle.t_min = s.get<double>("t_min", m.speckle.t_min);
    m.speckle.t_max = s.get<double>("t_max", m.speckle.t_max);
    m.speckle.seed = s.get<std::uint64_t>("seed", m.speckle.seed);
  } else if (m.kind == "ingest") {
    if (!s.has("path")) fail(ErrorKind::Config, s.path("path") + " is required for ingested masks");
    m.path = s.get<std::string>("path", "");
  } else {
    fail(ErrorKind::Config, s.path("kind") + " must be 'synth' or 'ingest'");
  }
  m.pitch_um = s.get<double>("pitch_um", m.pitch_um);
  m.label = s.get<std::string>("label", m.kind == "synth" ? "synthetic" : "");
  m.energy_exponent = s.opt<double>("energy_exponent");
  s.finish();
  if (!(m.pitch_um > 0.0)) fail(ErrorKind::Config, s.path("pitch_um") + " must be positive");
  return m;
}

FovShape parse_fov(const json& v, const std::string& where) {
  if (v.is_number_integer()) return {v.get<Index>(), v.get<Index>()};
  if (v.is_array() && v.size() == 2 && v[0].is_number_integer() && v[1].is_number_integer())
    return {v[0].get<Index>(), v[1].get<Index>()};
  fail(ErrorKind::Config, where + " must be an integer or [rows, cols]");
}

Stride stride_field(Section& s, const std::string& key, Stride fallback) {
  if (!s.has(key)) return fallback;
  const json& v = s.raw(key);
  if (v.is_number_integer()) return {v.get<Index>(), v.get<Index>()};
  if (!v.is_string()) fail(ErrorKind::Config, s.path(key) + " must be a string like \"12-by-8\"");
  try {
    return parse_stride(v.get<std::string>());
  } catch (const Error& e) {
    fail(ErrorKind::Config, s.path(key) + ": " + e.what());
  }
}

}  // namespace

Stride parse_stride(const std::string& s) {
  static const std::regex pat(R"(\s*(\d+)\s*(?:-?by-?|x)\s*(\d+)\s*|\s*(\d+)\s*)");
  std::smatch mt;
  require(std::regex_match(s, mt, pat), ErrorKind::Argument, "cannot parse stride '" + s + "'");
  Stride out;
  if (mt[3].matched) {
    out.x = out.y = std::stol(mt[3]);
  } else {
    out.x = std::stol(mt[1]);
    out.y = std::stol(mt[2]);
  }
  require(out.x > 0 && out.y > 0, ErrorKind::Argument, "stride must be positive");
  return out;
}

std::string format_stride(Stride s) { return std::to_string(s.x) + "-by-" + std::to_string(s.y); }

RunConfig parse_run_config(const json& j) {
  Section root(j, "config");
  RunConfig c;

  if (root.has("mask")) {
    const json& m = root.raw("mask");
    c.masks.clear();
    if (m.is_array()) {
      if (m.empty() || m.size() > 2) fail(ErrorKind::Config, "config.mask must list one or two masks");
      for (std::size_t i = 0; i < m.size(); ++i) c.masks.push_back(parse_mask(m[i], "config.mask[" + std::to_string(i) + "]"));
    } else {
      c.masks.push_back(parse_mask(m, "config.mask"));
    }
  }

  if (root.has("sampling")) {
    Section s(root.raw("sampling"), "config.sampling");
    auto& p = c.sampling;
    p.protocol = s.get<std::string>("protocol", p.protocol);
    if (s.has("fov")) p.fov = parse_fov(s.raw("fov"), s.path("fov"));
    p.count = s.get<Index>("count", p.count);
    p.stride = stride_field(s, "stride", p.stride);
    p.stride_b = stride_field(s, "stride_b", p.stride_b);
    p.seed = s.get<std::uint64_t>("seed", p.seed);
    p.margin_px = s.opt<Index>("margin_px");
    p.source_corner = s.opt<double>("source_corner");
    s.finish();
    static const std::set<std::string> known{"systematic",   "random", "unique_tiling", "consecutive_systematic",
                                             "consecutive_unique", "consecutive_random"};
    if (!known.count(p.protocol)) fail(ErrorKind::Config, "unknown sampling protocol '" + p.protocol + "'");
    if (p.fov.rows <= 0 || p.fov.cols <= 0) fail(ErrorKind::Config, "config.sampling.fov must be positive");
    if (p.count < 0) fail(ErrorKind::Config, "config.sampling.count must be non-negative");
  }

  if (root.has("target")) {
    Section s(root.raw("target"), "config.target");
    auto& t = c.target;
    t.pattern = s.get<std::string>("pattern", t.pattern);
    t.path = s.get<std::string>("path", t.path);
    t.params.side = s.opt<Index>("side");
    t.params.sigma_px = s.opt<double>("sigma_px");
    t.params.dots_per_axis = s.get<Index>("dots_per_axis", t.params.dots_per_axis);
    t.params.dot_spacing = s.get<Index>("dot_spacing", t.params.dot_spacing);
    t.params.on_fraction = s.get<double>("on_fraction", t.params.on_fraction);
    t.smooth_sigma_px = s.opt<double>("smooth_sigma_px");
    s.finish();
    if (t.path.empty()) {
      try {
        parse_pattern_kind(t.pattern);
      } catch (const Error& e) {
        fail(ErrorKind::Config, std::string("config.target.pattern: ") + e.what());
      }
    }
  }

  if (root.has("solver")) {
    Section s(root.raw("solver"), "config.solver");
    auto& v = c.solver;
    v.mode = s.get<std::string>("mode", v.mode);
    v.pedestal_target = s.get<double>("pedestal_target", v.pedestal_target);
    v.tol = s.get<double>("tol", v.tol);
    v.max_iter = s.get<long>("max_iter", v.max_iter);
    s.finish();
    if (v.mode != "demeaned" && v.mode != "enforced")
      fail(ErrorKind::Config, "config.solver.mode must be 'demeaned' or 'enforced'");
    if (v.mode == "enforced" && !(v.pedestal_target > 0.0))
      fail(ErrorKind::Config, "config.solver.pedestal_target must be positive in enforced mode");
    if (!(v.tol > 0.0)) fail(ErrorKind::Config, "config.solver.tol must be positive");
    if (v.max_iter < 0) fail(ErrorKind::Config, "config.solver.max_iter must be non-negative");
  }

  if (root.has("noise")) {
    Section s(root.raw("noise"), "config.noise");
    auto& n = c.noise;
    n.lambda_photons = s.get<double>("lambda_photons", n.lambda_photons);
    n.sigma_w = s.get<double>("sigma_w", n.sigma_w);
    n.sigma_ij = s.get<double>("sigma_ij", n.sigma_ij);
    n.runs = s.get<Index>("runs", n.runs);
    n.seed = s.get<std::uint64_t>("seed", n.seed);
    n.poisson = s.get<bool>("poisson", n.poisson);
    n.exposure = s.get<bool>("exposure", n.exposure);
    n.translational = s.get<bool>("translational", n.translational);
    c.border_crop_px = s.opt<Index>("border_crop_px");
    s.finish();
    try {
      n.validate();
    } catch (const Error& e) {
      fail(ErrorKind::Config, std::string("config.noise: ") + e.what());
    }
  }

  if (root.has("routing")) {
    Section s(root.raw("routing"), "config.routing");
    auto& r = c.routing;
    r.v_mm_s = s.get<double>("v_mm_s", r.v_mm_s);
    r.flux = s.get<double>("flux", r.flux);
    r.seed = s.get<std::uint64_t>("seed", r.seed);
    s.finish();
    if (!(r.v_mm_s > 0.0) || !(r.flux > 0.0))
      fail(ErrorKind::Config, "config.routing.v_mm_s and flux must be positive");
  }

  if (root.has("output")) {
    Section s(root.raw("output"), "config.output");
    c.output_dir = s.get<std::string>("directory", c.output_dir);
    s.finish();
  }
  root.finish();

  const bool two = c.sampling.protocol.rfind("consecutive_", 0) == 0;
  if (two && c.masks.size() != 2) fail(ErrorKind::Config, "consecutive protocols need exactly two masks");
  if (!two && c.masks.size() != 1) fail(ErrorKind::Config, "single-mask protocols need exactly one mask");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, "config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(j);
}

namespace {

json mask_json(const MaskConfig& m) {
  json j{{"kind", m.kind}, {"pitch_um", m.pitch_um}, {"label", m.label}};
  if (m.kind == "synth") {
    j["rows"] = m.speckle.rows;
    j["cols"] = m.speckle.cols;
    j["correlation_px"] = m.speckle.correlation_px;
    j["t_min"] = m.speckle.t_min;
    j["t_max"] = m.speckle.t_max;
    j["seed"] = m.speckle.seed;
  } else {
    j["path"] = m.path;
  }
  if (m.energy_exponent) j["energy_exponent"] = *m.energy_exponent;
  return j;
}

}  // namespace

json to_json(const RunConfig& c) {
  json masks = json::array();
  for (const auto& m : c.masks) masks.push_back(mask_json(m));
  json sampling{{"protocol", c.sampling.protocol},
                {"fov", {c.sampling.fov.rows, c.sampling.fov.cols}},
                {"count", c.sampling.count},
                {"stride", format_stride(c.sampling.stride)},
                {"stride_b", format_stride(c.sampling.stride_b)},
                {"seed", c.sampling.seed}};
  if (c.sampling.margin_px) sampling["margin_px"] = *c.sampling.margin_px;
  if (c.sampling.source_corner) sampling["source_corner"] = *c.sampling.source_corner;
  json target{{"pattern", c.target.pattern},
              {"dots_per_axis", c.target.params.dots_per_axis},
              {"dot_spacing", c.target.params.dot_spacing},
              {"on_fraction", c.target.params.on_fraction}};
  if (!c.target.path.empty()) target["path"] = c.target.path;
  if (c.target.params.side) target["side"] = *c.target.params.side;
  if (c.target.params.sigma_px) target["sigma_px"] = *c.target.params.sigma_px;
  if (c.target.smooth_sigma_px) target["smooth_sigma_px"] = *c.target.smooth_sigma_px;
  json solver{{"mode", c.solver.mode}, {"tol", c.solver.tol}, {"max_iter", c.solver.max_iter}};
  if (c.solver.mode == "enforced") solver["pedestal_target"] = c.solver.pedestal_target;
  json noise{{"lambda_photons", c.noise.lambda_photons}, {"sigma_w", c.noise.sigma_w},
             {"sigma_ij", c.noise.sigma_ij},             {"runs", c.noise.runs},
             {"seed", c.noise.seed},                     {"poisson", c.noise.poisson},
             {"exposure", c.noise.exposure},             {"translational", c.noise.translational}};
  if (c.border_crop_px) noise["border_crop_px"] = *c.border_crop_px;
  return json{{"mask", masks},
              {"sampling", sampling},
              {"target", target},
              {"solver", solver},
              {"noise", noise},
              {"routing", {{"v_mm_s", c.routing.v_mm_s}, {"flux", c.routing.flux}, {"seed", c.routing.seed}}},
              {"output", {{"directory", c.output_dir}}}};
}

std::vector<MasterMask> build_masters(const RunConfig& c) {
  std::vector<MasterMask> out;
  for (const auto& m : c.masks) {
    MasterMask mm = m.kind == "synth" ? synthesize_speckle(m.speckle, m.pitch_um, m.label) : ingest_mask(m.path);
    if (m.kind == "ingest") {
      if (!m.label.empty()) mm.label = m.label;
    }
    if (m.energy_exponent) mm = energy_correct(mm, *m.energy_exponent);
    out.push_back(std::move(mm));
  }
  return out;
}

Index effective_margin(const RunConfig& c) {
  if (c.sampling.margin_px) return *c.sampling.margin_px;
  return c.noise.translational && c.noise.sigma_ij > 0.0 ? required_margin(c.noise.sigma_ij) : 0;
}

FovStack build_stack(const RunConfig& c, const std::vector<MasterMask>& masters) {
  const auto& s = c.sampling;
  const Index count = s.count > 0 ? s.count : 5 * s.fov.rows * s.fov.cols;
  const Index margin = effective_margin(c);
  FovStack st;
  if (s.protocol == "systematic") {
    st = sample_systematic(masters.at(0), s.fov, s.stride, count, margin);
  } else if (s.protocol == "random") {
    st = sample_random(masters.at(0), s.fov, count, s.seed, margin);
  } else if (s.protocol == "unique_tiling") {
    st = sample_unique_tiling(masters.at(0), s.fov, margin);
  } else if (s.protocol == "consecutive_systematic") {
    st = sample_consecutive(masters.at(0), masters.at(1), s.fov, ConsecutiveSystematic{s.stride, s.stride_b}, count,
                            margin);
  } else if (s.protocol == "consecutive_unique") {
    st = sample_consecutive(masters.at(0), masters.at(1), s.fov, ConsecutiveUnique{s.stride}, count, margin);
  } else {
    st = sample_consecutive(masters.at(0), masters.at(1), s.fov, ConsecutiveRandom{s.seed}, count, margin);
  }
  if (s.source_corner) st = with_source_profile(std::move(st), *s.source_corner);
  return st;
}

TargetImage build_target(const RunConfig& c) {
  const auto& t = c.target;
  TargetImage img;
  if (!t.path.empty()) {
    img = normalize(ingest_mask(t.path).grid);
  } else {
    img = make_pattern(parse_pattern_kind(t.pattern), c.sampling.fov.rows, c.sampling.fov.cols, t.params);
  }
  if (t.smooth_sigma_px) img = gaussian_smooth(img, *t.smooth_sigma_px);
  require(img.rows() == c.sampling.fov.rows && img.cols() == c.sampling.fov.cols, ErrorKind::Argument,
          "target image size does not match the FOV");
  return img;
}

Plan build_plan(const RunConfig& c, const FovStack& stack, const TargetImage& target) {
  NnlsOptions o;
  o.tol = c.solver.tol;
  o.max_iter = c.solver.max_iter;
  if (c.solver.mode == "enforced") return solve_enforced_pedestal(stack, target, c.solver.pedestal_target, o);
  return solve_nnls(build_design_matrix(stack, DesignMode::DeMeaned), target, o);
}

}  // namespace ghostplan
