// ghostplan command-line driver: mask synthesis, planning, noise simulation,
// predictions, routing and reporting, all driven by one JSON config.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

#include "ghostplan/serialize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ghostplan;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<Index> runs;
  bool quiet = false;
  std::string plan;
  std::string mask;
  int bins = 64;
};

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Io:
    case ErrorKind::Format: return 3;
    case ErrorKind::Capacity:
    case ErrorKind::Divisibility: return 4;
    case ErrorKind::Convergence: return 5;
    case ErrorKind::Argument:
    case ErrorKind::Domain:
    case ErrorKind::Range:
    case ErrorKind::Precondition:
    case ErrorKind::Undefined: return 6;
  }
  return 1;
}

void report_error(const std::string& kind, const std::string& message, const json& extra = json::object()) {
  json j{{"error", kind}, {"message", message}};
  j.update(extra);
  std::cerr << j.dump() << "\n";
}

class Context {
 public:
  explicit Context(const Options& o) : opts_(o) {
    cfg_ = load_run_config(o.config);
    if (o.seed) {
      for (auto& m : cfg_.masks) m.speckle.seed = *o.seed;
      cfg_.sampling.seed = *o.seed;
      cfg_.noise.seed = *o.seed;
      cfg_.routing.seed = *o.seed;
    }
    if (o.runs) {
      require(*o.runs >= 1, ErrorKind::Argument, "--runs must be at least 1");
      cfg_.noise.runs = *o.runs;
    }
    out_ = o.out.empty() ? fs::path(cfg_.output_dir) : fs::path(o.out);
    fs::create_directories(out_);
    config_json_ = to_json(cfg_);
    config_digest_ = digest(config_json_);
  }

  const RunConfig& cfg() const { return cfg_; }
  const fs::path& out() const { return out_; }

  void log(const std::string& msg) const {
    if (!opts_.quiet) std::cerr << "ghostplan: " << msg << "\n";
  }

  json header() const { return json{{"version", kToolVersion}, {"config_digest", config_digest_}}; }

  fs::path plan_path() const { return opts_.plan.empty() ? out_ / "plan.json" : fs::path(opts_.plan); }

  const std::vector<MasterMask>& masters() {
    if (!masters_) {
      log("building master mask(s)");
      masters_ = build_masters(cfg_);
    }
    return *masters_;
  }

  const FovStack& stack() {
    if (!stack_) {
      log("sampling FOVs");
      stack_ = build_stack(cfg_, masters());
    }
    return *stack_;
  }

  const TargetImage& target() {
    if (!target_) target_ = build_target(cfg_);
    return *target_;
  }

  // Plan file matching the current config's stack.
  std::pair<Plan, json> load_plan() {
    const json j = read_json(plan_path());
    const Plan p = plan_from_json(j.at("plan"));
    require(p.weights.size() == stack().count() &&
                j.at("plan").at("stack_digest").get<std::string>() == digest(stack_manifest(stack())),
            ErrorKind::Precondition, "plan " + plan_path().filename().string() + " was made from a different stack");
    return {p, j};
  }

  const Options& opts() const { return opts_; }
  const json& config_json() const { return config_json_; }

 private:
  Options opts_;
  RunConfig cfg_;
  fs::path out_;
  json config_json_;
  std::string config_digest_;
  std::optional<std::vector<MasterMask>> masters_;
  std::optional<FovStack> stack_;
  std::optional<TargetImage> target_;
};

void cmd_synth_mask(Context& ctx) {
  json j = ctx.header();
  j["masks"] = json::array();
  const auto& masters = ctx.masters();
  for (std::size_t i = 0; i < masters.size(); ++i) {
    const std::string stem = masters.size() == 1 ? "mask" : "mask_" + std::to_string(i);
    write_mask_pgm(masters[i], ctx.out() / (stem + ".pgm"));
    write_mask_raw(masters[i], ctx.out() / (stem + "_f32.raw"));
    j["masks"].push_back({{"label", masters[i].label},
                          {"pgm", stem + ".pgm"},
                          {"raw", stem + "_f32.raw"},
                          {"rows", masters[i].grid.rows()},
                          {"cols", masters[i].grid.cols()},
                          {"pitch_um", masters[i].pitch_um},
                          {"mean", grid_mean(masters[i].grid)},
                          {"variance", grid_variance(masters[i].grid)}});
  }
  write_json(ctx.out() / "synth_mask.json", j);
}

void cmd_mask_stats(Context& ctx) {
  std::vector<MasterMask> masks;
  if (!ctx.opts().mask.empty()) {
    masks.push_back(ingest_mask(ctx.opts().mask));
  } else {
    masks = ctx.masters();
  }
  json j = ctx.header();
  j["bins"] = ctx.opts().bins;
  j["masks"] = json::array();
  std::string csv = "label,mean,variance,delroughness,mode_freq,mean_freq,std_freq\n";
  for (const auto& m : masks) {
    const MaskStats s = mask_stats(m, ctx.opts().bins);
    json e = mask_stats_to_json(s);
    e["label"] = m.label;
    j["masks"].push_back(std::move(e));
    csv += m.label + "," + format_number(s.mean) + "," + format_number(s.variance) + "," +
           format_number(s.delroughness) + "," + format_number(s.mode_freq) + "," + format_number(s.mean_freq) + "," +
           format_number(s.std_freq) + "\n";
  }
  write_json(ctx.out() / "mask_stats.json", j);
  write_text(ctx.out() / "mask_stats.csv", csv);
}

void cmd_make_target(Context& ctx) {
  const TargetImage& t = ctx.target();
  const double lo = t.grid.values().minCoeff();
  json side = ctx.header();
  side["kind"] = "target";
  side["pattern"] = ctx.cfg().target.path.empty() ? ctx.cfg().target.pattern : "file";
  side["norm_sq"] = t.norm_sq;
  // Stored with unit contrast on [0, 1]; value = stored + value_offset.
  side["value_offset"] = lo;
  write_grid_raw(Grid2D(t.grid.values() - lo), ctx.out() / "target.raw", side);
}

void cmd_plan(Context& ctx) {
  const FovStack& stack = ctx.stack();
  ctx.log("solving for " + std::to_string(stack.count()) + " weights");
  json j = ctx.header();
  j["config"] = ctx.config_json();
  try {
    const Plan p = build_plan(ctx.cfg(), stack, ctx.target());
    j["converged"] = true;
    j["plan"] = plan_to_json(p, stack);
    write_json(ctx.out() / "plan.json", j);
    write_grid_raw(noise_free_projection(stack, p), ctx.out() / "projection.raw", ctx.header());
    ctx.log("N' = " + std::to_string(p.n_prime()) + ", pedestal = " + format_number(p.pedestal));
  } catch (const ConvergenceError& e) {
    j["converged"] = false;
    j["plan"] = plan_to_json(e.best(), stack);
    write_json(ctx.out() / "plan.json", j);
    throw;
  }
}

std::map<std::string, SimResult> run_simulations(Context& ctx, const Plan& plan) {
  const auto& cfg = ctx.cfg();
  std::map<std::string, SimResult> out;
  const std::vector<std::pair<std::string, bool NoiseConfig::*>> sources{
      {"poisson", &NoiseConfig::poisson}, {"exposure", &NoiseConfig::exposure},
      {"translational", &NoiseConfig::translational}};
  for (const auto& [name, flag] : sources) {
    if (!(cfg.noise.*flag)) continue;
    NoiseConfig one = cfg.noise;
    one.poisson = one.exposure = one.translational = false;
    one.*flag = true;
    ctx.log("simulating " + name + " noise, " + std::to_string(one.runs) + " runs");
    out[name] = monte_carlo(ctx.masters(), ctx.stack(), plan, ctx.target(), one, cfg.border_crop_px);
  }
  ctx.log("simulating combined noise");
  out["all"] = monte_carlo(ctx.masters(), ctx.stack(), plan, ctx.target(), cfg.noise, cfg.border_crop_px);
  return out;
}

void cmd_simulate(Context& ctx) {
  const auto [plan, plan_json] = ctx.load_plan();
  const auto sims = run_simulations(ctx, plan);
  json j = ctx.header();
  j["plan_digest"] = digest(plan_json.at("plan"));
  j["noise"] = ctx.config_json().at("noise");
  j["sources"] = json::object();
  for (const auto& [name, r] : sims) j["sources"][name] = sim_to_json(r);
  write_json(ctx.out() / "sim.json", j);
  write_grid_raw(sims.at("all").projection, ctx.out() / "sim_projection.raw", ctx.header());
}

void cmd_predict(Context& ctx) {
  const auto [plan, plan_json] = ctx.load_plan();
  const auto& cfg = ctx.cfg();
  json j = ctx.header();
  j["plan_digest"] = digest(plan_json.at("plan"));
  j["norm_sq"] = ctx.target().norm_sq;
  j["n_prime"] = plan.n_prime();
  j["pedestal"] = plan.pedestal;
  json p = json::object();
  if (plan.pedestal > 0.0) p["poisson"] = prediction_to_json(predict_poisson(ctx.target(), plan, cfg.noise));
  if (plan.n_prime() > 0) {
    p["exposure"] = prediction_to_json(predict_exposure(ctx.target(), ctx.stack(), plan, cfg.noise));
    p["translational"] =
        prediction_to_json(predict_translational(ctx.target(), ctx.masters(), ctx.stack(), plan, cfg.noise));
    j["variance_support_pooled"] = support_pooled_variance(ctx.stack(), plan);
  }
  j["variance_master"] = grid_variance(ctx.masters().front().grid);
  j["predictions"] = std::move(p);
  write_json(ctx.out() / "predictions.json", j);
}

void cmd_route(Context& ctx) {
  const auto [plan, plan_json] = ctx.load_plan();
  const auto& cfg = ctx.cfg();
  ctx.log("routing " + std::to_string(plan.n_prime()) + " offsets");
  const Route r = route_plan(ctx.stack(), plan, ctx.masters().front().pitch_um, cfg.routing.v_mm_s, cfg.routing.flux,
                             cfg.noise.lambda_photons, cfg.routing.seed);
  json j = ctx.header();
  j["plan_digest"] = digest(plan_json.at("plan"));
  j["route"] = route_to_json(r);
  write_json(ctx.out() / "route.json", j);
  write_text(ctx.out() / "route.csv", route_polyline_csv(r));
}

void cmd_report(Context& ctx) {
  const auto [plan, plan_json] = ctx.load_plan();
  const std::string plan_digest = digest(plan_json.at("plan"));
  std::map<std::string, SimResult> sims;
  const fs::path sim_path = ctx.out() / "sim.json";
  if (fs::exists(sim_path)) {
    const json s = read_json(sim_path);
    require(s.at("plan_digest").get<std::string>() == plan_digest, ErrorKind::Precondition,
            "sim.json belongs to a different plan");
    for (const auto& [name, v] : s.at("sources").items()) {
      SimResult r;
      r.snr_mean = snr_from_json(v.at("snr_mean"));
      r.snr_std = v.at("snr_std").get<double>();
      sims[name] = std::move(r);
    }
  }
  PlanReport rep = report_plan(ctx.target(), ctx.masters(), ctx.stack(), plan, ctx.cfg().noise, sims);
  const fs::path route_path = ctx.out() / "route.json";
  if (fs::exists(route_path)) {
    const json r = read_json(route_path);
    require(r.at("plan_digest").get<std::string>() == plan_digest, ErrorKind::Precondition,
            "route.json belongs to a different plan");
    rep.t_s = r.at("route").at("scan_time_s").get<double>();
    rep.t_e = r.at("route").at("exposure_time_s").get<double>();
  }
  json j = ctx.header();
  j["plan_digest"] = plan_digest;
  j["report"] = report_to_json(rep);
  write_json(ctx.out() / "report.json", j);
  write_text(ctx.out() / "report.csv", report_csv_header() + "\n" + report_csv_row(rep) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ghostplan: plan and simulate ghost projection with random masks"};
  app.require_subcommand(1, 1);
  Options opts;

  const std::map<std::string, void (*)(Context&)> commands{
      {"synth-mask", cmd_synth_mask}, {"mask-stats", cmd_mask_stats}, {"make-target", cmd_make_target},
      {"plan", cmd_plan},             {"simulate", cmd_simulate},     {"predict", cmd_predict},
      {"route", cmd_route},           {"report", cmd_report}};
  const std::map<std::string, std::string> help{
      {"synth-mask", "write the configured master mask(s) as PGM and raw float"},
      {"mask-stats", "mean, variance, delroughness and radial spectrum of a mask"},
      {"make-target", "write the normalised target image"},
      {"plan", "solve for exposure weights"},
      {"simulate", "Monte Carlo SNR for each enabled noise source and their combination"},
      {"predict", "closed-form noise predictions for a plan"},
      {"route", "order the exposed offsets into a scan path and estimate durations"},
      {"report", "one summary row from plan, simulation and route outputs"}};

  for (const auto& [name, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", opts.config, "run configuration (JSON)")->required();
    sub->add_option("--out", opts.out, "output directory (overrides output.directory)");
    sub->add_option("--seed", opts.seed, "replace every seed in the config");
    sub->add_option("--runs", opts.runs, "Monte Carlo runs (overrides noise.runs)");
    sub->add_flag("--quiet", opts.quiet, "no progress messages");
    sub->add_option("--plan", opts.plan, "plan file (default <out>/plan.json)");
    if (name == "mask-stats") {
      sub->add_option("--mask", opts.mask, "mask file to characterise instead of the configured one");
      sub->add_option("--bins", opts.bins, "radial spectrum bins")->check(CLI::PositiveNumber);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("argument", e.what());
    return 6;
  }

  try {
    for (const auto& [name, fn] : commands) {
      if (app.got_subcommand(name)) {
        Context ctx(opts);
        fn(ctx);
      }
    }
  } catch (const ConvergenceError& e) {
    report_error(to_string(e.kind()), e.what(), {{"best_n_prime", e.best().n_prime()}});
    return exit_code(e.kind());
  } catch (const CapacityError& e) {
    report_error(to_string(e.kind()), e.what(), {{"max_count", e.max_count()}});
    return exit_code(e.kind());
  } catch (const Error& e) {
    report_error(to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    report_error("io", e.what());
    return 3;
  } catch (const json::exception& e) {
    report_error("format", e.what());
    return 3;
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return 1;
  }
  return 0;
}
