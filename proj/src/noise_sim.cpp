#include "ghostplan/noise_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <thread>

#include "ghostplan/analytics.hpp"
#include "ghostplan/rng.hpp"

namespace ghostplan {

void NoiseConfig::validate() const {
  require(std::isfinite(lambda_photons) && lambda_photons > 0.0, ErrorKind::Argument,
          "lambda_photons must be positive");
  require(std::isfinite(sigma_w) && sigma_w >= 0.0, ErrorKind::Argument, "sigma_w must be non-negative");
  require(std::isfinite(sigma_ij) && sigma_ij >= 0.0, ErrorKind::Argument, "sigma_ij must be non-negative");
  require(runs >= 1, ErrorKind::Argument, "runs must be at least 1");
}

namespace {

using Eigen::VectorXd;

void check_plan(const FovStack& stack, const Plan& plan) {
  require(plan.weights.size() == stack.count(), ErrorKind::Argument, "plan does not match the stack");
}

double draw_exposure(Engine& eng, double w, double sigma_w, long* clamp_count) {
  if (sigma_w == 0.0) return w;
  const double v = w + sigma_w * std::normal_distribution<double>(0.0, 1.0)(eng);
  if (v < 0.0) {
    if (clamp_count) ++*clamp_count;
    return 0.0;
  }
  return v;
}

// Normal(0, sigma^2) re-sampled until it falls within 3 sigma.
double draw_shift(Engine& eng, double sigma) {
  std::normal_distribution<double> nd(0.0, 1.0);
  for (;;) {
    const double z = nd(eng);
    if (std::abs(z) <= 3.0) return sigma * z;
  }
}

class Repositioner {
 public:
  Repositioner(std::span<const MasterMask> masters, const FovStack& stack, double sigma)
      : masters_(masters), stack_(stack), sigma_(sigma) {
    if (sigma_ == 0.0) return;
    require(stack.margin_px >= required_margin(sigma), ErrorKind::Precondition,
            "stack margin " + std::to_string(stack.margin_px) + " px is below the " +
                std::to_string(required_margin(sigma)) + " px needed for positional noise");
    require(!masters.empty() && (!stack.consecutive() || masters.size() >= 2), ErrorKind::Argument,
            "positional noise needs the master mask(s) of the stack");
  }

  // FOV k after a random transverse displacement of each mask.
  VectorXd operator()(Engine& eng, Index k) const {
    if (sigma_ == 0.0) return stack_.pixels.col(k);
    const auto& rec = stack_.offsets[static_cast<std::size_t>(k)];
    RowMajorArray<double> v = cut(masters_[0], rec.a, eng);
    if (rec.b) v *= cut(masters_[1], *rec.b, eng);
    if (stack_.illumination) v *= stack_.illumination->values();
    return Eigen::Map<const VectorXd>(v.data(), v.size());
  }

 private:
  RowMajorArray<double> cut(const MasterMask& m, Offset o, Engine& eng) const {
    const double dy = draw_shift(eng, sigma_);
    const double dx = draw_shift(eng, sigma_);
    return shifted_window(m.grid, static_cast<double>(o.dy) + dy, static_cast<double>(o.dx) + dx,
                          stack_.shape.rows, stack_.shape.cols);
  }

  std::span<const MasterMask> masters_;
  const FovStack& stack_;
  double sigma_;
};

void add_poisson(Engine& eng, const VectorXd& mean_counts, VectorXd& acc) {
  for (Index i = 0; i < mean_counts.size(); ++i) {
    const double mu = mean_counts(i);
    if (mu > 0.0) acc(i) += static_cast<double>(std::poisson_distribution<long long>(mu)(eng));
  }
}

Grid2D to_grid(const FovStack& stack, const VectorXd& flat) {
  return Grid2D::from_flat(flat, stack.shape.rows, stack.shape.cols);
}

}  // namespace

Grid2D simulate_poisson(const FovStack& stack, const Plan& plan, const NoiseConfig& cfg, std::uint64_t run_seed) {
  check_plan(stack, plan);
  require(cfg.lambda_photons > 0.0, ErrorKind::Argument, "lambda_photons must be positive");
  auto eng = make_stream(run_seed, StreamId::Poisson);
  VectorXd counts = VectorXd::Zero(stack.pixels.rows());
  for (Index k : plan.support)
    add_poisson(eng, (cfg.lambda_photons * plan.weights(k)) * stack.pixels.col(k), counts);
  return to_grid(stack, counts / cfg.lambda_photons);
}

Grid2D simulate_exposure(const FovStack& stack, const Plan& plan, const NoiseConfig& cfg, std::uint64_t run_seed,
                         long* clamp_count) {
  check_plan(stack, plan);
  require(cfg.sigma_w >= 0.0, ErrorKind::Argument, "sigma_w must be non-negative");
  auto eng = make_stream(run_seed, StreamId::Exposure);
  VectorXd p = VectorXd::Zero(stack.pixels.rows());
  for (Index k : plan.support) p.noalias() += draw_exposure(eng, plan.weights(k), cfg.sigma_w, clamp_count) * stack.pixels.col(k);
  return to_grid(stack, p);
}

Grid2D simulate_translational(std::span<const MasterMask> masters, const FovStack& stack, const Plan& plan,
                              const NoiseConfig& cfg, std::uint64_t run_seed) {
  check_plan(stack, plan);
  require(cfg.sigma_ij >= 0.0, ErrorKind::Argument, "sigma_ij must be non-negative");
  const Repositioner move(masters, stack, cfg.sigma_ij);
  auto eng = make_stream(run_seed, StreamId::Translation);
  VectorXd p = VectorXd::Zero(stack.pixels.rows());
  for (Index k : plan.support) p.noalias() += plan.weights(k) * move(eng, k);
  return to_grid(stack, p);
}

Grid2D simulate_all(std::span<const MasterMask> masters, const FovStack& stack, const Plan& plan,
                    const NoiseConfig& cfg, std::uint64_t run_seed, long* clamp_count) {
  check_plan(stack, plan);
  if (cfg.poisson) require(cfg.lambda_photons > 0.0, ErrorKind::Argument, "lambda_photons must be positive");
  const Repositioner move(masters, stack, cfg.translational ? cfg.sigma_ij : 0.0);
  auto eng_w = make_stream(run_seed, StreamId::Exposure);
  auto eng_t = make_stream(run_seed, StreamId::Translation);
  auto eng_p = make_stream(run_seed, StreamId::Poisson);
  VectorXd acc = VectorXd::Zero(stack.pixels.rows());
  for (Index k : plan.support) {
    const double w = cfg.exposure ? draw_exposure(eng_w, plan.weights(k), cfg.sigma_w, clamp_count) : plan.weights(k);
    const VectorXd r = move(eng_t, k);
    if (cfg.poisson) {
      add_poisson(eng_p, (cfg.lambda_photons * w) * r, acc);
    } else {
      acc.noalias() += w * r;
    }
  }
  if (cfg.poisson) acc /= cfg.lambda_photons;
  return to_grid(stack, acc);
}

std::pair<double, double> mean_and_std(const std::vector<double>& v) {
  require(!v.empty(), ErrorKind::Argument, "no samples");
  if (std::all_of(v.begin(), v.end(), [](double x) { return std::isinf(x) && x > 0; }))
    return {std::numeric_limits<double>::infinity(), 0.0};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

namespace {

unsigned worker_count(Index runs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GHOSTPLAN_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::min<Index>(n, runs));
}

}  // namespace

SimResult monte_carlo(std::span<const MasterMask> masters, const FovStack& stack, const Plan& plan,
                      const TargetImage& target, const NoiseConfig& cfg, std::optional<Index> border_crop_px) {
  cfg.validate();
  check_plan(stack, plan);
  SimResult out;
  out.exact = !cfg.any();
  out.border_crop_px = border_crop_px.value_or(cfg.translational ? 1 : 0);
  out.per_run_snr.assign(static_cast<std::size_t>(cfg.runs), 0.0);
  std::vector<long> clamps(static_cast<std::size_t>(cfg.runs), 0);
  std::vector<std::optional<Grid2D>> first(1);

  auto run = [&](Index r) {
    long c = 0;
    Grid2D p = simulate_all(masters, stack, plan, cfg, derive_run_seed(cfg.seed, static_cast<std::uint64_t>(r)), &c);
    out.per_run_snr[static_cast<std::size_t>(r)] = snr(target, p, out.border_crop_px);
    clamps[static_cast<std::size_t>(r)] = c;
    if (r == 0) first[0] = std::move(p);
  };

  // Runs are strided over workers; every result lands in its own slot, so
  // the outcome does not depend on the thread count.
  const unsigned workers = worker_count(cfg.runs);
  if (workers <= 1) {
    for (Index r = 0; r < cfg.runs; ++r) run(r);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (Index r = t; r < cfg.runs; r += workers) run(r);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  out.projection = std::move(*first[0]);
  std::tie(out.snr_mean, out.snr_std) = mean_and_std(out.per_run_snr);
  for (long c : clamps) out.clamp_count += c;
  return out;
}

}  // namespace ghostplan
