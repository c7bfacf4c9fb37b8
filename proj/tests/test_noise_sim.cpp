#include <gtest/gtest.h>

#include <array>
#include <cstdlib>
#include <numbers>
#include <random>
#include <set>

#include "ghostplan/noise_sim.hpp"
#include "ghostplan/rng.hpp"
#include "oracles.hpp"

using namespace ghostplan;

namespace {

MasterMask constant(Index r, Index c, double v) { return MasterMask{Grid2D(r, c, v), 1.0, "const", SyntheticOrigin{}}; }

Plan plan_from(const Eigen::VectorXd& w) {
  Plan p;
  p.weights = w;
  for (Index k = 0; k < w.size(); ++k)
    if (w(k) > 0) p.support.push_back(k);
  return p;
}

NoiseConfig only(bool poisson, bool exposure, bool translational) {
  NoiseConfig c;
  c.poisson = poisson;
  c.exposure = exposure;
  c.translational = translational;
  return c;
}

struct Fixture {
  MasterMask master;
  FovStack stack;
  Plan plan;
};

// Small speckle stack with a handful of positive weights and room for
// positional noise.
Fixture speckle_fixture(Index margin = 3) {
  Fixture f{synthesize_speckle({40, 40, 1.0, 0.05, 0.95, 17}), {}, {}};
  f.stack = sample_random(f.master, {8, 8}, 12, 4, margin);
  Eigen::VectorXd w(12);
  w << 3, 0, 1.5, 7, 0, 0.5, 2, 0, 4, 1, 0, 6;
  f.plan = plan_from(w);
  return f;
}

Grid2D ramp_master_grid(Index n, double a, double b) {
  RowMajorArray<double> g(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) g(i, j) = 0.05 + a * double(i) + b * double(j);
  return Grid2D(g);
}

}  // namespace

TEST(Poisson, HugeLambdaApproachesNoiseFree) {
  auto f = speckle_fixture();
  auto cfg = only(true, false, false);
  cfg.lambda_photons = 1e12;
  const auto clean = noise_free_projection(f.stack, f.plan);
  const auto noisy = simulate_poisson(f.stack, f.plan, cfg, 5);
  EXPECT_LT(((noisy.values() - clean.values()) / clean.values()).abs().maxCoeff(), 1e-5);
}

TEST(Poisson, SinglePixelMean) {
  const auto m = constant(1, 1, 1.0);
  const auto st = sample_systematic(m, {1, 1}, {1, 1}, 1);
  const auto p = plan_from(Eigen::VectorXd::Ones(1));
  auto cfg = only(true, false, false);
  cfg.lambda_photons = 4.0;
  std::vector<double> counts;
  for (std::uint64_t s = 0; s < 100000; ++s) counts.push_back(simulate_poisson(st, p, cfg, s)(0, 0) * 4.0);
  const auto [mean, var] = oracle::moments(counts);
  EXPECT_NEAR(mean, 4.0, 0.04);
  EXPECT_NEAR(var, 4.0, 3 * 4.0 * std::sqrt(2.0 / 1e5 + 1.0 / (4.0 * 1e5)));
}

TEST(Poisson, PerMaskSumMatchesSingleDraw) {
  // Three masks at one pixel: summed per-mask draws vs one Poisson of the total.
  RowMajorArray<double> g(1, 3);
  g << 0.2, 0.5, 0.9;
  const MasterMask m{Grid2D(g), 1.0, "m", SyntheticOrigin{}};
  const auto st = sample_systematic(m, {1, 1}, {1, 1}, 3);
  const auto p = plan_from((Eigen::VectorXd(3) << 2.0, 1.0, 3.0).finished());
  auto cfg = only(true, false, false);
  cfg.lambda_photons = 3.0;
  const double total = 3.0 * (2.0 * 0.2 + 1.0 * 0.5 + 3.0 * 0.9);
  std::vector<double> summed, single;
  std::mt19937_64 eng(99);
  std::poisson_distribution<long long> pois(total);
  for (std::uint64_t s = 0; s < 100000; ++s) {
    summed.push_back(simulate_poisson(st, p, cfg, s)(0, 0) * cfg.lambda_photons);
    single.push_back(double(pois(eng)));
  }
  const auto chk = oracle::compare_samples(summed, single);
  EXPECT_TRUE(chk.ok()) << chk.mean_diff << " " << chk.mean_se << " " << chk.var_diff << " " << chk.var_se;
}

TEST(Poisson, PixelVarianceIsMeanOverLambda) {
  auto f = speckle_fixture();
  auto cfg = only(true, false, false);
  cfg.lambda_photons = 50.0;
  const int runs = 10000;
  const std::array<std::pair<Index, Index>, 3> px{{{0, 0}, {3, 5}, {7, 7}}};
  std::array<std::vector<double>, 3> vals;
  for (int r = 0; r < runs; ++r) {
    const auto g = simulate_poisson(f.stack, f.plan, cfg, std::uint64_t(r));
    for (std::size_t q = 0; q < 3; ++q) vals[q].push_back(g(px[q].first, px[q].second));
  }
  const auto clean = noise_free_projection(f.stack, f.plan);
  for (std::size_t q = 0; q < 3; ++q) {
    const auto [mean, var] = oracle::moments(vals[q]);
    const double mu = clean(px[q].first, px[q].second);
    const double expected = mu / cfg.lambda_photons;
    EXPECT_NEAR(mean, mu, 3 * std::sqrt(expected / runs));
    EXPECT_NEAR(var, expected, 3 * expected * std::sqrt(2.0 / runs) + 1e-12);
  }
}

TEST(Exposure, ZeroSigmaIsExact) {
  auto f = speckle_fixture();
  auto cfg = only(false, true, false);
  cfg.sigma_w = 0.0;
  EXPECT_TRUE((simulate_exposure(f.stack, f.plan, cfg, 3).values() ==
               noise_free_projection(f.stack, f.plan).values())
                  .all());
}

TEST(Exposure, ConstantMaskNormalPixel) {
  const auto m = constant(1, 1, 1.0);
  const auto st = sample_systematic(m, {1, 1}, {1, 1}, 1);
  const auto p = plan_from(Eigen::VectorXd::Constant(1, 5.0));
  auto cfg = only(false, true, false);
  cfg.sigma_w = 0.5;
  std::vector<double> v;
  long clamps = 0;
  for (std::uint64_t s = 0; s < 100000; ++s) v.push_back(simulate_exposure(st, p, cfg, s, &clamps)(0, 0));
  const auto [mean, var] = oracle::moments(v);
  EXPECT_NEAR(mean, 5.0, 3 * 0.5 / std::sqrt(1e5));
  EXPECT_NEAR(std::sqrt(var), 0.5, 0.005);
  EXPECT_EQ(clamps, 0);
}

TEST(Exposure, NoClampWhenWeightsFarFromZero) {
  auto f = speckle_fixture();
  auto cfg = only(false, true, false);
  cfg.sigma_w = 0.1;  // min weight 0.5 = 5 sigma
  long clamps = 0;
  for (std::uint64_t s = 0; s < 10000; ++s) simulate_exposure(f.stack, f.plan, cfg, s, &clamps);
  EXPECT_EQ(clamps, 0);
}

TEST(Exposure, ClampCountsNegativeDraws) {
  auto f = speckle_fixture();
  auto cfg = only(false, true, false);
  cfg.sigma_w = 10.0;
  long clamps = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto g = simulate_exposure(f.stack, f.plan, cfg, s, &clamps);
    EXPECT_GE(g.values().minCoeff(), 0.0);
  }
  EXPECT_GT(clamps, 0);
}

TEST(Exposure, PixelStdMatchesGaussianAlgebra) {
  auto f = speckle_fixture();
  auto cfg = only(false, true, false);
  cfg.sigma_w = 0.05;
  const int runs = 10000;
  std::vector<double> a, b;
  for (int r = 0; r < runs; ++r) {
    const auto g = simulate_exposure(f.stack, f.plan, cfg, std::uint64_t(r));
    a.push_back(g(2, 3));
    b.push_back(g(6, 1));
  }
  for (auto [vals, pix] : {std::pair{&a, Index(2 * 8 + 3)}, std::pair{&b, Index(6 * 8 + 1)}}) {
    double s2 = 0.0;
    for (Index k : f.plan.support) s2 += f.stack.pixels(pix, k) * f.stack.pixels(pix, k);
    const double expected_var = cfg.sigma_w * cfg.sigma_w * s2;
    const auto [mean, var] = oracle::moments(*vals);
    EXPECT_NEAR(var, expected_var, 3 * expected_var * std::sqrt(2.0 / runs));
  }
}

TEST(Translational, ZeroSigmaIsExact) {
  auto f = speckle_fixture();
  auto cfg = only(false, false, true);
  cfg.sigma_ij = 0.0;
  const std::array<MasterMask, 1> ms{f.master};
  EXPECT_TRUE((simulate_translational(ms, f.stack, f.plan, cfg, 1).values() ==
               noise_free_projection(f.stack, f.plan).values())
                  .all());
}

TEST(Translational, MarginTooSmall) {
  auto f = speckle_fixture(1);
  auto cfg = only(false, false, true);
  const std::array<MasterMask, 1> ms{f.master};
  try {
    simulate_translational(ms, f.stack, f.plan, cfg, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Precondition);
  }
}

TEST(Translational, RampMasterShiftsUniformly) {
  const double a = 0.01, b = 0.005;
  const MasterMask m{ramp_master_grid(50, a, b), 1.0, "ramp", SyntheticOrigin{}};
  const auto st = sample_random(m, {8, 8}, 10, 3, 4);
  const auto p = plan_from((Eigen::VectorXd(10) << 1, 2, 0, 3, 1, 0.5, 0, 2, 1, 1).finished());
  auto cfg = only(false, false, true);
  cfg.sigma_ij = 0.3;
  const std::array<MasterMask, 1> ms{m};
  const auto clean = noise_free_projection(st, p);
  std::vector<double> shifts;
  for (std::uint64_t s = 0; s < 3000; ++s) {
    const auto diff = (simulate_translational(ms, st, p, cfg, s).values() - clean.values()).eval();
    // Linear masters move rigidly: the error image is a constant.
    EXPECT_LT(diff.maxCoeff() - diff.minCoeff(), 1e-12);
    shifts.push_back(diff.mean());
  }
  // Each mask contributes w_k (a dy_k + b dx_k) with dy, dx normal truncated at 3 sigma.
  const double trunc = 1.0 - 6.0 * std::exp(-4.5) / std::sqrt(2 * std::numbers::pi) / std::erf(3.0 / std::sqrt(2.0));
  const double w2 = p.weights.squaredNorm();
  const double expected = (a * a + b * b) * cfg.sigma_ij * cfg.sigma_ij * trunc * w2;
  const auto [mean, var] = oracle::moments(shifts);
  EXPECT_NEAR(mean, 0.0, 3 * std::sqrt(expected / 3000));
  EXPECT_NEAR(var, expected, 3 * expected * std::sqrt(2.0 / 3000));
}

TEST(Translational, IlluminationFollowsTheFov) {
  // A constant master under a source profile: shifts leave every FOV unchanged.
  const MasterMask m = constant(30, 30, 0.5);
  const auto st = with_source_profile(sample_random(m, {8, 8}, 5, 1, 5), 0.7);
  const auto p = plan_from(Eigen::VectorXd::Ones(5));
  auto cfg = only(false, false, true);
  cfg.sigma_ij = 0.5;
  const std::array<MasterMask, 1> ms{m};
  const RowMajorArray<double> diff = simulate_translational(ms, st, p, cfg, 8).values() - noise_free_projection(st, p).values();
  EXPECT_LT(diff.abs().maxCoeff(), 1e-13);
}

TEST(All, DisabledIsNoiseFree) {
  auto f = speckle_fixture();
  const std::array<MasterMask, 1> ms{f.master};
  EXPECT_TRUE((simulate_all(ms, f.stack, f.plan, only(false, false, false), 3).values() ==
               noise_free_projection(f.stack, f.plan).values())
                  .all());
}

TEST(All, SingleSourceMatchesDedicatedSimulator) {
  auto f = speckle_fixture();
  const std::array<MasterMask, 1> ms{f.master};
  const int runs = 10000;
  for (int which = 0; which < 3; ++which) {
    auto cfg = only(which == 0, which == 1, which == 2);
    cfg.lambda_photons = 200.0;
    cfg.sigma_w = 0.2;
    cfg.sigma_ij = 0.3;
    std::vector<double> combined, dedicated;
    for (int r = 0; r < runs; ++r) {
      // Disjoint seed ranges keep the two samples independent.
      combined.push_back(simulate_all(ms, f.stack, f.plan, cfg, std::uint64_t(r))(4, 4));
      const std::uint64_t s = std::uint64_t(runs + r);
      const Grid2D g = which == 0   ? simulate_poisson(f.stack, f.plan, cfg, s)
                       : which == 1 ? simulate_exposure(f.stack, f.plan, cfg, s)
                                    : simulate_translational(ms, f.stack, f.plan, cfg, s);
      dedicated.push_back(g(4, 4));
    }
    const auto chk = oracle::compare_samples(combined, dedicated);
    EXPECT_TRUE(chk.ok()) << which << ": " << chk.mean_diff << "/" << chk.mean_se << " " << chk.var_diff << "/"
                          << chk.var_se;
  }
}

TEST(MonteCarlo, ZeroNoiseIsExact) {
  auto f = speckle_fixture();
  const std::array<MasterMask, 1> ms{f.master};
  const auto t = make_pattern(PatternKind::Square, 8, 8);
  auto cfg = only(false, false, false);
  cfg.runs = 5;
  const auto r = monte_carlo(ms, f.stack, f.plan, t, cfg);
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.snr_std, 0.0);
  EXPECT_EQ(r.per_run_snr.size(), 5u);
}

TEST(MonteCarlo, DeterministicAndDistinctRuns) {
  auto f = speckle_fixture();
  const std::array<MasterMask, 1> ms{f.master};
  const auto t = make_pattern(PatternKind::Square, 8, 8);
  auto cfg = only(true, true, true);
  cfg.runs = 2;
  cfg.seed = 12;
  const auto a = monte_carlo(ms, f.stack, f.plan, t, cfg);
  const auto b = monte_carlo(ms, f.stack, f.plan, t, cfg);
  EXPECT_EQ(a.per_run_snr, b.per_run_snr);
  EXPECT_TRUE((a.projection.values() == b.projection.values()).all());
  EXPECT_NE(a.per_run_snr[0], a.per_run_snr[1]);
  EXPECT_EQ(a.border_crop_px, 1);
  EXPECT_FALSE(a.exact);
}

TEST(MonteCarlo, ThreadCountDoesNotChangeResults) {
  auto f = speckle_fixture();
  const std::array<MasterMask, 1> ms{f.master};
  const auto t = make_pattern(PatternKind::Square, 8, 8);
  auto cfg = only(true, true, false);
  cfg.runs = 9;
  setenv("GHOSTPLAN_THREADS", "1", 1);
  const auto one = monte_carlo(ms, f.stack, f.plan, t, cfg);
  setenv("GHOSTPLAN_THREADS", "4", 1);
  const auto four = monte_carlo(ms, f.stack, f.plan, t, cfg);
  unsetenv("GHOSTPLAN_THREADS");
  EXPECT_EQ(one.per_run_snr, four.per_run_snr);
  EXPECT_EQ(one.snr_mean, four.snr_mean);
  EXPECT_EQ(one.border_crop_px, 0);
}

TEST(MonteCarlo, RunSeedsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t r = 0; r < 1000; ++r) seen.insert(derive_run_seed(7, r));
  EXPECT_EQ(seen.size(), 1000u);
}

TEST(MeanAndStd, Values) {
  const auto [m, s] = mean_and_std({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m, 2.5);
  EXPECT_NEAR(s, std::sqrt(5.0 / 3.0), 1e-15);
  const double inf = std::numeric_limits<double>::infinity();
  const auto [mi, si] = mean_and_std({inf, inf});
  EXPECT_EQ(mi, inf);
  EXPECT_EQ(si, 0.0);
  EXPECT_THROW(mean_and_std({}), Error);
}

TEST(Config, Validation) {
  NoiseConfig c;
  EXPECT_NO_THROW(c.validate());
  c.runs = 0;
  EXPECT_THROW(c.validate(), Error);
  c = NoiseConfig{};
  c.sigma_w = -1;
  EXPECT_THROW(c.validate(), Error);
  c = NoiseConfig{};
  c.lambda_photons = 0;
  EXPECT_THROW(c.validate(), Error);
}
