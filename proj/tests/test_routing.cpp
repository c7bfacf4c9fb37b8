#include <gtest/gtest.h>

#include <random>
#include <set>

#include "ghostplan/routing.hpp"
#include "oracles.hpp"

using namespace ghostplan;

namespace {

std::vector<Point2> random_points(std::mt19937_64& eng, int n, double span = 100.0) {
  std::uniform_real_distribution<double> u(0.0, span);
  std::vector<Point2> p(static_cast<std::size_t>(n));
  for (auto& q : p) q = {u(eng), u(eng)};
  return p;
}

std::vector<Point2> random_lattice_points(std::mt19937_64& eng, int n) {
  std::uniform_int_distribution<int> u(0, 200);
  std::vector<Point2> p(static_cast<std::size_t>(n));
  for (auto& q : p) q = {double(u(eng)), double(u(eng))};
  return p;
}

void expect_permutation(const std::vector<Index>& order, std::size_t n) {
  ASSERT_EQ(order.size(), n);
  std::set<Index> s(order.begin(), order.end());
  EXPECT_EQ(s.size(), n);
  EXPECT_EQ(*s.begin(), 0);
  EXPECT_EQ(*s.rbegin(), Index(n) - 1);
}

}  // namespace

TEST(Tsp, Collinear) {
  const std::vector<Point2> p{{0, 0}, {1, 0}, {2, 0}};
  EXPECT_DOUBLE_EQ(route_tsp(p).length, 2.0);
  const std::vector<Point2> q{{2, 0}, {0, 0}, {1, 0}};
  EXPECT_DOUBLE_EQ(route_tsp(q).length, 2.0);
}

TEST(Tsp, UnitSquareOpenPath) {
  const std::vector<Point2> p{{0, 0}, {1, 1}, {1, 0}, {0, 1}};
  EXPECT_NEAR(route_tsp(p).length, 3.0, 1e-15);
  EXPECT_NEAR(oracle::shortest_open_path(p), 3.0, 1e-15);
}

TEST(Tsp, SingleAndTwoPoints) {
  EXPECT_EQ(route_tsp({{3, 4}}).length, 0.0);
  EXPECT_EQ(route_tsp({{0, 0}, {3, 4}}).length, 5.0);
  EXPECT_THROW(route_tsp({}), Error);
}

TEST(Tsp, MatchesBruteForceUpToNinePoints) {
  std::mt19937_64 eng(10);
  std::uniform_int_distribution<int> size(2, 9);
  for (int t = 0; t < 50; ++t) {
    const auto pts = random_points(eng, size(eng));
    const auto tour = route_tsp(pts, std::uint64_t(t));
    expect_permutation(tour.order, pts.size());
    EXPECT_NEAR(tour.length, oracle::shortest_open_path(pts), 1e-9) << t;
  }
}

TEST(Tsp, ExactAtTheSmallInstanceLimit) {
  std::mt19937_64 eng(15);
  for (int t = 0; t < 4; ++t) {
    const auto pts = random_points(eng, 10);
    const auto tour = route_tsp(pts, std::uint64_t(t));
    expect_permutation(tour.order, pts.size());
    EXPECT_NEAR(tour.length, oracle::shortest_open_path(pts), 1e-9) << t;
  }
}

TEST(Tsp, NeverWorseThanNearestNeighbour) {
  std::mt19937_64 eng(11);
  for (int n : {8, 12, 13, 25, 60, 150}) {
    const auto pts = random_points(eng, n);
    const auto tour = route_tsp(pts, 3);
    expect_permutation(tour.order, pts.size());
    EXPECT_LE(tour.length, tour.nearest_neighbour_length + 1e-9);
    EXPECT_NEAR(tour.length, path_length(pts, tour.order), 1e-9);
  }
}

TEST(Tsp, NoImprovingTwoExchangeRemains) {
  std::mt19937_64 eng(12);
  const auto pts = random_points(eng, 80);
  const auto tour = route_tsp(pts, 1);
  const auto& o = tour.order;
  auto d = [&](Index a, Index b) {
    return std::hypot(pts[std::size_t(a)].x - pts[std::size_t(b)].x, pts[std::size_t(a)].y - pts[std::size_t(b)].y);
  };
  const std::size_t n = o.size();
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      // Reverse o[i+1..j]; open path, so the j == n-1 case has no closing edge.
      const double before = d(o[i], o[i + 1]) + (j + 1 < n ? d(o[j], o[j + 1]) : 0.0);
      const double after = d(o[i], o[j]) + (j + 1 < n ? d(o[i + 1], o[j + 1]) : 0.0);
      EXPECT_GE(after, before - 1e-9);
    }
}

TEST(Tsp, DeterministicPerSeed) {
  std::mt19937_64 eng(13);
  const auto pts = random_points(eng, 50);
  EXPECT_EQ(route_tsp(pts, 5).order, route_tsp(pts, 5).order);
}

TEST(Tsp, TranslationInvariantAndScaleEquivariant) {
  std::mt19937_64 eng(14);
  for (int t = 0; t < 10; ++t) {
    const auto pts = random_lattice_points(eng, 30);
    const double base = route_tsp(pts, 2).length;
    auto moved = pts;
    for (auto& q : moved) q = {q.x + 37, q.y - 512};
    auto scaled = pts;
    for (auto& q : scaled) q = {q.x * 4, q.y * 4};
    EXPECT_NEAR(route_tsp(moved, 2).length, base, 1e-9 * base);
    EXPECT_NEAR(route_tsp(scaled, 2).length, 4 * base, 1e-9 * base);
  }
}

TEST(Duration, AnchorValues) {
  EXPECT_NEAR(estimate_duration(0.0, 30.0, 1.0, 189300.0, 1.0, 1e4).exposure_s, 18.93, 1e-12);
  EXPECT_NEAR(estimate_duration(0.0, 30.0, 1.0, 18.93, 1e4, 1e4).exposure_s, 18.93, 1e-12);
  EXPECT_NEAR(estimate_duration(3678.3, 30.0, 1.0, 0.0, 1.0, 1e4).scan_s, 110.35, 0.005);
  EXPECT_NEAR(estimate_duration(0.0, 30.0, 1.0, 189300.0, 1.0, 200.0).exposure_s, 946.5, 1e-9);
  const auto d = estimate_duration(100.0, 10.0, 2.0, 5.0, 1e3, 1e4);
  EXPECT_DOUBLE_EQ(d.total_s(), d.scan_s + d.exposure_s);
}

TEST(Duration, Linearity) {
  const auto a = estimate_duration(100.0, 30.0, 1.0, 10.0, 1e4, 1e4);
  const auto b = estimate_duration(300.0, 30.0, 1.0, 30.0, 1e4, 1e4);
  EXPECT_NEAR(b.scan_s, 3 * a.scan_s, 1e-12);
  EXPECT_NEAR(b.exposure_s, 3 * a.exposure_s, 1e-12);
  EXPECT_THROW(estimate_duration(1.0, 30.0, 0.0, 1.0, 1.0, 1.0), Error);
  EXPECT_THROW(estimate_duration(1.0, 30.0, 1.0, 1.0, 1.0, 0.0), Error);
}

TEST(RoutePlan, VisitsEverySupportOffsetOnce) {
  const auto m = synthesize_speckle({60, 60, 1.0, 0, 1, 3});
  const auto st = sample_random(m, {8, 8}, 30, 2);
  Plan p;
  p.weights = Eigen::VectorXd::Zero(30);
  for (Index k : {1, 4, 5, 9, 12, 20, 29}) {
    p.weights(k) = 0.5 + double(k);
    p.support.push_back(k);
  }
  const auto r = route_plan(st, p, 30.0, 1.0, 1e4, 1e4, 0);
  std::multiset<Index> visited(r.order.begin(), r.order.end());
  EXPECT_EQ(visited, std::multiset<Index>(p.support.begin(), p.support.end()));
  ASSERT_EQ(r.points.size(), r.order.size());
  double len = 0.0;
  for (std::size_t i = 0; i < r.order.size(); ++i) {
    const auto& o = st.offsets[std::size_t(r.order[i])].a;
    EXPECT_EQ(r.points[i].x, double(o.dx));
    EXPECT_EQ(r.points[i].y, double(o.dy));
    if (i) len += std::hypot(r.points[i].x - r.points[i - 1].x, r.points[i].y - r.points[i - 1].y);
  }
  EXPECT_NEAR(r.path_length_px, len, 1e-9);
  EXPECT_NEAR(r.exposure_time_s, 1e4 * p.weights.sum() / 1e4, 1e-12);
  EXPECT_NEAR(r.scan_time_s, len * 30e-3, 1e-12);
}

TEST(RoutePlan, RejectsConsecutiveStacks) {
  const auto a = synthesize_speckle({30, 30, 1.0, 0, 1, 3});
  const auto b = synthesize_speckle({30, 30, 1.0, 0, 1, 4});
  const auto st = sample_consecutive(a, b, {5, 5}, ConsecutiveRandom{1}, 5);
  Plan p;
  p.weights = Eigen::VectorXd::Ones(5);
  p.support = {0, 1, 2, 3, 4};
  EXPECT_THROW(route_plan(st, p, 30.0, 1.0, 1e4, 1e4), Error);
}
