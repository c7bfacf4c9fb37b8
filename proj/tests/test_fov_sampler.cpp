#include <gtest/gtest.h>

#include <array>
#include <map>
#include <set>

#include "ghostplan/fov_sampler.hpp"

using namespace ghostplan;

namespace {

MasterMask speckle(Index r, Index c, std::uint64_t seed) { return synthesize_speckle({r, c, 1.0, 0.0, 1.0, seed}); }

MasterMask constant(Index r, Index c, double v) { return MasterMask{Grid2D(r, c, v), 1.0, "const", SyntheticOrigin{}}; }

}  // namespace

TEST(Systematic, TenByTenStrideTwo) {
  const auto m = speckle(10, 10, 1);
  EXPECT_EQ(axis_capacity(10, 4, 2, 0), 4);
  const auto st = sample_systematic(m, {4, 4}, {2, 2}, 16);
  ASSERT_EQ(st.count(), 16);
  std::set<std::pair<Index, Index>> seen;
  for (const auto& r : st.offsets) {
    EXPECT_EQ(r.a.dy % 2, 0);
    EXPECT_EQ(r.a.dx % 2, 0);
    EXPECT_LE(r.a.dy + 4, 10);
    EXPECT_LE(r.a.dx + 4, 10);
    seen.insert({r.a.dy, r.a.dx});
  }
  EXPECT_EQ(seen.size(), 16u);
}

TEST(Systematic, FovEqualsMaster) {
  const auto m = speckle(8, 8, 2);
  const auto st = sample_systematic(m, {8, 8}, {1, 1}, 1);
  ASSERT_EQ(st.count(), 1);
  EXPECT_TRUE((st.fov(0).values() == m.grid.values()).all());
}

TEST(Systematic, OverCapacity) {
  const auto m = speckle(10, 10, 1);
  try {
    sample_systematic(m, {4, 4}, {2, 2}, 17);
    FAIL();
  } catch (const CapacityError& e) {
    EXPECT_EQ(e.max_count(), 16u);
  }
}

TEST(Systematic, StrideAxesAreIndependent) {
  const auto m = speckle(30, 40, 3);
  const auto st = sample_systematic(m, {5, 5}, Stride{2, 3}, 20);
  for (const auto& r : st.offsets) {
    EXPECT_EQ(r.a.dy % 2, 0);
    EXPECT_EQ(r.a.dx % 3, 0);
  }
}

TEST(Random, SameSeedSameStack) {
  const auto m = speckle(30, 30, 4);
  const auto a = sample_random(m, {6, 6}, 50, 9);
  const auto b = sample_random(m, {6, 6}, 50, 9);
  EXPECT_EQ(a.offsets, b.offsets);
  EXPECT_NE(a.offsets, sample_random(m, {6, 6}, 50, 10).offsets);
}

TEST(Random, SingleOffsetLattice) {
  const auto m = constant(6, 6, 0.5);
  const auto st = sample_random(m, {6, 6}, 5, 1);
  for (const auto& r : st.offsets) EXPECT_EQ(r.a, (Offset{0, 0}));
}

TEST(Random, UniformOverLattice) {
  // 4 x 5 = 20 lattice sites, 1e5 draws; chi-square with 19 dof at 1% is 36.19.
  const auto m = constant(7, 8, 0.5);
  const Index n = 100000;
  const auto st = sample_random(m, {4, 4}, n, 123);
  std::map<std::pair<Index, Index>, Index> hist;
  for (const auto& r : st.offsets) ++hist[{r.a.dy, r.a.dx}];
  ASSERT_EQ(hist.size(), 20u);
  const double expected = double(n) / 20.0;
  double chi2 = 0.0;
  for (const auto& [k, c] : hist) chi2 += (double(c) - expected) * (double(c) - expected) / expected;
  EXPECT_LT(chi2, 36.19);
}

TEST(Unique, TilesWithoutOverlap) {
  const auto m = speckle(400, 400, 5);
  const auto st = sample_unique_tiling(m, {40, 40});
  EXPECT_EQ(st.count(), 100);
  std::set<std::pair<Index, Index>> seen;
  for (const auto& r : st.offsets) {
    EXPECT_EQ(r.a.dy % 40, 0);
    EXPECT_EQ(r.a.dx % 40, 0);
    seen.insert({r.a.dy, r.a.dx});
  }
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_EQ(sample_unique_tiling(speckle(12, 12, 1), {12, 12}).count(), 1);
}

TEST(Unique, NotDivisible) {
  try {
    sample_unique_tiling(speckle(401, 400, 5), {40, 40});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Divisibility);
  }
}

TEST(Consecutive, IdentityMaskMatchesSingleSampling) {
  const auto a = speckle(30, 30, 6);
  const auto one = constant(30, 30, 1.0);
  const auto two = sample_consecutive(a, one, {6, 6}, ConsecutiveSystematic{{2, 2}, {3, 3}}, 40);
  const auto single = sample_systematic(a, {6, 6}, {2, 2}, 40);
  ASSERT_EQ(two.count(), single.count());
  for (Index k = 0; k < two.count(); ++k) EXPECT_EQ(two.offsets[std::size_t(k)].a, single.offsets[std::size_t(k)].a);
  EXPECT_TRUE(two.pixels == single.pixels);
  EXPECT_TRUE(two.consecutive());
}

TEST(Consecutive, UniqueCyclesThroughTiles) {
  const auto a = speckle(400, 400, 7);
  const auto b = speckle(400, 400, 8);
  const auto st = sample_consecutive(a, b, {40, 40}, ConsecutiveUnique{{1, 1}}, 8000);
  ASSERT_EQ(st.count(), 8000);
  std::set<std::pair<Index, Index>> first;
  for (Index k = 0; k < 100; ++k) first.insert({st.offsets[std::size_t(k)].b->dy, st.offsets[std::size_t(k)].b->dx});
  EXPECT_EQ(first.size(), 100u);
  for (Index k = 100; k < 8000; ++k)
    EXPECT_EQ(*st.offsets[std::size_t(k)].b, *st.offsets[std::size_t(k - 100)].b) << k;
}

TEST(Consecutive, RandomDeterministic) {
  const auto a = speckle(30, 30, 7);
  const auto b = speckle(30, 30, 8);
  const auto s1 = sample_consecutive(a, b, {5, 5}, ConsecutiveRandom{3}, 30);
  const auto s2 = sample_consecutive(a, b, {5, 5}, ConsecutiveRandom{3}, 30);
  EXPECT_EQ(s1.offsets, s2.offsets);
}

TEST(Consecutive, RejectsSingleMaskProtocol) {
  const auto a = speckle(20, 20, 7);
  EXPECT_THROW(sample_consecutive(a, a, {5, 5}, Systematic{{1, 1}}, 5), Error);
}

TEST(Stack, ValuesInUnitIntervalAndBelowFactors) {
  const auto a = speckle(40, 40, 9);
  const auto b = speckle(40, 40, 10);
  const auto st = sample_consecutive(a, b, {8, 8}, ConsecutiveRandom{1}, 60);
  EXPECT_GE(st.pixels.minCoeff(), 0.0);
  EXPECT_LE(st.pixels.maxCoeff(), 1.0);
  for (Index k = 0; k < st.count(); ++k) {
    const auto& r = st.offsets[std::size_t(k)];
    const auto fa = a.grid.block(r.a.dy, r.a.dx, 8, 8).values();
    const auto fb = b.grid.block(r.b->dy, r.b->dx, 8, 8).values();
    EXPECT_TRUE((st.fov(k).values() <= fa.min(fb)).all());
  }
}

TEST(Stack, ReExtractionIsBitExact) {
  const auto a = speckle(50, 50, 11);
  const auto b = speckle(50, 50, 12);
  const std::array<MasterMask, 2> both{a, b};
  const auto single = with_source_profile(sample_random(a, {10, 10}, 30, 4, 3), 0.8);
  const auto pair = sample_consecutive(a, b, {10, 10}, ConsecutiveRandom{5}, 30, 2);
  for (Index k = 0; k < 30; ++k) {
    EXPECT_TRUE((extract_fov(std::span(both).first(1), single, k).values() == single.fov(k).values()).all());
    EXPECT_TRUE((extract_fov(both, pair, k).values() == pair.fov(k).values()).all());
  }
}

TEST(Stack, MarginKeepsOffsetsAway) {
  const auto m = speckle(30, 30, 13);
  const Index margin = required_margin(0.1);
  EXPECT_EQ(margin, 3);
  EXPECT_EQ(required_margin(1.0), 5);
  const auto st = sample_random(m, {6, 6}, 200, 2, margin);
  for (const auto& r : st.offsets) {
    EXPECT_GE(r.a.dy, margin);
    EXPECT_GE(r.a.dx, margin);
    EXPECT_LE(r.a.dy + 6 + margin, 30);
    EXPECT_LE(r.a.dx + 6 + margin, 30);
  }
}
