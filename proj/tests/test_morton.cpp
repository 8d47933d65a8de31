#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "zdtree/cli/verify.hpp"
#include "zdtree/morton.hpp"

using namespace zdtree;

namespace {

const std::array<double, 3> kZero{0.0, 0.0, 0.0};
const std::array<double, 3> kOne{1.0, 1.0, 1.0};

Quantizer unshifted(int dim, int bits) { return Quantizer::with_shift(dim, kZero, kOne, bits, {}); }

QuantizedPoint gp(PointId id, Coord x, Coord y, Coord z = 0, int dim = 2, int bits = 31) {
  return make_grid_point(id, {x, y, z}, dim, bits);
}

GridBox box2(Coord lx, Coord ly, Coord hx, Coord hy) { return GridBox{{lx, ly, 0}, {hx, hy, 0}}; }

}  // namespace

TEST(Quantizer, ShiftIsSeededAndInRange) {
  const auto a = Quantizer::make(2, kZero, kOne, 16, 0);
  const auto b = Quantizer::make(2, kZero, kOne, 16, 0);
  EXPECT_EQ(a, b);
  EXPECT_LT(a.shift()[0], 65536u);
  EXPECT_LT(a.shift()[1], 65536u);
  EXPECT_NE(Quantizer::make(2, kZero, kOne, 16, 1).shift(), a.shift());
}

TEST(Quantizer, BitBudget) {
  EXPECT_THROW(Quantizer::make(3, kZero, kOne, 21, 0), std::invalid_argument);
  EXPECT_NO_THROW(Quantizer::make(3, kZero, kOne, 20, 0));
  EXPECT_NO_THROW(Quantizer::make(2, kZero, kOne, 31, 0));
  EXPECT_THROW(Quantizer::make(2, kZero, kOne, 32, 0), std::invalid_argument);
  EXPECT_EQ(Quantizer::default_bits(2), 31);
  EXPECT_EQ(Quantizer::default_bits(3), 20);
}

TEST(Quantizer, RejectsBadDimensionAndDegenerateBox) {
  EXPECT_THROW(Quantizer::make(4, kZero, kOne, 10, 0), std::invalid_argument);
  EXPECT_THROW(Quantizer::make(1, kZero, kOne, 10, 0), std::invalid_argument);
  EXPECT_THROW(Quantizer::make(2, {0.0, 1.0, 0.0}, {1.0, 1.0, 1.0}, 10, 0), std::invalid_argument);
}

TEST(Quantizer, EndpointMapping) {
  const auto q = unshifted(2, 16);
  EXPECT_EQ(q.quantize({0, {0.0, 0.0}}).grid[0], 0u);
  EXPECT_EQ(q.quantize({0, {1.0, 0.0}}).grid[0], 65535u);
  EXPECT_EQ(q.quantize({0, {0.5, 0.0}}).grid[0], 32767u);
  EXPECT_EQ(q.quantize({9, {0.5, 0.0}}).id, 9u);
}

TEST(Quantizer, OutOfUniverse) {
  const auto q = unshifted(2, 16);
  EXPECT_THROW(q.quantize({0, {1.5, 0.0}}), OutOfUniverse);
  EXPECT_THROW(q.quantize({0, {0.0, -1e-9}}), OutOfUniverse);
  EXPECT_THROW(q.quantize({0, {std::nan(""), 0.0}}), OutOfUniverse);
}

TEST(Quantizer, ShiftWrapsModuloGrid) {
  const auto q = Quantizer::with_shift(2, kZero, kOne, 4, {10, 0, 0});
  EXPECT_EQ(q.quantize({0, {1.0, 0.0}}).grid[0], (15u + 10u) % 16u);
  EXPECT_EQ(q.quantize({0, {0.0, 0.0}}).grid[0], 10u);
}

TEST(Quantizer, OrderPreservingWithoutShift) {
  const auto q = unshifted(3, 20);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = u(rng);
    const double b = u(rng);
    const auto qa = q.quantize({0, {a, 0.5, 0.5}});
    const auto qb = q.quantize({0, {b, 0.5, 0.5}});
    if (a < b) {
      EXPECT_LE(qa.grid[0], qb.grid[0]);
    }
  }
}

TEST(MortonKey, Examples) {
  EXPECT_EQ(morton_encode({0, 0, 0}, 2, 16), 0u);
  EXPECT_EQ(morton_encode({0b10, 0b11, 0}, 2, 2), 0b1101u);
  EXPECT_EQ(morton_encode({1, 1, 1}, 3, 1), 7u);
  // Axis 0 is the most significant bit of each group.
  EXPECT_EQ(morton_encode({1, 0, 0}, 3, 1), 0b100u);
  EXPECT_EQ(morton_encode({0, 1, 0}, 2, 1), 0b01u);
}

TEST(MortonKey, FullWidthRoundTrip) {
  std::mt19937_64 rng(11);
  for (const int dim : {2, 3}) {
    const int bits = Quantizer::default_bits(dim);
    for (int i = 0; i < 1000; ++i) {
      std::array<Coord, 3> g{};
      for (int a = 0; a < dim; ++a) g[a] = static_cast<Coord>(rng() >> (64 - bits));
      const MortonKey k = morton_encode(g, dim, bits);
      EXPECT_LT(k, MortonKey{1} << (dim * bits));
      EXPECT_EQ(morton_decode(k, dim, bits), g);
    }
  }
}

TEST(MortonCompare, Examples) {
  const auto a = gp(1, 5, 5);
  const auto b = gp(2, 5, 5);
  EXPECT_TRUE(morton_compare(a, b) < 0);
  const auto p = make_grid_point(0, {2, 3, 0}, 2, 2);
  const auto r = make_grid_point(0, {3, 0, 0}, 2, 2);
  EXPECT_EQ(p.key, 13u);
  EXPECT_EQ(r.key, 10u);
  EXPECT_TRUE(morton_compare(p, r) > 0);
}

TEST(MortonCompare, MatchesKeyIdSort) {
  std::mt19937_64 rng(5);
  std::vector<QuantizedPoint> pts;
  for (PointId i = 0; i < 100; ++i) {
    pts.push_back(gp(static_cast<PointId>(rng() % 1000), static_cast<Coord>(rng() % 8),
                     static_cast<Coord>(rng() % 8), 0, 2, 3));
  }
  auto by_compare = pts;
  std::sort(by_compare.begin(), by_compare.end(), morton_less);
  auto by_pair = pts;
  std::sort(by_pair.begin(), by_pair.end(), [](const auto& x, const auto& y) {
    return std::pair(x.key, x.id) < std::pair(y.key, y.id);
  });
  EXPECT_EQ(by_compare, by_pair);
}

TEST(BoxDistance, Examples) {
  EXPECT_EQ(box_sqdist(gp(0, 3, 3), box2(2, 2, 5, 5), 2), 0u);
  EXPECT_EQ(box_sqdist(gp(0, 0, 0), box2(2, 2, 5, 5), 2), 8u);
  const GridBox cube{{0, 0, 0}, {4, 4, 4}};
  EXPECT_EQ(box_sqdist(gp(0, 1, 9, 1, 3, 20), cube, 3), 25u);
}

TEST(BoxDistance, InteriorExamples) {
  EXPECT_EQ(box_interior_sqdist(gp(0, 3, 3), box2(0, 0, 10, 10), 2), 9u);
  EXPECT_EQ(box_interior_sqdist(gp(0, 0, 7), box2(0, 0, 10, 10), 2), 0u);
  const GridBox cube{{0, 0, 0}, {10, 10, 10}};
  EXPECT_EQ(box_interior_sqdist(gp(0, 5, 5, 5, 3, 20), cube, 3), 25u);
  EXPECT_THROW(box_interior_sqdist(gp(0, 11, 5), box2(0, 0, 10, 10), 2), std::invalid_argument);
}

TEST(BoxDistance, GrowingTheBoxNeverIncreasesDistance) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 10000; ++i) {
    const auto p = gp(0, rng() % 100, rng() % 100);
    GridBox b = box2(rng() % 50, rng() % 50, 50 + rng() % 50, 50 + rng() % 50);
    const auto before = box_sqdist(p, b, 2);
    b.lo[rng() % 2] = 0;
    b.hi[rng() % 2] += 7;
    EXPECT_LE(box_sqdist(p, b, 2), before);
  }
}

TEST(PrefixBox, HalvesFollowTheSplitAxis) {
  // 2D, 2 bits per axis: bit 3 splits x at the top level, bit 2 splits y.
  const GridBox root = full_box(2, 2);
  EXPECT_EQ(root, box2(0, 0, 3, 3));
  EXPECT_EQ(prefix_box(0b1000, 3, 2, 2), box2(2, 0, 3, 3));
  EXPECT_EQ(prefix_box(0b0100, 2, 2, 2), box2(0, 2, 1, 3));
  EXPECT_EQ(axis_of_bit(3, 2), 0);
  EXPECT_EQ(axis_of_bit(2, 2), 1);
  EXPECT_EQ(axis_of_bit(5, 3), 0);
  EXPECT_EQ(axis_of_bit(3, 3), 2);
}

TEST(MortonProperties, RandomTriples) {
  const auto r = verify::check_morton_properties(20000, 42);
  EXPECT_TRUE(r.passed) << r.detail;
  EXPECT_GT(r.checks, 20000u);
}
