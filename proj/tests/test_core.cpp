#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "adet/core.hpp"
#include "adet/random.hpp"

using namespace adet;

TEST(BBox, RejectsDegenerateBoxes) {
  EXPECT_THROW(BBox(0, 0, 0, 5), Error);
  EXPECT_THROW(BBox(0, 0, 5, -1), Error);
  EXPECT_THROW(BBox(std::nan(""), 0, 1, 1), Error);
  EXPECT_THROW(BBox(0, std::numeric_limits<double>::infinity(), 1, 1), Error);
  EXPECT_NO_THROW(BBox(-3, -3, 1, 1));
}

TEST(BBox, FromCenter) {
  const BBox b = BBox::from_center(10, 20, 4, 6);
  EXPECT_DOUBLE_EQ(b.x, 8);
  EXPECT_DOUBLE_EQ(b.y, 17);
  EXPECT_DOUBLE_EQ(b.cx(), 10);
  EXPECT_DOUBLE_EQ(b.cy(), 20);
}

TEST(Iou, IdenticalIsOne) {
  const BBox b(3, 4, 10, 7);
  EXPECT_DOUBLE_EQ(iou(b, b), 1.0);
}

TEST(Iou, DisjointAndTouchingAreZero) {
  EXPECT_DOUBLE_EQ(iou(BBox(0, 0, 10, 10), BBox(20, 20, 5, 5)), 0.0);
  EXPECT_DOUBLE_EQ(iou(BBox(0, 0, 10, 10), BBox(10, 0, 10, 10)), 0.0);
}

TEST(Iou, HalfOverlapIsOneThird) {
  // Two 10x10 boxes sharing a 5x10 strip: 50 / 150.
  EXPECT_DOUBLE_EQ(iou(BBox(0, 0, 10, 10), BBox(5, 0, 10, 10)), 1.0 / 3.0);
}

TEST(Iou, OneSeventh) {
  // 2x2 overlap of two 4x4 boxes: 4 / (16 + 16 - 4).
  EXPECT_DOUBLE_EQ(iou(BBox(0, 0, 4, 4), BBox(2, 2, 4, 4)), 1.0 / 7.0);
}

TEST(Iou, ContainedBox) { EXPECT_DOUBLE_EQ(iou(BBox(0, 0, 10, 10), BBox(2, 2, 5, 5)), 0.25); }

TEST(Iou, SymmetricAndBounded) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const BBox a(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(0.1, 60), rng.uniform(0.1, 60));
    const BBox b(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(0.1, 60), rng.uniform(0.1, 60));
    const double v = iou(a, b);
    EXPECT_DOUBLE_EQ(v, iou(b, a));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Frame, SizeChecks) {
  EXPECT_THROW(Frame(-1, 2), Error);
  EXPECT_THROW(Frame(2, 2, std::vector<std::uint8_t>(3)), Error);
  Frame f(3, 2, 7);
  EXPECT_EQ(f.at(2, 1), 7);
  EXPECT_EQ(f.clamped(-5, 9), 7);
}

TEST(CropResize, CheckerboardKeepsPattern) {
  // 8x8 checkerboard of 4-pixel squares, cropped whole and resampled to 4x4:
  // nearest neighbour picks one pixel per 2x2 cell.
  Frame f(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) f.at(x, y) = ((x / 4 + y / 4) % 2) ? 255 : 0;
  const Frame c = crop_resize(f, BBox(0, 0, 8, 8), 4);
  ASSERT_EQ(c.width(), 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) EXPECT_EQ(c.at(x, y), ((x / 2 + y / 2) % 2) ? 255 : 0) << x << "," << y;
}

TEST(CropResize, ClampsOutsideTheFrame) {
  Frame f(4, 4, 9);
  const Frame c = crop_resize(f, BBox(-10, -10, 30, 30), 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) EXPECT_EQ(c.at(x, y), 9);
}

TEST(Random, DerivedSeedsAreStableAndDistinct) {
  EXPECT_EQ(derive_seed(1, "a"), derive_seed(1, "a"));
  EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
  EXPECT_NE(derive_seed(1, std::uint64_t{0}), derive_seed(1, std::uint64_t{1}));
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(Random, IntegerRangeInclusive) {
  Rng r(3);
  bool lo = false, hi = false;
  for (int i = 0; i < 1000; ++i) {
    const int v = r.integer(-2, 2);
    ASSERT_GE(v, -2);
    ASSERT_LE(v, 2);
    lo = lo || v == -2;
    hi = hi || v == 2;
  }
  EXPECT_TRUE(lo && hi);
}
