#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "adet/detector.hpp"

using namespace adet;

TEST(FeatureLength, StaticTuple) { EXPECT_EQ(feature_length(32, FeatureParams{1000, 2, 8, 9}), 324u); }

TEST(FeatureLength, SingleCellBlock) {
  // One 32x32 cell, one block of one cell.
  EXPECT_EQ(feature_length(32, FeatureParams{1, 1, 32, 9}), 9u);
}

TEST(FeatureLength, IncompatibleGeometry) {
  EXPECT_THROW(feature_length(32, FeatureParams{1, 2, 12, 9}), Error);  // 32 % 12 != 0
  EXPECT_THROW(feature_length(32, FeatureParams{1, 5, 8, 9}), Error);   // block wider than the window
  EXPECT_THROW(feature_length(32, FeatureParams{1, 2, 8, 1}), Error);
  EXPECT_THROW(feature_length(32, FeatureParams{0, 2, 8, 9}), Error);
}

Frame ramp(int win, bool horizontal) {
  Frame f(win, win);
  for (int y = 0; y < win; ++y)
    for (int x = 0; x < win; ++x) f.at(x, y) = static_cast<std::uint8_t>(4 * (horizontal ? x : y));
  return f;
}

TEST(Hog, HorizontalRampFillsBinZeroOnly) {
  const FeatureParams p{1, 2, 8, 9};
  const auto h = hog(ramp(32, true), p);
  ASSERT_EQ(h.size(), 324u);
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (i % 9 == 0)
      EXPECT_GT(h[i], 0.0);
    else
      EXPECT_EQ(h[i], 0.0) << i;
  }
  // Each block is L2-normalised.
  for (std::size_t b = 0; b < 9; ++b) {
    double sq = 0.0;
    for (std::size_t i = 0; i < 36; ++i) sq += h[b * 36 + i] * h[b * 36 + i];
    EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-9);
  }
  // Interior block: four equal cells.
  EXPECT_NEAR(h[4 * 36], 0.5, 1e-9);
}

TEST(Hog, VerticalRampSplitsBetweenBinsFourAndFive) {
  // 90 degrees sits halfway between the centres of bins 4 and 5.
  const auto h = hog(ramp(32, false), FeatureParams{1, 2, 8, 9});
  for (std::size_t i = 0; i < h.size(); ++i) {
    const std::size_t b = i % 9;
    if (b == 4 || b == 5) {
      EXPECT_GT(h[i], 0.0);
    } else {
      EXPECT_EQ(h[i], 0.0);
    }
    if (b == 4) EXPECT_DOUBLE_EQ(h[i], h[i + 1]);
  }
}

TEST(Hog, FlatPatchIsZero) {
  const auto h = hog(Frame(32, 32, 100), FeatureParams{1, 2, 8, 9});
  for (double v : h) EXPECT_EQ(v, 0.0);
}

TEST(Score, LinearFunction) {
  LinearModel m;
  m.weights = {1.0, -2.0, 0.5};
  m.bias = 0.25;
  const std::vector<double> x{2.0, 1.0, 4.0};
  EXPECT_DOUBLE_EQ(score(m, x), 2.0 - 2.0 + 2.0 + 0.25);
  const std::vector<double> bad{1.0};
  EXPECT_THROW(score(m, bad), Error);
}

TEST(Proposals, RankedAndBounded) {
  Frame f(160, 120, 40);
  for (int y = 40; y < 80; ++y)
    for (int x = 60; x < 100; ++x) f.at(x, y) = ((x / 5 + y / 5) % 2) ? 230 : 20;
  const auto props = rank_proposals(f, 50);
  ASSERT_FALSE(props.empty());
  EXPECT_LE(props.size(), 50u);
  for (std::size_t i = 1; i < props.size(); ++i) EXPECT_GE(props[i - 1].score, props[i].score);
  for (const auto& p : props) {
    EXPECT_GE(p.box.x, 0.0);
    EXPECT_GE(p.box.y, 0.0);
    EXPECT_LE(p.box.right(), 160.0);
    EXPECT_LE(p.box.bottom(), 120.0);
  }
  // The textured square is the strongest proposal region.
  const BBox target(60, 40, 40, 40);
  EXPECT_GT(iou(props.front().box, target), 0.0);
}

TEST(Training, SeparatesTwoPatterns) {
  // Positive: vertical stripes. Negative: horizontal stripes.
  std::vector<Frame> pos, neg;
  for (int k = 0; k < 6; ++k) {
    Frame a(32, 32), b(32, 32);
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) {
        a.at(x, y) = static_cast<std::uint8_t>(((x + k) / 4) % 2 ? 200 : 30);
        b.at(x, y) = static_cast<std::uint8_t>(((y + k) / 4) % 2 ? 200 : 30);
      }
    pos.push_back(a);
    neg.push_back(b);
  }
  const FeatureParams p{1, 2, 8, 9};
  const LinearModel m = train(pos, neg, p, 20, 7);
  for (const auto& f : pos) EXPECT_GT(score(m, hog(f, p)), 0.0);
  for (const auto& f : neg) EXPECT_LT(score(m, hog(f, p)), 0.0);
}

TEST(ModelIo, RoundTripIsExact) {
  LinearModel m;
  m.params = FeatureParams{500, 2, 8, 9};
  m.weights.assign(feature_length(m.window, m.params), 0.25);
  m.weights[0] = -1.0 / 3.0;
  m.weights[1] = 1e-300;
  m.bias = -0.7;
  m.label = 3;
  m.train_accuracy = 0.875;
  std::stringstream ss;
  write_model(ss, m);
  EXPECT_EQ(read_model(ss), m);
  m.weights.pop_back();
  std::stringstream short_ss;
  write_model(short_ss, m);
  EXPECT_THROW(read_model(short_ss), Error);
}

TEST(HexDouble, RoundTrip) {
  for (double v : {0.0, -0.0, 1.0 / 3.0, 1e-310, -123456.789}) EXPECT_EQ(parse_double(hex_double(v)), v);
  EXPECT_THROW(parse_double("1.0x"), Error);
}
