#include <gtest/gtest.h>

#include <cmath>

#include "adet/random.hpp"
#include "adet/tracker.hpp"

using namespace adet;

namespace {

// Smooth random texture: sum of a few sinusoids, so sub-pixel shifts are
// well defined.
Frame texture(int w, int h, double dx = 0.0, double dy = 0.0) {
  Frame f(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double u = x - dx, v = y - dy;
      const double s = std::sin(0.31 * u) + std::cos(0.23 * v) + std::sin(0.17 * u + 0.29 * v) + 0.5 * std::cos(0.41 * u - 0.13 * v);
      f.at(x, y) = static_cast<std::uint8_t>(std::lround(128.0 + 30.0 * s));
    }
  return f;
}

}  // namespace

TEST(Corners, InsideBoxAndCapped) {
  const Frame f = texture(120, 100);
  const BBox box(30, 20, 50, 40);
  const auto pts = extract_corners(f, box, 25);
  ASSERT_GE(pts.size(), 4u);
  EXPECT_LE(pts.size(), 25u);
  for (const auto& p : pts) {
    EXPECT_GE(p.x, box.x);
    EXPECT_LE(p.x, box.right());
    EXPECT_GE(p.y, box.y);
    EXPECT_LE(p.y, box.bottom());
  }
}

TEST(Corners, FlatRegionHasNone) { EXPECT_TRUE(extract_corners(Frame(80, 80, 90), BBox(10, 10, 40, 40), 25).empty()); }

TEST(LucasKanade, IntegerShifts) {
  const Frame a = texture(160, 120);
  const auto pts = extract_corners(a, BBox(50, 30, 60, 60), 25);
  ASSERT_GE(pts.size(), 4u);
  for (int s : {-3, -1, 1, 2, 4}) {
    const Frame b = texture(160, 120, s, -s);
    const auto flows = lk_step(a, b, pts);
    int valid = 0;
    for (const auto& fl : flows) {
      if (!fl.valid) continue;
      ++valid;
      EXPECT_NEAR(fl.to.x - fl.from.x, s, 0.1);
      EXPECT_NEAR(fl.to.y - fl.from.y, -s, 0.1);
    }
    EXPECT_GE(valid, 4);
  }
}

TEST(LucasKanade, SizeMismatchThrows) {
  EXPECT_THROW(lk_step(Frame(10, 10), Frame(11, 10), {}), Error);
}

TEST(UpdateBox, PureTranslation) {
  TrackerState st;
  st.box = BBox(10, 10, 20, 20);
  std::vector<Flow> flows;
  for (const Point p : {Point{12, 12}, Point{25, 14}, Point{15, 27}, Point{28, 28}, Point{20, 20}})
    flows.push_back({p, {p.x + 3, p.y - 2}, true});
  const BBox b = update_box(st, flows);
  EXPECT_NEAR(b.x, 13, 1e-12);
  EXPECT_NEAR(b.y, 8, 1e-12);
  EXPECT_NEAR(b.w, 20, 1e-12);
  EXPECT_EQ(st.frames_since_init, 1);
}

TEST(UpdateBox, ScaleAboutCentre) {
  TrackerState st;
  st.box = BBox(0, 0, 20, 20);  // centre (10, 10)
  std::vector<Flow> flows;
  for (const Point p : {Point{5, 5}, Point{15, 5}, Point{5, 15}, Point{15, 15}})
    flows.push_back({p, {10 + 2 * (p.x - 10), 10 + 2 * (p.y - 10)}, true});
  const BBox b = update_box(st, flows);
  EXPECT_NEAR(b.w, 40, 1e-12);
  EXPECT_NEAR(b.cx(), 10, 1e-12);
  EXPECT_NEAR(b.cy(), 10, 1e-12);
}

TEST(UpdateBox, MedianRejectsOutlier) {
  TrackerState st;
  st.box = BBox(0, 0, 20, 20);
  std::vector<Flow> flows;
  for (const Point p : {Point{2, 2}, Point{18, 2}, Point{2, 18}, Point{18, 18}, Point{10, 10}})
    flows.push_back({p, {p.x + 1, p.y}, true});
  flows.push_back({{10, 4}, {60, 50}, true});
  const BBox b = update_box(st, flows);
  EXPECT_NEAR(b.x, 1, 0.5);
  EXPECT_NEAR(b.y, 0, 0.5);
}

TEST(UpdateBox, TooFewPointsLosesTrack) {
  TrackerState st;
  st.box = BBox(0, 0, 20, 20);
  std::vector<Flow> flows{{{1, 1}, {2, 2}, true}, {{3, 3}, {4, 4}, true}, {{5, 5}, {6, 6}, false}};
  EXPECT_THROW(update_box(st, flows), Error);
}

TEST(Check, IouGate) {
  EXPECT_TRUE(check(BBox(0, 0, 10, 10), BBox(0, 0, 10, 10), 0.5));
  EXPECT_FALSE(check(BBox(0, 0, 10, 10), BBox(5, 0, 10, 10), 0.5));
}

TEST(Klt, FollowsTranslationAndReinitialises) {
  const BBox start(50, 30, 50, 50);
  const Frame f0 = texture(200, 140);
  KltTracker t(25, 10);
  ASSERT_TRUE(t.init(f0, start));
  for (int k = 1; k <= 10; ++k) {
    const auto b = t.track(texture(200, 140, k, 0.5 * k));
    ASSERT_TRUE(b.has_value()) << k;
    EXPECT_NEAR(b->x, start.x + k, 0.5);
    EXPECT_NEAR(b->y, start.y + 0.5 * k, 0.5);
    EXPECT_EQ(t.reinitializations(), k < 10 ? 0 : 1);
  }
}

TEST(Klt, InactiveOnFlatBox) {
  KltTracker t;
  EXPECT_FALSE(t.init(Frame(80, 80, 50), BBox(10, 10, 30, 30)));
  EXPECT_FALSE(t.track(Frame(80, 80, 50)).has_value());
}
