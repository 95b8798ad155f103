#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include "adet/controller.hpp"

using namespace adet;

namespace {

// Class models with zero weights: the confidence is the bias of the best
// class whatever the patch.
DetectorVariant constant_variant(const FeatureParams& p, double bias) {
  DetectorVariant d;
  d.name = p.str();
  d.params = p;
  for (int c = 0; c < kNumSignClasses; ++c) {
    LinearModel m;
    m.params = p;
    m.label = c;
    m.weights.assign(feature_length(kFeatureWindow, p), 0.0);
    m.bias = c == 1 ? bias : bias - 1.0;
    d.models.push_back(m);
  }
  return d;
}

ControllerAssets toy_assets() {
  ControllerAssets a;
  a.frontier.push_back(constant_variant({20, 2, 8, 9}, 0.5));
  a.frontier.push_back(constant_variant({60, 2, 8, 9}, 0.5));
  a.baseline = constant_variant(kStaticParams, 0.5);
  TransitionModel tm;
  tm.conditions = 3;
  tm.variants = 2;
  tm.rel_cost = {1.0, 2.5};
  tm.counts.assign(6, {0, 0, 0});
  tm.observed.assign(6, true);
  tm.prob = {{0.1, 0.6, 0.3}, {0.2, 0.7, 0.1}, {0.1, 0.8, 0.1}, {0.2, 0.7, 0.1}, {0.0, 0.2, 0.8}, {0.3, 0.6, 0.1}};
  a.policy = solve(tm, RewardConfig{}, 0.9, 1e-10);
  a.buckets.edges = {0.05, 0.2};
  return a;
}

Frame textured(int k) {
  Frame f(160, 120, 0, k);
  for (int y = 0; y < 120; ++y)
    for (int x = 0; x < 160; ++x) {
      const double u = x - k, v = y;
      const double s = std::sin(0.31 * u) + std::cos(0.23 * v) + std::sin(0.17 * u + 0.29 * v);
      f.at(x, y) = static_cast<std::uint8_t>(std::lround(128.0 + 35.0 * s));
    }
  return f;
}

std::vector<Frame> stream(int n) {
  std::vector<Frame> out;
  for (int k = 0; k < n; ++k) out.push_back(textured(k));
  return out;
}

ControllerConfig config(Strategy s) {
  ControllerConfig c;
  c.strategy = s;
  c.seed = 9;
  return c;
}

}  // namespace

TEST(Strategy, NamesRoundTrip) {
  for (Strategy s : kAllStrategies) EXPECT_EQ(parse_strategy(strategy_name(s)), s);
  EXPECT_THROW(parse_strategy("fastest"), Error);
}

TEST(ControllerConfig, Validation) {
  ControllerConfig c;
  c.retrigger_mdp = 0;
  EXPECT_THROW(c.validate(), Error);
  c = ControllerConfig{};
  c.score_threshold = std::nan("");
  EXPECT_THROW(c.validate(), Error);
}

TEST(Controller, RejectsMismatchedPolicy) {
  ControllerAssets a = toy_assets();
  a.frontier.pop_back();
  EXPECT_THROW(Controller(a, config(Strategy::Mdp)), Error);
  EXPECT_NO_THROW(Controller(a, config(Strategy::Static)));
}

TEST(Controller, StaticDetectsEveryFrameAtFixedCost) {
  const ControllerAssets a = toy_assets();
  Controller c(a, config(Strategy::Static));
  const auto frames = stream(6);
  const StreamResult r = run_stream(c, frames, {});
  const double expected = a.cost.detect_seconds(160, 120, kFeatureWindow, kStaticParams, kNumSignClasses);
  for (const auto& o : r.outcomes) {
    EXPECT_EQ(o.op, OpKind::Detect);
    EXPECT_EQ(o.variant_used, kBaselineVariant);
    EXPECT_EQ(o.mdp_accesses, 0);
    EXPECT_NEAR(o.cost, expected, 1e-15);
    EXPECT_EQ(o.detection.label, 1);
    EXPECT_DOUBLE_EQ(o.detection.confidence, 0.5);
  }
  EXPECT_DOUBLE_EQ(r.metrics.detect_fraction(), 1.0);
}

TEST(Controller, MdpSelectsFrontierVariants) {
  const ControllerAssets a = toy_assets();
  ControllerConfig cfg = config(Strategy::Mdp);
  Controller c(a, cfg);
  const auto frames = stream(8);
  const StreamResult r = run_stream(c, frames, {});
  for (const auto& o : r.outcomes) {
    EXPECT_EQ(o.op, OpKind::Detect);
    EXPECT_GE(o.variant_used, 0);
    EXPECT_LT(o.variant_used, 2);
    EXPECT_GE(o.mdp_accesses, 1);
    EXPECT_LE(o.mdp_accesses, cfg.max_mdp_per_frame);
    EXPECT_GE(o.condition, 0);
    EXPECT_LT(o.condition, 3);
    ASSERT_TRUE(o.state.has_value());
  }
}

TEST(Controller, UnacceptableEscalatesWithinFrame) {
  ControllerAssets a = toy_assets();
  for (auto& v : a.frontier)
    for (auto& m : v.models) m.bias -= 2.0;  // every detection below T_c
  Controller c(a, config(Strategy::Mdp));
  const auto o = c.step(textured(0));
  EXPECT_GE(o.mdp_accesses, 2);
  ASSERT_TRUE(o.state.has_value());
  EXPECT_EQ(o.state->category, Category::Unacceptable);
  EXPECT_EQ(o.state->variant, 1);
}

TEST(Controller, TrackerSkipsDetectionUntilRetrigger) {
  const ControllerAssets a = toy_assets();
  ControllerConfig cfg = config(Strategy::MdpTracker);
  cfg.retrigger_mdp = 5;
  cfg.iou_gate = 0.3;
  Controller c(a, cfg);
  const StreamResult r = run_stream(c, stream(12), {});
  EXPECT_EQ(r.outcomes[0].op, OpKind::Detect);
  for (int k = 1; k < 5; ++k) EXPECT_EQ(r.outcomes[static_cast<std::size_t>(k)].op, OpKind::Track) << k;
  EXPECT_EQ(r.outcomes[5].op, OpKind::Detect);
  for (const auto& o : r.outcomes)
    if (o.op == OpKind::Track) {
      EXPECT_LT(o.cost, r.outcomes[0].cost);
      EXPECT_EQ(o.mdp_accesses, 0);
    }
  EXPECT_LT(r.metrics.detect_fraction(), 0.5);
}

TEST(Controller, LowConfidenceDisablesTracking) {
  ControllerAssets a = toy_assets();
  for (auto* v : {&a.baseline})
    for (auto& m : v->models) m.bias = -5.0;
  Controller c(a, config(Strategy::StaticTracker));
  const StreamResult r = run_stream(c, stream(5), {});
  for (const auto& o : r.outcomes) EXPECT_EQ(o.op, OpKind::Detect);
}

TEST(Controller, DeterministicAcrossRuns) {
  const ControllerAssets a = toy_assets();
  for (Strategy s : kAllStrategies) {
    Controller c1(a, config(s)), c2(a, config(s));
    const auto frames = stream(10);
    const auto r1 = run_stream(c1, frames, {});
    const auto r2 = run_stream(c2, frames, {});
    for (std::size_t i = 0; i < frames.size(); ++i) {
      EXPECT_EQ(r1.outcomes[i].op, r2.outcomes[i].op);
      EXPECT_EQ(r1.outcomes[i].variant_used, r2.outcomes[i].variant_used);
      EXPECT_EQ(r1.outcomes[i].cost, r2.outcomes[i].cost);
      EXPECT_EQ(r1.outcomes[i].detection.box, r2.outcomes[i].detection.box);
    }
  }
}

TEST(Controller, RandomUsesTheSeed) {
  const ControllerAssets a = toy_assets();
  auto picks = [&](std::uint64_t seed) {
    ControllerConfig cfg = config(Strategy::Random);
    cfg.seed = seed;
    Controller c(a, cfg);
    std::vector<int> v;
    for (const auto& o : run_stream(c, stream(16), {}).outcomes) v.push_back(o.variant_used);
    return v;
  };
  EXPECT_EQ(picks(1), picks(1));
  EXPECT_NE(picks(1), picks(2));
}

TEST(Controller, PipelinedEqualsSynchronous) {
  const ControllerAssets a = toy_assets();
  const auto frames = stream(9);
  Controller sync(a, config(Strategy::MdpTracker)), piped(a, config(Strategy::MdpTracker));
  const auto r = run_stream(sync, frames, {});
  std::size_t next = 0;
  const auto out = run_pipelined(piped, [&]() -> std::optional<Frame> {
    if (next == frames.size()) return std::nullopt;
    return frames[next++];
  });
  ASSERT_EQ(out.size(), frames.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i].op, r.outcomes[i].op);
    EXPECT_EQ(out[i].cost, r.outcomes[i].cost);
    EXPECT_EQ(out[i].detection.box, r.outcomes[i].detection.box);
  }
}

TEST(BoundedQueue, FifoOrderAndBackpressure) {
  BoundedQueue<int> q(2);
  std::atomic<int> pushed{0};
  std::thread producer([&] {
    for (int i = 0; i < 50; ++i) {
      q.push(i);
      pushed = i + 1;
    }
    q.close();
  });
  std::vector<int> got;
  while (auto v = q.pop()) {
    EXPECT_LE(q.size(), q.capacity());
    EXPECT_LE(pushed.load() - static_cast<int>(got.size()), 3);
    got.push_back(*v);
  }
  producer.join();
  ASSERT_EQ(got.size(), 50u);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(got[static_cast<std::size_t>(i)], i);
}

TEST(BoundedQueue, CloseSemantics) {
  BoundedQueue<int> q(3);
  q.push(1);
  q.close();
  EXPECT_EQ(q.pop(), 1);
  EXPECT_EQ(q.pop(), std::nullopt);
  EXPECT_THROW(q.push(2), Error);
  EXPECT_THROW(BoundedQueue<int>(0), Error);
}

TEST(StreamMetrics, MergeAndRatios) {
  StreamMetrics a, b;
  FrameOutcome d, t;
  d.op = OpKind::Detect;
  d.cost = 0.5;
  d.detection.degenerate = true;
  t.op = OpKind::Track;
  t.cost = 0.1;
  t.detection.degenerate = true;
  a.add(d, std::nullopt, 0.0);
  b.add(t, std::nullopt, 0.0);
  b.add(t, std::nullopt, 0.0);
  a.merge(b);
  EXPECT_EQ(a.frames, 3);
  EXPECT_NEAR(a.detect_fraction(), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(a.mean_cost(), 0.7 / 3.0, 1e-15);
  EXPECT_NEAR(a.fps(), 3.0 / 0.7, 1e-12);
}
