#include <gtest/gtest.h>

#include "adet/adet.hpp"

using namespace adet;

TEST(Config, FileOverridesDefaults) {
  ExperimentConfig c;
  apply_config(Json::parse(R"({
    "seed": 7,
    "corpora": {"bench_sequences": 4},
    "solve": {"gamma": 0.8, "reward": {"w_ua": -3}},
    "controller": {"score_threshold": 0.25},
    "maze": {"seeds": 2, "difficulties": ["easy"], "strategies": ["mdp_tracker"]}
  })"),
               c);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.bench_sequences, 4);
  EXPECT_EQ(c.profile_sequences, ExperimentConfig{}.profile_sequences);
  EXPECT_DOUBLE_EQ(c.solve.gamma, 0.8);
  EXPECT_DOUBLE_EQ(c.solve.reward.w_ua, -3.0);
  EXPECT_DOUBLE_EQ(c.solve.reward.w_ge, RewardConfig{}.w_ge);
  EXPECT_DOUBLE_EQ(c.nav.score_threshold, 0.25);
  EXPECT_EQ(c.maze_seeds, 2);
  EXPECT_EQ(c.mazes, std::vector<Difficulty>{Difficulty::Easy});
  EXPECT_EQ(c.maze_strategies, std::vector<Strategy>{Strategy::MdpTracker});
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  ExperimentConfig c;
  EXPECT_THROW(apply_config(Json::parse(R"({"sed": 1})"), c), Error);
  EXPECT_THROW(apply_config(Json::parse(R"([1])"), c), Error);
  EXPECT_THROW(apply_config(Json::parse(R"({"solve": {"reward": {"w_ua": 1}}})"), c), Error);
  EXPECT_THROW(apply_config(Json::parse(R"({"maze": {"difficulties": ["extreme"]}})"), c), Error);
  ExperimentConfig d;
  d.maze_seeds = 0;
  EXPECT_THROW(d.validate(), Error);
}

TEST(Config, StageSeedsDifferAndFollowTheRoot) {
  ExperimentConfig a, b;
  b.seed = 2;
  EXPECT_NE(a.stage_seed("models"), a.stage_seed("controller"));
  EXPECT_NE(a.stage_seed("models"), b.stage_seed("models"));
  EXPECT_NE(maze_seed(a, 0), maze_seed(a, 1));
  EXPECT_EQ(a.corpus("bench", 2).seed, a.corpus("bench", 5).seed);
  EXPECT_NE(a.corpus("bench", 2).seed, a.corpus("heldout", 2).seed);
}

TEST(Corpus, CrossProductAndBounds) {
  CorpusConfig cc;
  cc.sequences_per_condition = 10;
  cc.frames_per_sequence = 4;
  const auto specs = make_corpus(cc);
  EXPECT_EQ(specs.size(), 60u);
  int per_cell[3][2] = {};
  for (const auto& s : specs) {
    ++per_cell[s.clutter_bucket][s.illumination_bucket];
    const SequenceRenderer r(s);
    for (int t = 0; t < s.frames; ++t) {
      const auto lf = r.frame(t);
      if (!lf.truth) continue;
      EXPECT_GE(lf.truth->box.x, 0.0);
      EXPECT_GE(lf.truth->box.y, 0.0);
      EXPECT_LE(lf.truth->box.right(), lf.frame.width());
      EXPECT_LE(lf.truth->box.bottom(), lf.frame.height());
    }
  }
  for (auto& row : per_cell)
    for (int n : row) EXPECT_EQ(n, 10);
}

TEST(Corpus, RenderingIsDeterministic) {
  CorpusConfig cc;
  cc.sequences_per_condition = 1;
  const auto a = make_corpus(cc), b = make_corpus(cc);
  const auto fa = SequenceRenderer(a[3]).frame(5), fb = SequenceRenderer(b[3]).frame(5);
  EXPECT_EQ(fa.frame.pixels().size(), fb.frame.pixels().size());
  EXPECT_TRUE(std::equal(fa.frame.pixels().begin(), fa.frame.pixels().end(), fb.frame.pixels().begin()));
}

TEST(Io, SequenceAndDetectionRoundTrip) {
  CorpusConfig cc;
  cc.sequences_per_condition = 1;
  for (const auto& s : make_corpus(cc)) {
    const SequenceSpec r = sequence_from_json(to_json(s));
    EXPECT_EQ(r.seed, s.seed);
    EXPECT_EQ(r.start_depth, s.start_depth);
    EXPECT_EQ(r.drift, s.drift);
    EXPECT_EQ(r.cls, s.cls);
  }
  Detection d;
  d.box = BBox(1.0 / 3.0, 2.5, 10.125, 7.0);
  d.confidence = -0.1;
  d.label = 4;
  const Detection e = detection_from_json(to_json(d));
  EXPECT_EQ(e.box, d.box);
  EXPECT_EQ(e.confidence, d.confidence);
  EXPECT_EQ(e.label, 4);
  Detection none;
  none.degenerate = true;
  EXPECT_TRUE(detection_from_json(to_json(none)).degenerate);
}

TEST(Io, PolicyRoundTrip) {
  TransitionModel tm;
  tm.conditions = 2;
  tm.variants = 2;
  tm.rel_cost = {1.0, 3.0};
  tm.counts = {{3, 1, 0}, {0, 2, 2}, {1, 1, 1}, {4, 0, 0}};
  tm.observed = {true, true, true, true};
  for (const auto& c : tm.counts) {
    const double n = c[0] + c[1] + c[2] + 3.0;
    tm.prob.push_back({(c[0] + 1) / n, (c[1] + 1) / n, (c[2] + 1) / n});
  }
  PolicyDocument d;
  d.frontier = {4, 9};
  d.rel_cost = tm.rel_cost;
  d.buckets.edges = {0.1, 0.3};
  d.transitions = tm;
  d.policy = solve(tm, d.reward, 0.9, 1e-10);
  const PolicyDocument r = policy_from_json(policy_to_json(d));
  EXPECT_EQ(r.frontier, d.frontier);
  EXPECT_EQ(r.policy.action, d.policy.action);
  EXPECT_EQ(r.policy.value, d.policy.value);
  EXPECT_EQ(r.transitions.prob, d.transitions.prob);
  EXPECT_EQ(policy_to_json(r).dump(), policy_to_json(d).dump());
}

TEST(Reports, CsvQuotingAndJsonMirror) {
  const Table t{{"a", "b"}, {{"1", "x,y"}, {"2", "say \"hi\""}}};
  EXPECT_EQ(t.csv(), "a,b\n1,\"x,y\"\n2,\"say \"\"hi\"\"\"\n");
  const Json j = t.json();
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[0]["b"], "x,y");
}

TEST(Reports, RelativeDeviation) {
  const std::vector<double> xs{2.0, 4.0};
  const auto [m, d] = mean_and_relative_deviation(xs);
  EXPECT_DOUBLE_EQ(m, 3.0);
  EXPECT_DOUBLE_EQ(d, 100.0 / 3.0);  // population std 1 over mean 3
  const std::vector<double> one{5.0};
  EXPECT_DOUBLE_EQ(mean_and_relative_deviation(one).second, 0.0);
  EXPECT_EQ(plus_minus(1.94, 6.42, 1), "1.9 ± 6.4%");
}
