#pragma once

#include <limits>
#include <span>
#include <vector>

#include "adet/controller.hpp"
#include "adet/corpus.hpp"
#include "adet/io.hpp"
#include "adet/mdp.hpp"
#include "adet/variants.hpp"

namespace adet {

// Profiling logs for the transition model. A detection that misses the
// ground truth is logged as Unacceptable whatever its score, so the model
// learns how often a variant is right, not only how sure it is.
inline std::vector<TransitionLog> transition_logs(const ProfileRun& run, std::span<const int> frontier,
                                                  std::span<const LabeledFrame> corpus, const ConditionBuckets& buckets) {
  std::vector<TransitionLog> logs;
  std::vector<int> cond;
  for (const auto& lf : corpus) cond.push_back(buckets.bucket(condition_statistic(lf.frame)));
  for (std::size_t a = 0; a < frontier.size(); ++a) {
    const auto& dets = run.detections.at(static_cast<std::size_t>(frontier[a]));
    for (std::size_t f = 0; f < corpus.size(); ++f) {
      const Detection& d = dets[f];
      const double s = detection_correct(d, corpus[f].truth) ? d.confidence : -std::numeric_limits<double>::infinity();
      logs.push_back({cond[f], static_cast<int>(a), s});
    }
  }
  return logs;
}

struct SolveConfig {
  RewardConfig reward;
  double gamma = 0.9;
  double tol = 1e-8;
};

inline PolicyDocument build_policy(const ProfileRun& run, std::span<const LabeledFrame> corpus, const SolveConfig& cfg) {
  PolicyDocument d;
  d.reward = cfg.reward;
  d.reward.validate();
  for (const auto& p : pareto_frontier(run.profiles)) {
    d.frontier.push_back(p.index);
    d.rel_cost.push_back(p.rel_cost);
  }
  std::vector<double> stats;
  for (const auto& lf : corpus) stats.push_back(condition_statistic(lf.frame));
  d.buckets = ConditionBuckets::fit(stats);
  const auto logs = transition_logs(run, d.frontier, corpus, d.buckets);
  d.transitions = estimate_transitions(logs, ConditionBuckets::count(), d.rel_cost, d.reward);
  d.policy = solve(d.transitions, d.reward, cfg.gamma, cfg.tol);
  return d;
}

inline ControllerAssets make_assets(const Catalog& cat, const PolicyDocument& doc, const CostModel& cm = {}) {
  ControllerAssets a;
  for (int v : doc.frontier) a.frontier.push_back(make_detector_variant(cat, static_cast<std::size_t>(v)));
  a.baseline = make_static_variant(cat);
  a.policy = doc.policy;
  a.buckets = doc.buckets;
  a.cost = cm;
  return a;
}

inline std::vector<LabeledFrame> render_corpus(std::span<const SequenceSpec> specs, int stride = 1, Camera cam = {}) {
  std::vector<LabeledFrame> out;
  for (const auto& s : specs) {
    SequenceRenderer r(s, cam);
    for (int t = 0; t < s.frames; t += stride) out.push_back(r.frame(t));
  }
  return out;
}

}  // namespace adet
