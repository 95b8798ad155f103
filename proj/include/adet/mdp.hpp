#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "adet/core.hpp"

namespace adet {

enum class Category { Optimal = 0, GoodEnough = 1, Unacceptable = 2 };
inline constexpr int kNumCategories = 3;

inline const char* category_name(Category c) {
  switch (c) {
    case Category::Optimal: return "optimal";
    case Category::GoodEnough: return "good_enough";
    case Category::Unacceptable: return "unacceptable";
  }
  return "?";
}

struct RewardConfig {
  double w_opt = 1.0;
  double w_ge = 10.0;
  double w_ua = -1.0;
  double alpha = 1.0;
  double c_opt = 0.9;
  double c_ge = 0.0;
  double c_ua = -0.5;  // kept for completeness; Unacceptable starts at c_ge

  void validate() const {
    if (!(w_ge > w_opt && w_opt > 0.0 && w_ua < 0.0)) throw Error("reward config: need w_ge > w_opt > 0 > w_ua");
    if (!(alpha > 0.0)) throw Error("reward config: alpha must be positive");
    if (!(c_opt > c_ge && c_ge > c_ua)) throw Error("reward config: need c_opt > c_ge > c_ua");
  }

  double weight(Category c) const {
    switch (c) {
      case Category::Optimal: return w_opt;
      case Category::GoodEnough: return w_ge;
      case Category::Unacceptable: return w_ua;
    }
    return w_ua;
  }
};

inline Category categorize(double c, const RewardConfig& cfg) {
  if (c >= cfg.c_opt) return Category::Optimal;
  if (c >= cfg.c_ge) return Category::GoodEnough;
  return Category::Unacceptable;
}

// R(s', w) = w / r(s')^alpha
inline double reward(Category c, double rel_cost, const RewardConfig& cfg) {
  if (!(rel_cost >= 1.0)) throw Error("reward: relative cost below 1");
  return cfg.weight(c) / std::pow(rel_cost, cfg.alpha);
}

// ---------------------------------------------------------------------------
// Transition model: P(category' | condition, variant)

struct TransitionLog {
  int condition = 0;
  int variant = 0;
  double score = 0.0;
};

struct TransitionModel {
  int conditions = 0;
  int variants = 0;
  std::vector<std::array<int, kNumCategories>> counts;      // [condition * variants + variant]
  std::vector<std::array<double, kNumCategories>> prob;
  std::vector<bool> observed;
  std::vector<double> rel_cost;  // per variant

  std::size_t cell(int condition, int variant) const {
    if (condition < 0 || condition >= conditions || variant < 0 || variant >= variants)
      throw Error("transition model: cell out of range");
    return static_cast<std::size_t>(condition) * static_cast<std::size_t>(variants) + static_cast<std::size_t>(variant);
  }
  double p(int condition, int variant, Category c) const { return prob[cell(condition, variant)][static_cast<int>(c)]; }
};

// Maximum likelihood with add-one smoothing; cells without observations are
// flagged and uniform.
inline TransitionModel estimate_transitions(std::span<const TransitionLog> logs, int conditions,
                                            std::span<const double> rel_cost, const RewardConfig& cfg) {
  if (logs.empty()) throw Error("estimate_transitions: no logs");
  if (conditions < 1 || rel_cost.empty()) throw Error("estimate_transitions: empty state space");
  TransitionModel tm;
  tm.conditions = conditions;
  tm.variants = static_cast<int>(rel_cost.size());
  tm.rel_cost.assign(rel_cost.begin(), rel_cost.end());
  const std::size_t n = static_cast<std::size_t>(conditions) * rel_cost.size();
  tm.counts.assign(n, {0, 0, 0});
  tm.prob.assign(n, {0.0, 0.0, 0.0});
  tm.observed.assign(n, false);
  for (const auto& l : logs) tm.counts[tm.cell(l.condition, l.variant)][static_cast<int>(categorize(l.score, cfg))]++;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = tm.counts[i];
    const int total = c[0] + c[1] + c[2];
    tm.observed[i] = total > 0;
    for (int k = 0; k < kNumCategories; ++k)
      tm.prob[i][static_cast<std::size_t>(k)] = static_cast<double>(c[static_cast<std::size_t>(k)] + 1) / (total + kNumCategories);
  }
  return tm;
}

// ---------------------------------------------------------------------------
// States, policy, solver

struct MdpState {
  Category category = Category::GoodEnough;
  int variant = 0;
  int condition = 0;

  bool operator==(const MdpState&) const = default;
};

inline std::string state_name(const MdpState& s) {
  return std::string(category_name(s.category)) + "/v" + std::to_string(s.variant) + "/q" + std::to_string(s.condition);
}

// Actions open in a state. An Unacceptable result may only be answered by
// escalating to a costlier variant (or staying on the costliest); other
// states may pick any variant.
inline std::vector<int> admissible_actions(const MdpState& s, int variants) {
  std::vector<int> a;
  if (s.category == Category::Unacceptable) {
    for (int v = s.variant + 1; v < variants; ++v) a.push_back(v);
    if (a.empty()) a.push_back(variants - 1);
  } else {
    for (int v = 0; v < variants; ++v) a.push_back(v);
  }
  return a;
}

struct Policy {
  int conditions = 0;
  int variants = 0;
  double gamma = 0.9;
  std::vector<int> action;    // per state
  std::vector<double> value;  // per state
  std::vector<double> residuals;  // max-norm Bellman residual per sweep

  std::size_t size() const { return action.size(); }

  bool contains(const MdpState& s) const {
    return s.condition >= 0 && s.condition < conditions && s.variant >= 0 && s.variant < variants &&
           static_cast<int>(s.category) >= 0 && static_cast<int>(s.category) < kNumCategories;
  }

  std::size_t index(const MdpState& s) const {
    if (!contains(s)) throw Error("state outside trained space");
    return (static_cast<std::size_t>(s.condition) * static_cast<std::size_t>(variants) + static_cast<std::size_t>(s.variant)) *
               kNumCategories +
           static_cast<std::size_t>(s.category);
  }

  MdpState state(std::size_t i) const {
    MdpState s;
    s.category = static_cast<Category>(i % kNumCategories);
    s.variant = static_cast<int>((i / kNumCategories) % static_cast<std::size_t>(variants));
    s.condition = static_cast<int>(i / kNumCategories / static_cast<std::size_t>(variants));
    return s;
  }
};

// Expected reward plus discounted value of taking variant a in condition q.
inline double q_value(const TransitionModel& tm, const RewardConfig& cfg, double gamma, const Policy& shape,
                      std::span<const double> value, int condition, int a) {
  double q = 0.0;
  for (int k = 0; k < kNumCategories; ++k) {
    const auto c = static_cast<Category>(k);
    const double next = value[shape.index({c, a, condition})];
    q += tm.p(condition, a, c) * (reward(c, tm.rel_cost[static_cast<std::size_t>(a)], cfg) + gamma * next);
  }
  return q;
}

// Value iteration to a max-norm residual below tol; greedy actions with ties
// to the lower variant index.
inline Policy solve(const TransitionModel& tm, const RewardConfig& cfg, double gamma, double tol,
                    int max_sweeps = 1000000) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw Error("solve: gamma must lie in [0,1)");
  if (!(tol > 0.0)) throw Error("solve: tolerance must be positive");
  Policy pol;
  pol.conditions = tm.conditions;
  pol.variants = tm.variants;
  pol.gamma = gamma;
  const std::size_t n = static_cast<std::size_t>(tm.conditions) * static_cast<std::size_t>(tm.variants) * kNumCategories;
  pol.value.assign(n, 0.0);
  pol.action.assign(n, 0);
  std::vector<double> next(n);

  auto sweep = [&](std::span<const double> v, std::vector<double>& out, std::vector<int>* act) {
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const MdpState s = pol.state(i);
      double best = -std::numeric_limits<double>::infinity();
      int arg = -1;
      for (int a : admissible_actions(s, tm.variants)) {
        const double q = q_value(tm, cfg, gamma, pol, v, s.condition, a);
        if (q > best) {
          best = q;
          arg = a;
        }
      }
      out[i] = best;
      if (act) (*act)[i] = arg;
      residual = std::max(residual, std::abs(best - v[i]));
    }
    return residual;
  };

  for (int it = 0; it < max_sweeps; ++it) {
    const double r = sweep(pol.value, next, nullptr);
    pol.residuals.push_back(r);
    pol.value.swap(next);
    if (r < tol) break;
  }
  if (pol.residuals.back() >= tol) throw Error("solve: value iteration did not converge");
  sweep(pol.value, next, &pol.action);
  return pol;
}

// Largest amount by which some admissible action's one-step lookahead beats
// the stored action's. Zero for a greedy policy.
inline double greediness_gap(const Policy& pol, const TransitionModel& tm, const RewardConfig& cfg) {
  double gap = 0.0;
  for (std::size_t i = 0; i < pol.size(); ++i) {
    const MdpState s = pol.state(i);
    const double chosen = q_value(tm, cfg, pol.gamma, pol, pol.value, s.condition, pol.action[i]);
    for (int a : admissible_actions(s, tm.variants))
      gap = std::max(gap, q_value(tm, cfg, pol.gamma, pol, pol.value, s.condition, a) - chosen);
  }
  return gap;
}

inline int select(const Policy& pol, const MdpState& s) { return pol.action[pol.index(s)]; }

// ---------------------------------------------------------------------------
// Scene condition

// Mean squared central-difference gradient on a 4x point-decimated frame,
// divided by the squared mean intensity so that dim scenes do not read as
// plain ones.
inline double condition_statistic(const Frame& f) {
  constexpr int step = 4;
  double energy = 0.0, level = 0.0;
  std::size_t n = 0;
  for (int y = step; y + step < f.height(); y += step) {
    for (int x = step; x + step < f.width(); x += step) {
      const double gx = static_cast<double>(f.at(x + step, y)) - f.at(x - step, y);
      const double gy = static_cast<double>(f.at(x, y + step)) - f.at(x, y - step);
      energy += gx * gx + gy * gy;
      level += f.at(x, y);
      ++n;
    }
  }
  if (n == 0 || level <= 0.0) return 0.0;
  const double mean = level / static_cast<double>(n);
  return energy / static_cast<double>(n) / (mean * mean);
}

// Low / medium / high buckets split at the terciles of a profiling corpus.
struct ConditionBuckets {
  std::array<double, 2> edges{0.0, 0.0};

  static constexpr int count() { return 3; }

  int bucket(double stat) const {
    if (stat < edges[0]) return 0;
    if (stat < edges[1]) return 1;
    return 2;
  }

  static ConditionBuckets fit(std::vector<double> stats) {
    if (stats.empty()) throw Error("condition buckets: no samples");
    std::sort(stats.begin(), stats.end());
    auto quantile = [&](double q) {
      const double pos = q * static_cast<double>(stats.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const auto hi = std::min(lo + 1, stats.size() - 1);
      return stats[lo] + (pos - static_cast<double>(lo)) * (stats[hi] - stats[lo]);
    };
    ConditionBuckets b;
    b.edges = {quantile(1.0 / 3.0), quantile(2.0 / 3.0)};
    return b;
  }
};

}  // namespace adet
