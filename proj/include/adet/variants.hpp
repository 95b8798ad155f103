#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "adet/core.hpp"
#include "adet/corpus.hpp"
#include "adet/cost_model.hpp"
#include "adet/detector.hpp"
#include "adet/training.hpp"

namespace adet {

enum class VariantKind { Feature, Compressed };
enum class Quantization { None, Int8 };

inline const char* kind_name(VariantKind k) { return k == VariantKind::Feature ? "feature" : "compressed"; }
inline const char* quantization_name(Quantization q) { return q == Quantization::None ? "none" : "int8"; }
inline Quantization parse_quantization(const std::string& s) {
  if (s == "none") return Quantization::None;
  if (s == "int8") return Quantization::Int8;
  throw Error("unknown quantization: " + s);
}

// One point of the detector design space: a feature tuple, or a compressed
// form (Q, Omega, L) of a base tuple's models.
struct VariantSpec {
  VariantKind kind = VariantKind::Feature;
  FeatureParams params;
  Quantization quant = Quantization::None;
  double prune = 0.0;  // Omega
  int layers_removed = 0;  // L, metadata only

  bool operator==(const VariantSpec&) const = default;

  void validate() const {
    if (prune < 0.0 || prune > 1.0) throw Error("variant: pruned fraction outside [0,1]");
    if (layers_removed < 0) throw Error("variant: negative layer count");
    if (kind == VariantKind::Feature && (quant != Quantization::None || prune != 0.0 || layers_removed != 0))
      throw Error("variant: feature kind carries compression");
  }

  std::string name() const {
    std::ostringstream os;
    os << params.str();
    if (kind == VariantKind::Compressed) os << "/Q=" << quantization_name(quant) << ",O=" << prune << ",L=" << layers_removed;
    return os.str();
  }
};

struct VariantProfile {
  VariantSpec spec;
  double accuracy = 0.0;  // F1 at IoU 0.5
  double latency = 0.0;   // seconds per frame, deterministic channel
  double rel_cost = 1.0;
  int index = -1;             // position in the catalog
};

// ---------------------------------------------------------------------------
// Compression

inline constexpr int kInt8Min = -128;
inline constexpr int kInt8Max = 127;

struct QuantizedModel {
  std::vector<std::int8_t> qweights;
  double scale = 1.0;
  int zero_point = 0;
  double bias = 0.0;
};

// round(x / scale + zero_point), half away from zero, clamped to int8.
inline std::vector<std::int8_t> quantize(std::span<const double> x, double scale, int zero_point) {
  if (!(scale > 0.0)) throw Error("quantize: scale must be positive");
  std::vector<std::int8_t> q(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = std::round(x[i] / scale + zero_point);
    q[i] = static_cast<std::int8_t>(std::clamp(v, static_cast<double>(kInt8Min), static_cast<double>(kInt8Max)));
  }
  return q;
}

inline std::vector<double> dequantize(std::span<const std::int8_t> q, double scale, int zero_point) {
  if (!(scale > 0.0)) throw Error("dequantize: scale must be positive");
  std::vector<double> x(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) x[i] = (static_cast<double>(q[i]) - zero_point) * scale;
  return x;
}

// Zeroes the floor(omega * n) smallest-magnitude weights, ties to lower index.
inline std::vector<double> prune_global(std::span<const double> w, double omega) {
  if (omega < 0.0 || omega > 1.0) throw Error("prune: fraction outside [0,1]");
  std::vector<double> out(w.begin(), w.end());
  const auto k = static_cast<std::size_t>(std::floor(omega * static_cast<double>(w.size())));
  if (k == 0) return out;
  std::vector<std::size_t> order(w.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(w[a]) < std::abs(w[b]); });
  for (std::size_t i = 0; i < k; ++i) out[order[i]] = 0.0;
  return out;
}

// Symmetric per-vector scheme: scale = max|w| / 127, zero point 0.
inline QuantizedModel quantize_model(const LinearModel& m) {
  double mx = 0.0;
  for (double v : m.weights) mx = std::max(mx, std::abs(v));
  QuantizedModel q;
  q.scale = mx > 0.0 ? mx / kInt8Max : 1.0;
  q.zero_point = 0;
  q.qweights = quantize(m.weights, q.scale, q.zero_point);
  q.bias = m.bias;
  return q;
}

// The model actually scored by a compressed variant: prune, then quantize.
inline LinearModel compress(const LinearModel& m, Quantization quant, double omega) {
  LinearModel out = m;
  out.weights = prune_global(m.weights, omega);
  if (quant == Quantization::Int8) {
    const QuantizedModel q = quantize_model(out);
    out.weights = dequantize(q.qweights, q.scale, q.zero_point);
  }
  return out;
}

inline double weight_density(std::span<const LinearModel> models) {
  std::size_t nz = 0, n = 0;
  for (const auto& m : models) {
    n += m.weights.size();
    for (double v : m.weights) nz += v != 0.0 ? 1 : 0;
  }
  return n == 0 ? 0.0 : static_cast<double>(nz) / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Catalog

struct CatalogGrid {
  std::vector<int> proposals = {50, 200, 800, 2000};
  std::vector<int> blocks = {1, 2};
  std::vector<int> cells = {4, 8, 16};
  std::vector<int> bins = {6, 9};
  std::vector<Quantization> quants = {Quantization::None, Quantization::Int8};
  std::vector<double> prunes = {0.0, 0.3, 0.5, 0.8};
};

// Variants index into shared model sets: one set per (block, cell, bins)
// point, plus one per compression point.
struct Catalog {
  std::vector<VariantSpec> specs;
  std::vector<int> model_set;  // per variant
  std::vector<std::vector<LinearModel>> sets;
  std::vector<FeatureParams> set_params;  // features each set was trained on
  int best_set = -1;                      // base of the compressed variants

  std::size_t size() const { return specs.size(); }
  std::span<const LinearModel> models(std::size_t v) const { return sets.at(static_cast<std::size_t>(model_set.at(v))); }
  int classes() const { return sets.empty() ? 0 : static_cast<int>(sets.front().size()); }
};

inline double variant_cost(const Catalog& cat, std::size_t v, int width, int height, const CostModel& cm = {}) {
  const auto& spec = cat.specs.at(v);
  return cm.detect_seconds(width, height, kFeatureWindow, spec.params, cat.classes(), weight_density(cat.models(v)),
                           spec.quant == Quantization::Int8);
}

inline double mean_train_accuracy(std::span<const LinearModel> models) {
  double s = 0.0;
  for (const auto& m : models) s += m.train_accuracy;
  return models.empty() ? 0.0 : s / static_cast<double>(models.size());
}

// Adds the compressed variants of the best feature point (highest mean
// training accuracy, ties to the cheaper per-proposal cost) at the largest
// proposal budget.
inline void add_compressed_variants(Catalog& cat, const CatalogGrid& grid, const CostModel& cm = {}) {
  if (cat.sets.empty()) throw Error("catalog: no feature variants");
  int best = 0;
  for (int s = 1; s < static_cast<int>(cat.sets.size()); ++s) {
    const double a = mean_train_accuracy(cat.sets[static_cast<std::size_t>(s)]);
    const double b = mean_train_accuracy(cat.sets[static_cast<std::size_t>(best)]);
    const double ca = cm.proposal_units(kFeatureWindow, cat.set_params[static_cast<std::size_t>(s)], cat.classes());
    const double cb = cm.proposal_units(kFeatureWindow, cat.set_params[static_cast<std::size_t>(best)], cat.classes());
    if (a > b || (a == b && ca < cb)) best = s;
  }
  cat.best_set = best;
  const int budget = *std::max_element(grid.proposals.begin(), grid.proposals.end());
  const std::vector<LinearModel> base = cat.sets[static_cast<std::size_t>(best)];
  for (Quantization q : grid.quants) {
    for (double omega : grid.prunes) {
      VariantSpec spec;
      spec.kind = VariantKind::Compressed;
      spec.params = cat.set_params[static_cast<std::size_t>(best)];
      spec.params.proposals = budget;
      spec.quant = q;
      spec.prune = omega;
      std::vector<LinearModel> set;
      for (const auto& m : base) set.push_back(compress(m, q, omega));
      cat.sets.push_back(std::move(set));
      cat.set_params.push_back(spec.params);
      cat.model_set.push_back(static_cast<int>(cat.sets.size()) - 1);
      cat.specs.push_back(spec);
    }
  }
}

// Trains one model set per (block, cell, bins) point and derives the
// compressed variants. Catalog size = |feature grid| + |compression grid|.
inline Catalog build_catalog(const TrainingSet& ts, const CatalogGrid& grid, const ModelTrainingConfig& cfg,
                             std::uint64_t seed, const CostModel& cm = {}) {
  Catalog cat;
  for (int b : grid.blocks) {
    for (int c : grid.cells) {
      for (int h : grid.bins) {
        FeatureParams p{kMaxProposals, b, c, h};
        if (!params_valid_for(kFeatureWindow, p)) continue;
        const auto set_seed = derive_seed(seed, p.str());
        cat.sets.push_back(train_class_models(ts, p, cfg, set_seed));
        cat.set_params.push_back(p);
        const int set = static_cast<int>(cat.sets.size()) - 1;
        for (int bb : grid.proposals) {
          VariantSpec spec;
          spec.params = {bb, b, c, h};
          cat.specs.push_back(spec);
          cat.model_set.push_back(set);
        }
      }
    }
  }
  add_compressed_variants(cat, grid, cm);
  return cat;
}

// ---------------------------------------------------------------------------
// Profiling

struct DetectionCounts {
  int tp = 0;
  int fp = 0;
  int fn = 0;

  double f1() const {
    const int d = 2 * tp + fp + fn;
    return d == 0 ? 1.0 : 2.0 * tp / d;
  }
};

inline bool detection_correct(const Detection& d, const std::optional<GroundTruth>& truth, double iou_min = 0.5) {
  return truth && !d.degenerate && d.label == truth->label && iou(d.box, truth->box) >= iou_min;
}

// Standard accounting: a reported detection is a true positive when it
// matches the truth, otherwise a false positive; an unmatched truth is a
// false negative.
inline void tally(DetectionCounts& c, const Detection& d, const std::optional<GroundTruth>& truth, double threshold,
                  double iou_min = 0.5) {
  const bool reported = !d.degenerate && d.confidence >= threshold;
  const bool ok = reported && detection_correct(d, truth, iou_min);
  if (ok) {
    ++c.tp;
  } else {
    if (reported) ++c.fp;
    if (truth) ++c.fn;
  }
}

// Every variant's detection on every frame.
struct ProfileRun {
  std::vector<VariantProfile> profiles;
  std::vector<std::vector<Detection>> detections;  // [variant][frame]
};

// Runs every variant over the corpus. Proposals are ranked once per frame,
// each proposal is cropped once and its features computed once per feature
// point; each variant's result is the running best over its proposal
// prefix, which equals what detect() returns for that variant.
inline std::vector<std::vector<Detection>> detect_all(const Catalog& cat, std::span<const Frame> frames) {
  const std::size_t nv = cat.size();
  std::vector<std::vector<Detection>> out(nv, std::vector<Detection>(frames.size()));

  struct Group {
    FeatureParams params;
    std::vector<int> sets;
    std::vector<std::size_t> slots;  // running-best index per set
    std::vector<double> feat;
  };
  std::vector<Group> groups;
  std::vector<std::size_t> slot(nv);  // running-best index per variant
  std::size_t slots = 0;
  for (std::size_t v = 0; v < nv; ++v) {
    const auto& p = cat.specs[v].params;
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) { return g.params.same_features(p); });
    if (it == groups.end()) {
      groups.push_back({p, {}, {}, std::vector<double>(feature_length(kFeatureWindow, p))});
      it = groups.end() - 1;
    }
    auto sit = std::find(it->sets.begin(), it->sets.end(), cat.model_set[v]);
    if (sit == it->sets.end()) {
      it->sets.push_back(cat.model_set[v]);
      it->slots.push_back(slots++);
      slot[v] = it->slots.back();
    } else {
      slot[v] = it->slots[static_cast<std::size_t>(sit - it->sets.begin())];
    }
  }
  int budget = 1;
  for (const auto& s : cat.specs) budget = std::max(budget, s.params.proposals);

  // Variants ordered by proposal budget so each prefix is recorded once.
  std::vector<std::size_t> by_budget(nv);
  std::iota(by_budget.begin(), by_budget.end(), std::size_t{0});
  std::stable_sort(by_budget.begin(), by_budget.end(),
                   [&](std::size_t a, std::size_t b) { return cat.specs[a].params.proposals < cat.specs[b].params.proposals; });

  std::vector<std::uint8_t> patch;
  std::vector<float> scratch;
  PatchGradients grad;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto ranked = rank_proposals(frames[f], budget);
    std::vector<Detection> best(slots);
    for (auto& b : best) b.degenerate = true;
    std::size_t next = 0;
    auto record = [&](std::size_t upto) {
      while (next < nv) {
        const std::size_t v = by_budget[next];
        const auto n = std::min(ranked.size(), static_cast<std::size_t>(cat.specs[v].params.proposals));
        if (n > upto) break;
        out[v][f] = best[slot[v]];
        ++next;
      }
    };
    record(0);
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      crop_resize_into(frames[f], ranked[i].box, kFeatureWindow, patch);
      gradients_into(patch, kFeatureWindow, grad);
      for (auto& g : groups) {
        hog_from_gradients(grad, kFeatureWindow, g.params, g.feat, scratch);
        for (std::size_t si = 0; si < g.sets.size(); ++si) {
          Detection& b = best[g.slots[si]];
          for (const auto& m : cat.sets[static_cast<std::size_t>(g.sets[si])]) {
            const double s = score(m, g.feat);
            if (b.degenerate || s > b.confidence) {
              b.box = ranked[i].box;
              b.confidence = s;
              b.label = m.label;
              b.degenerate = false;
            }
          }
        }
      }
      record(i + 1);
    }
  }
  return out;
}

inline std::vector<VariantProfile> summarize_profiles(const Catalog& cat, const std::vector<std::vector<Detection>>& dets,
                                                      std::span<const std::optional<GroundTruth>> truth, int width,
                                                      int height, double threshold, const CostModel& cm = {}) {
  if (truth.empty()) throw Error("profile: empty corpus");
  std::vector<VariantProfile> out;
  double min_latency = std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < cat.size(); ++v) {
    VariantProfile p;
    p.spec = cat.specs[v];
    p.index = static_cast<int>(v);
    DetectionCounts c;
    for (std::size_t f = 0; f < truth.size(); ++f) tally(c, dets[v][f], truth[f], threshold);
    p.accuracy = c.f1();
    p.latency = variant_cost(cat, v, width, height, cm);
    min_latency = std::min(min_latency, p.latency);
    out.push_back(p);
  }
  for (auto& p : out) p.rel_cost = p.latency / min_latency;
  return out;
}

inline ProfileRun profile(const Catalog& cat, std::span<const LabeledFrame> corpus, double threshold = 0.0,
                          const CostModel& cm = {}) {
  if (corpus.empty()) throw Error("profile: empty corpus");
  std::vector<Frame> frames;
  std::vector<std::optional<GroundTruth>> truth;
  for (const auto& lf : corpus) {
    frames.push_back(lf.frame);
    truth.push_back(lf.truth);
  }
  ProfileRun run;
  run.detections = detect_all(cat, frames);
  run.profiles = summarize_profiles(cat, run.detections, truth, frames.front().width(), frames.front().height(), threshold, cm);
  return run;
}

// ---------------------------------------------------------------------------
// Pareto frontier

inline bool dominates(const VariantProfile& a, const VariantProfile& b) {
  return a.accuracy >= b.accuracy && a.latency <= b.latency && (a.accuracy > b.accuracy || a.latency < b.latency);
}

// Non-dominated profiles in ascending latency (ties: higher accuracy, then
// input order).
inline std::vector<VariantProfile> pareto_frontier(std::span<const VariantProfile> profiles) {
  if (profiles.empty()) throw Error("pareto: empty profile list");
  std::vector<std::size_t> order(profiles.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (profiles[a].latency != profiles[b].latency) return profiles[a].latency < profiles[b].latency;
    return profiles[a].accuracy > profiles[b].accuracy;
  });
  std::vector<VariantProfile> out;
  double best_acc = -std::numeric_limits<double>::infinity();
  double best_lat = 0.0;
  for (std::size_t i : order) {
    const auto& p = profiles[i];
    // Sorted by latency: p is dominated iff an earlier profile beats its
    // accuracy, or matches it at strictly lower latency.
    if (p.accuracy < best_acc || (p.accuracy == best_acc && best_lat < p.latency)) continue;
    out.push_back(p);
    if (p.accuracy > best_acc) {
      best_acc = p.accuracy;
      best_lat = p.latency;
    }
  }
  return out;
}

}  // namespace adet
