#pragma once

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "adet/core.hpp"
#include "adet/corpus.hpp"
#include "adet/cost_model.hpp"
#include "adet/detector.hpp"
#include "adet/mdp.hpp"
#include "adet/random.hpp"
#include "adet/tracker.hpp"
#include "adet/variants.hpp"

namespace adet {

enum class Strategy { Static, Random, Mdp, StaticTracker, MdpTracker };
inline constexpr Strategy kAllStrategies[] = {Strategy::Static, Strategy::Random, Strategy::Mdp, Strategy::StaticTracker,
                                              Strategy::MdpTracker};

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Static: return "static";
    case Strategy::Random: return "random";
    case Strategy::Mdp: return "mdp";
    case Strategy::StaticTracker: return "static_tracker";
    case Strategy::MdpTracker: return "mdp_tracker";
  }
  return "?";
}

inline Strategy parse_strategy(const std::string& s) {
  for (Strategy k : kAllStrategies)
    if (s == strategy_name(k)) return k;
  throw Error("unknown strategy: " + s);
}

inline bool uses_tracker(Strategy s) { return s == Strategy::StaticTracker || s == Strategy::MdpTracker; }
inline bool uses_mdp(Strategy s) { return s == Strategy::Mdp || s == Strategy::MdpTracker; }

inline const FeatureParams kStaticParams{1000, 2, 8, 9};

struct ControllerConfig {
  Strategy strategy = Strategy::MdpTracker;
  double score_threshold = 0.0;  // T_c
  double iou_gate = 0.5;         // theta_th
  int retrigger_mdp = 100;
  int reinit_klt = kReinitFrames;
  int max_mdp_per_frame = 5;
  std::uint64_t seed = 1;
  RewardConfig reward;

  void validate() const {
    if (retrigger_mdp < 1 || reinit_klt < 1 || max_mdp_per_frame < 1) throw Error("controller config: counts must be >= 1");
    if (!std::isfinite(score_threshold)) throw Error("controller config: T_c must be finite");
    reward.validate();
  }
};

// A detector the controller can run: feature tuple plus class models.
struct DetectorVariant {
  std::string name;
  FeatureParams params;
  std::vector<LinearModel> models;
  double weight_density = 1.0;
  bool int8 = false;
};

inline DetectorVariant make_detector_variant(const Catalog& cat, std::size_t v) {
  DetectorVariant d;
  d.name = cat.specs.at(v).name();
  d.params = cat.specs[v].params;
  const auto m = cat.models(v);
  d.models.assign(m.begin(), m.end());
  d.weight_density = weight_density(m);
  d.int8 = cat.specs[v].quant == Quantization::Int8;
  return d;
}

// Static baseline: the catalog's models for the baseline feature point run
// at the baseline proposal budget.
inline DetectorVariant make_static_variant(const Catalog& cat, const FeatureParams& p = kStaticParams) {
  for (std::size_t v = 0; v < cat.size(); ++v) {
    if (cat.specs[v].kind == VariantKind::Feature && cat.specs[v].params.same_features(p)) {
      DetectorVariant d = make_detector_variant(cat, v);
      d.params = p;
      d.name = p.str();
      return d;
    }
  }
  throw Error("catalog has no models for " + p.str());
}

// Everything a controller needs besides its config.
struct ControllerAssets {
  std::vector<DetectorVariant> frontier;  // ascending cost; indices are MDP actions
  DetectorVariant baseline;
  Policy policy;
  ConditionBuckets buckets;
  CostModel cost;
};

enum class OpKind { Detect, Track };
inline const char* op_name(OpKind k) { return k == OpKind::Detect ? "detect" : "track"; }

inline constexpr int kBaselineVariant = -1;

struct FrameOutcome {
  std::int64_t index = 0;
  Detection detection;
  OpKind op = OpKind::Detect;
  int variant_used = kBaselineVariant;  // frontier index, -1 for the static tuple
  int mdp_accesses = 0;
  double cost = 0.0;          // deterministic channel, seconds
  double wall_seconds = 0.0;  // measured
  int condition = -1;
  std::optional<MdpState> state;  // MDP state behind the current variant
};

class Controller {
 public:
  Controller(const ControllerAssets& assets, ControllerConfig cfg)
      : assets_(&assets), cfg_(cfg), rng_(derive_seed(cfg.seed, "controller")), tracker_(kMaxTrackPoints, cfg.reinit_klt) {
    cfg_.validate();
    if (assets.frontier.empty() && (uses_mdp(cfg.strategy) || cfg.strategy == Strategy::Random))
      throw Error("controller: empty frontier");
    if (uses_mdp(cfg.strategy) && assets.policy.variants != static_cast<int>(assets.frontier.size()))
      throw Error("controller: policy does not match frontier");
  }

  const ControllerConfig& config() const { return cfg_; }

  // Starts a new stream.
  void reset() {
    tracker_.reset();
    last_box_.reset();
    last_conf_ = -std::numeric_limits<double>::infinity();
    last_label_ = -1;
    last_variant_ = 0;
    frames_since_mdp_ = 0;
    state_.reset();
  }

  FrameOutcome step(const Frame& frame) {
    const auto t0 = std::chrono::steady_clock::now();
    FrameOutcome out;
    out.index = frame.index();
    const CostModel& cm = assets_->cost;

    bool need_detect = true;
    if (uses_tracker(cfg_.strategy) && tracker_.active() && last_box_ && frames_since_mdp_ < cfg_.retrigger_mdp &&
        last_conf_ >= cfg_.score_threshold) {
      out.cost += cm.track_seconds;
      if (auto box = tracker_.track(frame)) {
        const DetectorVariant& dv = current_variant();
        out.cost += cm.rescore_seconds(kFeatureWindow, dv.params, static_cast<int>(dv.models.size()), dv.weight_density, dv.int8);
        const Detection rescored = score_box(frame, *box, dv.models, dv.params);
        if (rescored.confidence >= cfg_.score_threshold && check(*box, *last_box_, cfg_.iou_gate)) {
          out.op = OpKind::Track;
          out.detection = rescored;
          out.detection.box = *box;
          out.variant_used = last_variant_used_;
          last_conf_ = rescored.confidence;
          need_detect = false;
        }
      }
    }

    if (need_detect) detect_path(frame, out);
    ++frames_since_mdp_;
    out.state = state_;
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }

 private:
  const DetectorVariant& current_variant() const {
    return last_variant_used_ == kBaselineVariant ? assets_->baseline : assets_->frontier[static_cast<std::size_t>(last_variant_used_)];
  }

  void detect_path(const Frame& frame, FrameOutcome& out) {
    const CostModel& cm = assets_->cost;
    out.op = OpKind::Detect;
    out.cost += cm.seconds_per_unit * cm.frame_units(frame.width(), frame.height());
    const auto ranked = rank_proposals(frame, kMaxProposals);
    auto run = [&](const DetectorVariant& dv) {
      out.cost += cm.seconds_per_unit * dv.params.proposals *
                  cm.proposal_units(kFeatureWindow, dv.params, static_cast<int>(dv.models.size()), dv.weight_density, dv.int8);
      return detect_proposals(frame, ranked, dv.models, dv.params);
    };

    Detection best;
    best.degenerate = true;
    int best_variant = kBaselineVariant;
    if (cfg_.strategy == Strategy::Static || cfg_.strategy == Strategy::StaticTracker) {
      best = run(assets_->baseline);
    } else if (cfg_.strategy == Strategy::Random) {
      best_variant = static_cast<int>(rng_.index(assets_->frontier.size()));
      best = run(assets_->frontier[static_cast<std::size_t>(best_variant)]);
    } else {
      const int q = assets_->buckets.bucket(condition_statistic(frame));
      out.condition = q;
      MdpState s{categorize(last_conf_, cfg_.reward), last_variant_, q};
      if (!std::isfinite(last_conf_)) s.category = Category::GoodEnough;  // nothing observed yet
      std::vector<int> tried;
      for (int attempt = 0; attempt < cfg_.max_mdp_per_frame; ++attempt) {
        out.cost += cm.mdp_access_seconds(frame.width(), frame.height());
        ++out.mdp_accesses;
        const int v = select(assets_->policy, s);
        state_ = s;
        if (std::find(tried.begin(), tried.end(), v) != tried.end()) break;
        tried.push_back(v);
        const Detection d = run(assets_->frontier[static_cast<std::size_t>(v)]);
        if (best.degenerate || (!d.degenerate && d.confidence > best.confidence)) {
          best = d;
          best_variant = v;
        }
        last_variant_ = v;
        if (!d.degenerate && d.confidence >= cfg_.score_threshold) break;
        s = MdpState{categorize(d.confidence, cfg_.reward), v, q};
      }
      frames_since_mdp_ = 0;
    }
    if (!uses_mdp(cfg_.strategy)) frames_since_mdp_ = 0;

    out.detection = best;
    out.variant_used = best_variant;
    last_variant_used_ = best_variant;
    last_conf_ = best.degenerate ? -std::numeric_limits<double>::infinity() : best.confidence;
    last_label_ = best.label;
    if (!best.degenerate) last_box_ = best.box;
    if (uses_tracker(cfg_.strategy)) {
      tracker_.reset();
      if (!best.degenerate && best.confidence >= cfg_.score_threshold) tracker_.init(frame, best.box);
    }
  }

  const ControllerAssets* assets_;
  ControllerConfig cfg_;
  Rng rng_;
  KltTracker tracker_;
  std::optional<BBox> last_box_;
  double last_conf_ = -std::numeric_limits<double>::infinity();
  int last_label_ = -1;
  int last_variant_ = 0;       // MDP state variant
  int last_variant_used_ = kBaselineVariant;
  int frames_since_mdp_ = 0;
  std::optional<MdpState> state_;
};

// ---------------------------------------------------------------------------
// Streams

struct StreamMetrics {
  int frames = 0;
  int detect_frames = 0;
  int track_frames = 0;
  int mdp_accesses = 0;
  DetectionCounts counts;
  double total_cost = 0.0;
  double total_wall = 0.0;
  double iou_sum = 0.0;
  int iou_frames = 0;

  double f1() const { return counts.f1(); }
  double mean_cost() const { return frames == 0 ? 0.0 : total_cost / frames; }
  double fps() const { return total_cost > 0.0 ? frames / total_cost : 0.0; }
  double mean_iou() const { return iou_frames == 0 ? 0.0 : iou_sum / iou_frames; }
  double detect_fraction() const { return frames == 0 ? 0.0 : static_cast<double>(detect_frames) / frames; }

  void add(const FrameOutcome& o, const std::optional<GroundTruth>& truth, double threshold) {
    ++frames;
    (o.op == OpKind::Detect ? detect_frames : track_frames)++;
    mdp_accesses += o.mdp_accesses;
    total_cost += o.cost;
    total_wall += o.wall_seconds;
    tally(counts, o.detection, truth, threshold);
    if (truth) {
      iou_sum += o.detection.degenerate ? 0.0 : iou(o.detection.box, truth->box);
      ++iou_frames;
    }
  }

  void merge(const StreamMetrics& m) {
    frames += m.frames;
    detect_frames += m.detect_frames;
    track_frames += m.track_frames;
    mdp_accesses += m.mdp_accesses;
    counts.tp += m.counts.tp;
    counts.fp += m.counts.fp;
    counts.fn += m.counts.fn;
    total_cost += m.total_cost;
    total_wall += m.total_wall;
    iou_sum += m.iou_sum;
    iou_frames += m.iou_frames;
  }
};

// IoU against ground truth, NaN where the frame has none.
inline double frame_iou(const FrameOutcome& o, const std::optional<GroundTruth>& truth) {
  if (!truth) return std::numeric_limits<double>::quiet_NaN();
  return o.detection.degenerate ? 0.0 : iou(o.detection.box, truth->box);
}

struct StreamResult {
  std::vector<FrameOutcome> outcomes;
  std::vector<double> ious;
  StreamMetrics metrics;
};

inline StreamResult run_stream(Controller& c, std::span<const Frame> frames, std::span<const std::optional<GroundTruth>> truth) {
  if (frames.empty()) throw Error("run_stream: empty stream");
  if (!truth.empty() && truth.size() != frames.size()) throw Error("run_stream: ground truth length mismatch");
  StreamResult r;
  c.reset();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::optional<GroundTruth> t = truth.empty() ? std::nullopt : truth[i];
    r.outcomes.push_back(c.step(frames[i]));
    r.ious.push_back(frame_iou(r.outcomes.back(), t));
    r.metrics.add(r.outcomes.back(), t, c.config().score_threshold);
  }
  return r;
}

inline StreamResult run_sequence(Controller& c, const SequenceSpec& spec, Camera cam = {}) {
  SequenceRenderer render(spec, cam);
  std::vector<Frame> frames;
  std::vector<std::optional<GroundTruth>> truth;
  for (int t = 0; t < spec.frames; ++t) {
    auto lf = render.frame(t);
    frames.push_back(std::move(lf.frame));
    truth.push_back(lf.truth);
  }
  return run_stream(c, frames, truth);
}

// ---------------------------------------------------------------------------
// Producer/consumer hand-off

// Bounded FIFO: push blocks while full, pop blocks while empty and returns
// nullopt once the queue is closed and drained.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw Error("queue capacity must be positive");
  }

  void push(T v) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return items_.size() < capacity_ || closed_; });
    if (closed_) throw Error("push on closed queue");
    items_.push_back(std::move(v));
    not_empty_.notify_one();
  }

  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return v;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }

  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable not_full_, not_empty_;
  std::deque<T> items_;
  bool closed_ = false;
};

// Runs the controller on its own thread, fed by a producer through a
// bounded queue. Outcomes equal the synchronous run.
inline std::vector<FrameOutcome> run_pipelined(Controller& c, const std::function<std::optional<Frame>()>& source,
                                               std::size_t capacity = 4) {
  BoundedQueue<Frame> q(capacity);
  std::vector<FrameOutcome> out;
  c.reset();
  std::thread consumer([&] {
    while (auto f = q.pop()) out.push_back(c.step(*f));
  });
  try {
    while (auto f = source()) q.push(std::move(*f));
  } catch (...) {
    q.close();
    consumer.join();
    throw;
  }
  q.close();
  consumer.join();
  return out;
}

// frame, op, variant, label, confidence, iou, cost, mdp_accesses, state
inline void write_outcomes_csv(std::ostream& os, std::span<const FrameOutcome> outcomes, std::span<const double> ious) {
  os << "frame,op,variant,label,confidence,iou,cost,mdp_accesses,condition,state\n";
  char buf[64];
  auto num = [&](double v) -> std::string {
    if (std::isnan(v)) return "";
    if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
  };
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    os << o.index << ',' << op_name(o.op) << ',' << o.variant_used << ',' << o.detection.label << ','
       << num(o.detection.confidence) << ',' << num(i < ious.size() ? ious[i] : std::nan("")) << ',' << num(o.cost) << ','
       << o.mdp_accesses << ',' << o.condition << ',' << (o.state ? state_name(*o.state) : std::string()) << '\n';
  }
}

}  // namespace adet
