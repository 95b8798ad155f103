#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adet/core.hpp"
#include "adet/detector.hpp"
#include "adet/random.hpp"
#include "adet/scene.hpp"

namespace adet {

// Scene-condition levels used to build corpora: three clutter buckets and
// two illumination buckets.
inline constexpr double kClutterLevels[3] = {0.15, 0.5, 0.9};
inline constexpr double kIlluminationLevels[2] = {1.0, 0.4};
inline const char* kClutterNames[3] = {"low", "medium", "high"};
inline const char* kIlluminationNames[2] = {"normal", "low"};

struct GroundTruth {
  BBox box;
  int label = -1;
  double distance = 0.0;  // cm along the optical axis
};

// A short video of one sign seen by a slowly approaching camera. Fully
// described by its parameters; frames are rendered on demand.
struct SequenceSpec {
  int id = 0;
  SignClass cls = SignClass::Left;
  int clutter_bucket = 0;
  int illumination_bucket = 0;
  double start_depth = 300.0;   // cm
  double approach = 2.0;        // cm per frame
  double lateral = 0.0;         // cm
  double drift = 0.0;           // lateral cm per frame
  double pan = 0.0;             // backdrop offset, px
  int frames = 30;
  std::uint64_t seed = 0;

  SceneLook look() const { return {kClutterLevels[clutter_bucket], kIlluminationLevels[illumination_bucket]}; }
};

struct LabeledFrame {
  Frame frame;
  std::optional<GroundTruth> truth;
  int clutter_bucket = 0;
  int illumination_bucket = 0;
};

class SequenceRenderer {
 public:
  explicit SequenceRenderer(const SequenceSpec& spec, Camera cam = {})
      : spec_(spec), cam_(cam), backdrop_(cam, derive_seed(spec.seed, "backdrop")) {}

  const SequenceSpec& spec() const { return spec_; }

  LabeledFrame frame(int t) const {
    const double depth = spec_.start_depth - spec_.approach * t;
    const double lateral = spec_.lateral + spec_.drift * t;
    Sign sign;
    sign.cls = spec_.cls;
    sign.position = {depth, -lateral};  // camera at origin looking along +x
    sign.facing = {-1.0, 0.0};
    const Pose pose{};
    LabeledFrame out;
    out.clutter_bucket = spec_.clutter_bucket;
    out.illumination_bucket = spec_.illumination_bucket;
    std::vector<ProjectedSign> visible;
    if (auto p = project_sign(cam_, pose, sign)) {
      visible.push_back(*p);
      if (auto clipped = clip_to_view(cam_, p->box)) out.truth = GroundTruth{*clipped, static_cast<int>(spec_.cls), p->depth};
    }
    out.frame = render_scene(cam_, backdrop_, spec_.look(), spec_.pan, visible, derive_seed(spec_.seed, static_cast<std::uint64_t>(t)), t);
    return out;
  }

 private:
  SequenceSpec spec_;
  Camera cam_;
  Backdrop backdrop_;
};

struct CorpusConfig {
  int sequences_per_condition = 10;
  int frames_per_sequence = 30;
  double min_depth = 180.0;
  double max_depth = 450.0;
  std::uint64_t seed = 1;
};

// clutter x illumination x sequences_per_condition sequences.
inline std::vector<SequenceSpec> make_corpus(const CorpusConfig& cfg) {
  std::vector<SequenceSpec> out;
  int id = 0;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < 2; ++i) {
      for (int s = 0; s < cfg.sequences_per_condition; ++s) {
        SequenceSpec q;
        q.id = id;
        q.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(id));
        Rng rng(derive_seed(q.seed, "params"));
        q.cls = static_cast<SignClass>(rng.index(kNumSignClasses));
        q.clutter_bucket = c;
        q.illumination_bucket = i;
        q.frames = cfg.frames_per_sequence;
        q.start_depth = rng.uniform(cfg.min_depth, cfg.max_depth);
        q.approach = rng.uniform(1.0, 2.5);
        const double reach = 0.35 * q.start_depth;  // keeps the sign inside the field of view
        q.lateral = rng.uniform(-reach, reach);
        q.drift = rng.uniform(-0.6, 0.6);
        q.pan = rng.uniform(0.0, 1800.0);
        out.push_back(q);
        ++id;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training material

struct MiningScene {
  Frame frame;
  std::optional<BBox> truth;
  std::vector<Proposal> ranked;
};

struct TrainingSet {
  std::vector<std::vector<Frame>> positives;  // per sign class
  std::vector<Frame> negatives;               // background and misaligned crops
  std::vector<MiningScene> mining;            // full frames for hard-negative mining
};

struct TrainingSetConfig {
  int positives_per_class = 160;
  int scenes = 100;  // scenes cut into initial negatives
  int negatives_per_scene = 14;
  int mining_scenes = 60;
  int backdrops = 16;  // backdrop pool shared by all scenes
  double min_depth = 60.0;
  double max_depth = 480.0;
  std::uint64_t seed = 7;
};

inline TrainingSet make_training_set(const TrainingSetConfig& cfg, Camera cam = {}) {
  TrainingSet ts;
  ts.positives.resize(kNumSignClasses);
  const Pose pose{};

  std::vector<Backdrop> pool;
  for (int b = 0; b < std::max(1, cfg.backdrops); ++b)
    pool.emplace_back(cam, derive_seed(cfg.seed, "backdrop/" + std::to_string(b)));

  struct Scene {
    Frame frame;
    std::optional<ProjectedSign> sign;
  };
  auto random_scene = [&](Rng& rng, std::optional<SignClass> cls) {
    SceneLook look{kClutterLevels[rng.index(3)] + rng.uniform(-0.1, 0.1), kIlluminationLevels[rng.index(2)]};
    look.clutter = std::clamp(look.clutter, 0.0, 1.0);
    const auto& backdrop = pool[rng.index(pool.size())];
    const double pan = rng.uniform(0.0, backdrop.width());
    Scene sc;
    std::vector<ProjectedSign> vis;
    if (cls) {
      Sign s;
      s.cls = *cls;
      const double depth = rng.uniform(cfg.min_depth, cfg.max_depth);
      const double reach = 0.4 * depth;
      s.position = {depth, rng.uniform(-reach, reach)};
      sc.sign = project_sign(cam, pose, s);
      if (sc.sign) vis.push_back(*sc.sign);
    }
    sc.frame = render_scene(cam, backdrop, look, pan, vis, rng.next());
    return sc;
  };

  for (int k = 0; k < kNumSignClasses; ++k) {
    Rng rng(derive_seed(cfg.seed, "pos/" + std::to_string(k)));
    int made = 0;
    for (int tries = 0; made < cfg.positives_per_class && tries < 20 * cfg.positives_per_class; ++tries) {
      Scene sc = random_scene(rng, static_cast<SignClass>(k));
      if (!sc.sign || !clip_to_view(cam, sc.sign->box, 0.95)) continue;
      // Jitter mimics the misalignment of grid proposals.
      const BBox& g = sc.sign->box;
      const double s = rng.uniform(0.9, 1.12);
      const BBox j = BBox::from_center(g.cx() + rng.uniform(-0.07, 0.07) * g.w, g.cy() + rng.uniform(-0.07, 0.07) * g.h,
                                       g.w * s, g.h * s);
      ts.positives[static_cast<std::size_t>(k)].push_back(crop_resize(sc.frame, j, kFeatureWindow));
      ++made;
    }
  }

  Rng rng(derive_seed(cfg.seed, "neg"));
  for (int n = 0; n < cfg.scenes; ++n) {
    std::optional<SignClass> cls;
    if (rng.bernoulli(0.75)) cls = static_cast<SignClass>(rng.index(kNumSignClasses));
    Scene sc = random_scene(rng, cls);
    std::optional<BBox> truth;
    if (sc.sign) truth = sc.sign->box;
    const auto ranked = rank_proposals(sc.frame, 600);
    int taken = 0;
    for (int tries = 0; tries < 200 && taken < cfg.negatives_per_scene && !ranked.empty(); ++tries) {
      const auto& prop = ranked[rng.index(ranked.size())];
      if (truth && iou(prop.box, *truth) >= 0.3) continue;
      ts.negatives.push_back(crop_resize(sc.frame, prop.box, kFeatureWindow));
      ++taken;
    }
    // Partial overlaps teach localisation.
    if (truth) {
      for (int m = 0; m < 3; ++m) {
        const double s = rng.uniform(0.5, 1.6);
        const BBox b = BBox::from_center(truth->cx() + rng.uniform(-0.6, 0.6) * truth->w,
                                         truth->cy() + rng.uniform(-0.6, 0.6) * truth->h, truth->w * s, truth->h * s);
        const double o = iou(b, *truth);
        if (o >= 0.3 || o <= 0.0 || !box_in_view(cam, b)) continue;
        ts.negatives.push_back(crop_resize(sc.frame, b, kFeatureWindow));
      }
    }
  }

  Rng mrng(derive_seed(cfg.seed, "mining"));
  for (int n = 0; n < cfg.mining_scenes; ++n) {
    std::optional<SignClass> cls;
    if (mrng.bernoulli(0.8)) cls = static_cast<SignClass>(mrng.index(kNumSignClasses));
    Scene sc = random_scene(mrng, cls);
    MiningScene ms;
    ms.frame = std::move(sc.frame);
    if (sc.sign) ms.truth = sc.sign->box;
    ms.ranked = rank_proposals(ms.frame, kMaxProposals);
    ts.mining.push_back(std::move(ms));
  }
  return ts;
}

}  // namespace adet
