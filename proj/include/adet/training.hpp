#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "adet/corpus.hpp"
#include "adet/detector.hpp"

namespace adet {

struct ModelTrainingConfig {
  TrainOptions svm;
  int mining_rounds = 2;
  int mined_per_scene = 10;
  double mining_margin = -1.0;  // only proposals scoring above this are mined
  double mining_max_overlap = 0.3;
};

// One-vs-rest models for every sign class. Negatives for class k are the
// shared background pool plus the positives of all other classes; the pool
// grows by hard-negative mining over full frames.
inline std::vector<LinearModel> train_class_models(const TrainingSet& ts, const FeatureParams& p,
                                                   const ModelTrainingConfig& cfg, std::uint64_t seed) {
  const int window = kFeatureWindow;
  const std::size_t len = feature_length(window, p);
  if (ts.positives.size() != static_cast<std::size_t>(kNumSignClasses)) throw Error("train: missing classes");

  std::vector<std::vector<std::vector<double>>> pos(kNumSignClasses);
  for (int k = 0; k < kNumSignClasses; ++k) pos[static_cast<std::size_t>(k)] = feature_matrix(ts.positives[static_cast<std::size_t>(k)], p);
  std::vector<std::vector<double>> pool = feature_matrix(ts.negatives, p);

  std::vector<LinearModel> models;
  std::vector<std::uint8_t> patch;
  std::vector<float> scratch;
  std::vector<double> feat(len);
  for (int round = 0;; ++round) {
    models.clear();
    for (int k = 0; k < kNumSignClasses; ++k) {
      std::vector<std::vector<double>> neg = pool;
      for (int j = 0; j < kNumSignClasses; ++j) {
        if (j == k) continue;
        const auto& other = pos[static_cast<std::size_t>(j)];
        neg.insert(neg.end(), other.begin(), other.end());
      }
      LinearModel m = train_features(pos[static_cast<std::size_t>(k)], neg, p, window, cfg.svm,
                                     derive_seed(seed, static_cast<std::uint64_t>(k)));
      m.label = k;
      m.params.proposals = p.proposals;
      models.push_back(std::move(m));
    }
    if (round >= cfg.mining_rounds) break;

    for (const auto& scene : ts.mining) {
      std::vector<std::pair<double, std::size_t>> hard;
      for (std::size_t i = 0; i < scene.ranked.size(); ++i) {
        const BBox& b = scene.ranked[i].box;
        if (scene.truth && iou(b, *scene.truth) >= cfg.mining_max_overlap) continue;
        crop_resize_into(scene.frame, b, window, patch);
        hog_into(patch, window, p, feat, scratch);
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& m : models) best = std::max(best, score(m, feat));
        if (best > cfg.mining_margin) hard.emplace_back(-best, i);
      }
      const std::size_t take = std::min(hard.size(), static_cast<std::size_t>(cfg.mined_per_scene));
      std::partial_sort(hard.begin(), hard.begin() + static_cast<std::ptrdiff_t>(take), hard.end());
      for (std::size_t c = 0; c < take; ++c) {
        crop_resize_into(scene.frame, scene.ranked[hard[c].second].box, window, patch);
        hog_into(patch, window, p, feat, scratch);
        pool.push_back(feat);
      }
    }
  }
  return models;
}

}  // namespace adet
