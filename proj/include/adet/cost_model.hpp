#pragma once

#include "adet/detector.hpp"

namespace adet {

// Deterministic per-frame cost channel.
//
// Costs are operation counts converted to seconds with one constant, so
// benchmark and maze results do not depend on the host machine. The
// constant puts the static <1000,2,8,9> detector near 2 fps at 480x270;
// tracking is charged a flat KLT step.
struct CostModel {
  double seconds_per_unit = 5.5e-8;
  double track_seconds = 0.0037;
  double int8_dot_factor = 0.25;  // int8 multiply-accumulate relative to float

  // Proposal ranking over the whole pyramid.
  double frame_units(int width, int height) const { return 12.0 * static_cast<double>(width) * height; }

  // Crop, gradients + binning, block normalisation, one dot per class.
  double proposal_units(int window, const FeatureParams& p, int classes, double weight_density = 1.0,
                        bool int8 = false) const {
    const double L = static_cast<double>(feature_length(window, p));
    const double area = static_cast<double>(window) * window;
    const double dot = L * classes * weight_density * (int8 ? int8_dot_factor : 1.0);
    return area + 4.0 * area + 2.0 * L + dot;
  }

  double detect_seconds(int width, int height, int window, const FeatureParams& p, int classes,
                        double weight_density = 1.0, bool int8 = false) const {
    return seconds_per_unit *
           (frame_units(width, height) + p.proposals * proposal_units(window, p, classes, weight_density, int8));
  }

  // Re-scoring one tracked box.
  double rescore_seconds(int window, const FeatureParams& p, int classes, double weight_density = 1.0,
                         bool int8 = false) const {
    return seconds_per_unit * proposal_units(window, p, classes, weight_density, int8);
  }

  // Scene-condition statistic on a 4x decimated frame plus the table lookup.
  double mdp_access_seconds(int width, int height) const {
    return seconds_per_unit * (4.0 * static_cast<double>(width) * height / 16.0);
  }
};

}  // namespace adet
