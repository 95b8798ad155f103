#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "adet/core.hpp"
#include "adet/random.hpp"

namespace adet {

inline constexpr int kFeatureWindow = 32;
inline constexpr int kMaxProposals = 2000;

// One point of the feature pipeline's parameter space.
struct FeatureParams {
  int proposals = 1000;  // BB: proposals evaluated per frame
  int block = 2;         // bsize: cells per block side
  int cell = 8;          // csize: pixels per cell side
  int bins = 9;          // nhist: orientation bins

  bool operator==(const FeatureParams&) const = default;

  // Same features regardless of proposal budget.
  bool same_features(const FeatureParams& o) const {
    return block == o.block && cell == o.cell && bins == o.bins;
  }

  std::string str() const {
    std::ostringstream os;
    os << '<' << proposals << ',' << block << ',' << cell << ',' << bins << '>';
    return os.str();
  }
};

inline bool params_valid_for(int window, const FeatureParams& p) {
  if (window <= 0 || p.proposals < 1 || p.cell < 1 || p.block < 1 || p.bins < 2) return false;
  if (window % p.cell != 0) return false;
  return p.block <= window / p.cell;
}

// nbx * nby * bsize^2 * nhist with dense blocks at a stride of one cell.
inline std::size_t feature_length(int window, const FeatureParams& p) {
  if (!params_valid_for(window, p)) throw Error("incompatible geometry");
  const std::size_t cells = static_cast<std::size_t>(window / p.cell);
  const std::size_t nb = cells - static_cast<std::size_t>(p.block) + 1;
  return nb * nb * static_cast<std::size_t>(p.block * p.block) * static_cast<std::size_t>(p.bins);
}

namespace detail {

// Gradient lookup keyed by the integer central differences of an 8-bit
// image: unsigned orientation in degrees [0, 180) and magnitude.
struct GradientTable {
  static constexpr int kSpan = 511;
  std::vector<float> angle;
  std::vector<float> magnitude;

  GradientTable() : angle(kSpan * kSpan), magnitude(kSpan * kSpan) {
    for (int gx = -255; gx <= 255; ++gx) {
      for (int gy = -255; gy <= 255; ++gy) {
        const std::size_t k = index(gx, gy);
        double a = std::atan2(static_cast<double>(gy), static_cast<double>(gx)) * 180.0 / 3.14159265358979323846;
        if (a < 0.0) a += 180.0;
        if (a >= 180.0) a -= 180.0;
        angle[k] = static_cast<float>(a);
        magnitude[k] = static_cast<float>(std::sqrt(static_cast<double>(gx * gx + gy * gy)));
      }
    }
  }

  static std::size_t index(int gx, int gy) {
    return static_cast<std::size_t>(gx + 255) * kSpan + static_cast<std::size_t>(gy + 255);
  }

  static const GradientTable& get() {
    static const GradientTable table;
    return table;
  }
};

}  // namespace detail

// Per-pixel gradient orientation (degrees, unsigned) and magnitude of a
// win x win patch: central differences with replicated borders.
struct PatchGradients {
  std::vector<float> angle;
  std::vector<float> magnitude;
};

inline void gradients_into(std::span<const std::uint8_t> patch, int win, PatchGradients& g) {
  if (patch.size() != static_cast<std::size_t>(win) * static_cast<std::size_t>(win))
    throw Error("hog: patch size does not match window");
  const auto& table = detail::GradientTable::get();
  g.angle.resize(patch.size());
  g.magnitude.resize(patch.size());
  for (int y = 0; y < win; ++y) {
    const std::uint8_t* r = patch.data() + static_cast<std::size_t>(y) * win;
    const std::uint8_t* up = patch.data() + static_cast<std::size_t>(std::max(y - 1, 0)) * win;
    const std::uint8_t* dn = patch.data() + static_cast<std::size_t>(std::min(y + 1, win - 1)) * win;
    for (int x = 0; x < win; ++x) {
      const int gx = static_cast<int>(r[std::min(x + 1, win - 1)]) - static_cast<int>(r[std::max(x - 1, 0)]);
      const int gy = static_cast<int>(dn[x]) - static_cast<int>(up[x]);
      const std::size_t k = detail::GradientTable::index(gx, gy);
      const std::size_t i = static_cast<std::size_t>(y) * win + static_cast<std::size_t>(x);
      g.angle[i] = table.angle[k];
      g.magnitude[i] = table.magnitude[k];
    }
  }
}

// Histogram of oriented gradients from precomputed gradients.
//
// Bin centres at k*180/nhist with linear interpolation between neighbouring
// bins, magnitude weighting, per-block L2 normalisation v/sqrt(|v|^2+eps^2),
// blocks concatenated in row-major order.
inline void hog_from_gradients(const PatchGradients& g, int win, const FeatureParams& p, std::span<double> out,
                               std::vector<float>& scratch) {
  const std::size_t len = feature_length(win, p);
  if (g.angle.size() != static_cast<std::size_t>(win) * static_cast<std::size_t>(win))
    throw Error("hog: patch size does not match window");
  if (out.size() != len) throw Error("hog: output length mismatch");

  const int cells = win / p.cell;
  const int bins = p.bins;
  scratch.assign(static_cast<std::size_t>(cells * cells * bins), 0.0f);
  const float bins_per_degree = static_cast<float>(bins) / 180.0f;

  for (int y = 0; y < win; ++y) {
    float* cell_row = scratch.data() + static_cast<std::size_t>((y / p.cell) * cells * bins);
    const std::size_t row = static_cast<std::size_t>(y) * win;
    for (int x = 0; x < win; ++x) {
      const float mag = g.magnitude[row + static_cast<std::size_t>(x)];
      if (mag == 0.0f) continue;
      const float pos = g.angle[row + static_cast<std::size_t>(x)] * bins_per_degree;
      int b0 = static_cast<int>(pos);
      const float frac = pos - static_cast<float>(b0);
      if (b0 >= bins) b0 -= bins;
      int b1 = b0 + 1;
      if (b1 >= bins) b1 -= bins;
      float* h = cell_row + static_cast<std::size_t>((x / p.cell) * bins);
      h[b0] += mag * (1.0f - frac);
      h[b1] += mag * frac;
    }
  }

  constexpr double eps = 1e-6;
  const int nb = cells - p.block + 1;
  const std::size_t block_len = static_cast<std::size_t>(p.block * p.block * bins);
  std::size_t o = 0;
  for (int by = 0; by < nb; ++by) {
    for (int bx = 0; bx < nb; ++bx) {
      const std::size_t start = o;
      double sq = 0.0;
      for (int cy = by; cy < by + p.block; ++cy) {
        for (int cx = bx; cx < bx + p.block; ++cx) {
          const float* h = scratch.data() + static_cast<std::size_t>((cy * cells + cx) * bins);
          for (int b = 0; b < bins; ++b) {
            const double v = h[b];
            out[o++] = v;
            sq += v * v;
          }
        }
      }
      const double inv = 1.0 / std::sqrt(sq + eps * eps);
      for (std::size_t i = start; i < start + block_len; ++i) out[i] *= inv;
    }
  }
}

// Histogram of oriented gradients on a square win x win patch.
inline void hog_into(std::span<const std::uint8_t> patch, int win, const FeatureParams& p, std::span<double> out,
                     std::vector<float>& scratch) {
  thread_local PatchGradients g;
  gradients_into(patch, win, g);
  hog_from_gradients(g, win, p, out, scratch);
}

inline std::vector<double> hog(const Frame& patch, const FeatureParams& p) {
  if (patch.width() != patch.height()) throw Error("hog: patch must be square");
  std::vector<double> out(feature_length(patch.width(), p));
  std::vector<float> scratch;
  hog_into(patch.pixels(), patch.width(), p, out, scratch);
  return out;
}

// ---------------------------------------------------------------------------
// Proposals

struct Proposal {
  BBox box;
  double score = 0.0;  // mean gradient magnitude at the box's own scale
};

inline constexpr int kProposalWindow = 16;  // box side in its pyramid level
inline constexpr int kProposalStride = 2;   // stride in level pixels
inline constexpr int kProposalLevels = 9;   // scales 16 * sqrt(2)^i

namespace detail {

// Area-averaging downsample to (dw, dh).
inline std::vector<float> downsample(const Frame& f, int dw, int dh) {
  std::vector<float> out(static_cast<std::size_t>(dw) * static_cast<std::size_t>(dh));
  const double sx = static_cast<double>(f.width()) / dw;
  const double sy = static_cast<double>(f.height()) / dh;
  std::vector<int> x0(static_cast<std::size_t>(dw) + 1);
  for (int i = 0; i <= dw; ++i) x0[static_cast<std::size_t>(i)] = std::min(f.width(), static_cast<int>(std::floor(i * sx + 1e-9)));
  for (int j = 0; j < dh; ++j) {
    const int ya = std::min(f.height() - 1, static_cast<int>(std::floor(j * sy + 1e-9)));
    const int yb = std::max(ya + 1, std::min(f.height(), static_cast<int>(std::floor((j + 1) * sy + 1e-9))));
    for (int i = 0; i < dw; ++i) {
      const int xa = std::min(f.width() - 1, x0[static_cast<std::size_t>(i)]);
      const int xb = std::max(xa + 1, x0[static_cast<std::size_t>(i) + 1]);
      std::uint32_t sum = 0;
      for (int y = ya; y < yb; ++y) {
        const std::uint8_t* r = f.row(y);
        for (int x = xa; x < xb; ++x) sum += r[x];
      }
      out[static_cast<std::size_t>(j) * dw + i] = static_cast<float>(sum) / static_cast<float>((yb - ya) * (xb - xa));
    }
  }
  return out;
}

struct ProposalLevel {
  int width = 0, height = 0;
  double sx = 1.0, sy = 1.0;  // level pixel -> frame pixel
  std::vector<float> magnitude;
};

inline std::vector<ProposalLevel> proposal_levels(const Frame& frame) {
  std::vector<ProposalLevel> levels;
  for (int i = 0; i < kProposalLevels; ++i) {
    const double k = std::pow(2.0, 0.5 * i);
    const int lw = static_cast<int>(std::lround(frame.width() / k));
    const int lh = static_cast<int>(std::lround(frame.height() / k));
    if (lw < kProposalWindow || lh < kProposalWindow) break;
    ProposalLevel L;
    L.width = lw;
    L.height = lh;
    L.sx = static_cast<double>(frame.width()) / lw;
    L.sy = static_cast<double>(frame.height()) / lh;
    std::vector<float> img;
    if (i == 0) {
      img.assign(frame.pixels().begin(), frame.pixels().end());
    } else {
      img = downsample(frame, lw, lh);
    }
    L.magnitude.resize(img.size());
    for (int y = 0; y < lh; ++y) {
      const float* r = img.data() + static_cast<std::size_t>(y) * lw;
      const float* up = img.data() + static_cast<std::size_t>(std::max(y - 1, 0)) * lw;
      const float* dn = img.data() + static_cast<std::size_t>(std::min(y + 1, lh - 1)) * lw;
      for (int x = 0; x < lw; ++x) {
        const float gx = r[std::min(x + 1, lw - 1)] - r[std::max(x - 1, 0)];
        const float gy = dn[x] - up[x];
        L.magnitude[static_cast<std::size_t>(y) * lw + x] = std::sqrt(gx * gx + gy * gy);
      }
    }
    levels.push_back(std::move(L));
  }
  return levels;
}

}  // namespace detail

// Class-agnostic box proposals from a multi-scale sliding grid, ranked by
// mean gradient magnitude inside each box measured at the box's own scale
// (a contour-density surrogate). Ties keep scan order (level, row, column),
// so the result for n is always a prefix of the result for any m > n.
inline std::vector<Proposal> rank_proposals(const Frame& frame, int max_count) {
  if (max_count < 1) throw Error("propose: max_count must be >= 1");
  std::vector<Proposal> cands;
  if (frame.width() < kProposalWindow || frame.height() < kProposalWindow) return cands;
  const auto levels = detail::proposal_levels(frame);
  constexpr double inv_area = 1.0 / (kProposalWindow * kProposalWindow);
  for (const auto& L : levels) {
    // Integral image over the level's gradient magnitude.
    const std::size_t iw = static_cast<std::size_t>(L.width) + 1;
    std::vector<double> integral(iw * (static_cast<std::size_t>(L.height) + 1), 0.0);
    for (int y = 0; y < L.height; ++y) {
      double rowsum = 0.0;
      for (int x = 0; x < L.width; ++x) {
        rowsum += L.magnitude[static_cast<std::size_t>(y) * L.width + x];
        integral[(y + 1) * iw + x + 1] = integral[y * iw + x + 1] + rowsum;
      }
    }
    for (int y = 0; y + kProposalWindow <= L.height; y += kProposalStride) {
      for (int x = 0; x + kProposalWindow <= L.width; x += kProposalStride) {
        const std::size_t x1 = static_cast<std::size_t>(x + kProposalWindow);
        const std::size_t y1 = static_cast<std::size_t>(y + kProposalWindow);
        const double s = integral[y1 * iw + x1] - integral[static_cast<std::size_t>(y) * iw + x1] -
                         integral[y1 * iw + static_cast<std::size_t>(x)] +
                         integral[static_cast<std::size_t>(y) * iw + static_cast<std::size_t>(x)];
        cands.push_back({BBox(x * L.sx, y * L.sy, kProposalWindow * L.sx, kProposalWindow * L.sy), s * inv_area});
      }
    }
  }
  std::vector<std::uint32_t> order(cands.size());
  std::iota(order.begin(), order.end(), 0u);
  const std::size_t n = std::min(order.size(), static_cast<std::size_t>(max_count));
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (cands[a].score != cands[b].score) return cands[a].score > cands[b].score;
    return a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(), better);
  std::vector<Proposal> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(cands[order[i]]);
  return out;
}

inline std::vector<BBox> propose(const Frame& frame, int max_count) {
  std::vector<BBox> out;
  for (const auto& p : rank_proposals(frame, max_count)) out.push_back(p.box);
  return out;
}

// ---------------------------------------------------------------------------
// Linear classifier

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  int window = kFeatureWindow;
  FeatureParams params;
  int label = -1;
  double train_accuracy = 0.0;
  bool degenerate = false;

  bool operator==(const LinearModel&) const = default;
};

// c = w^T x + b
inline double score(const LinearModel& model, std::span<const double> features) {
  if (features.size() != model.weights.size()) throw Error("score: feature length mismatch");
  double s = model.bias;
  for (std::size_t i = 0; i < features.size(); ++i) s += model.weights[i] * features[i];
  return s;
}

struct TrainOptions {
  int epochs = 20;
  double learning_rate = 0.01;
  double lambda = 1e-4;
};

inline std::vector<std::vector<double>> feature_matrix(std::span<const Frame> patches, const FeatureParams& p) {
  std::vector<std::vector<double>> X;
  X.reserve(patches.size());
  for (const auto& f : patches) X.push_back(hog(f, p));
  return X;
}

// Linear SVM by hinge-loss subgradient descent on precomputed features.
// Classes are reweighted to equal total mass. Deterministic given seed.
inline LinearModel train_features(const std::vector<std::vector<double>>& pos, const std::vector<std::vector<double>>& neg,
                                  const FeatureParams& p, int window, const TrainOptions& opt, std::uint64_t seed) {
  if (pos.empty() || neg.empty()) throw Error("train: empty class");
  const std::size_t dim = pos.front().size();
  if (dim != feature_length(window, p)) throw Error("train: feature length mismatch");
  LinearModel m;
  m.weights.assign(dim, 0.0);
  m.window = window;
  m.params = p;

  const std::size_t n = pos.size() + neg.size();
  const double w_pos = static_cast<double>(n) / (2.0 * static_cast<double>(pos.size()));
  const double w_neg = static_cast<double>(n) / (2.0 * static_cast<double>(neg.size()));
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  Rng rng(seed);
  const double decay = 1.0 - opt.learning_rate * opt.lambda;
  for (int e = 0; e < opt.epochs; ++e) {
    rng.shuffle(order.begin(), order.end());
    for (std::uint32_t idx : order) {
      const bool is_pos = idx < pos.size();
      const auto& x = is_pos ? pos[idx] : neg[idx - pos.size()];
      const double y = is_pos ? 1.0 : -1.0;
      const double c = is_pos ? w_pos : w_neg;
      double s = m.bias;
      for (std::size_t i = 0; i < dim; ++i) s += m.weights[i] * x[i];
      for (auto& w : m.weights) w *= decay;
      if (y * s < 1.0) {
        const double g = opt.learning_rate * c * y;
        for (std::size_t i = 0; i < dim; ++i) m.weights[i] += g * x[i];
        m.bias += g;
      }
    }
  }

  std::size_t correct = 0;
  for (const auto& x : pos) correct += score(m, x) >= 0.0 ? 1 : 0;
  for (const auto& x : neg) correct += score(m, x) < 0.0 ? 1 : 0;
  m.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
  const double majority = static_cast<double>(std::max(pos.size(), neg.size())) / static_cast<double>(n);
  m.degenerate = m.train_accuracy < majority + 0.05;
  return m;
}

inline LinearModel train(std::span<const Frame> positives, std::span<const Frame> negatives, const FeatureParams& p,
                         int epochs, std::uint64_t seed) {
  if (positives.empty() || negatives.empty()) throw Error("train: empty class");
  const int window = positives.front().width();
  TrainOptions opt;
  opt.epochs = epochs;
  return train_features(feature_matrix(positives, p), feature_matrix(negatives, p), p, window, opt, seed);
}

// ---------------------------------------------------------------------------
// Detection

// Scores the first p.proposals entries of a ranked proposal list with every
// class model and returns the arg-max (class, box).
inline Detection detect_proposals(const Frame& frame, std::span<const Proposal> ranked, std::span<const LinearModel> models,
                                  const FeatureParams& p) {
  const auto t0 = std::chrono::steady_clock::now();
  Detection best;
  best.degenerate = true;
  if (models.empty()) throw Error("detect: no models");
  const int window = models.front().window;
  const std::size_t len = feature_length(window, p);
  for (const auto& m : models) {
    if (m.window != window || m.weights.size() != len) throw Error("detect: model geometry mismatch");
  }
  std::vector<std::uint8_t> patch;
  std::vector<float> scratch;
  std::vector<double> feat(len);
  const std::size_t n = std::min(ranked.size(), static_cast<std::size_t>(p.proposals));
  for (std::size_t i = 0; i < n; ++i) {
    crop_resize_into(frame, ranked[i].box, window, patch);
    hog_into(patch, window, p, feat, scratch);
    for (const auto& m : models) {
      const double s = score(m, feat);
      if (best.degenerate || s > best.confidence) {
        best.box = ranked[i].box;
        best.confidence = s;
        best.label = m.label;
        best.degenerate = false;
      }
    }
  }
  best.cost = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return best;
}

inline Detection detect(const Frame& frame, std::span<const LinearModel> models, const FeatureParams& p) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto ranked = rank_proposals(frame, p.proposals);
  Detection d = detect_proposals(frame, ranked, models, p);
  d.cost = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return d;
}

// Best class score of a single box (used to re-score tracked boxes).
inline Detection score_box(const Frame& frame, const BBox& box, std::span<const LinearModel> models, const FeatureParams& p) {
  Proposal prop{box, 0.0};
  FeatureParams one = p;
  one.proposals = 1;
  return detect_proposals(frame, std::span<const Proposal>(&prop, 1), models, one);
}

// ---------------------------------------------------------------------------
// Persistence: line-oriented text, reals as hex floats so the round trip is
// bit-exact.

inline constexpr const char* kModelMagic = "ADET-LINEAR-MODEL";
inline constexpr int kModelVersion = 1;

inline std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw Error("parse: bad real '" + s + "'");
  return v;
}

inline void write_model(std::ostream& os, const LinearModel& m) {
  os << kModelMagic << " v" << kModelVersion << '\n';
  os << "window " << m.window << '\n';
  os << "params " << m.params.proposals << ' ' << m.params.block << ' ' << m.params.cell << ' ' << m.params.bins << '\n';
  os << "label " << m.label << '\n';
  os << "train_accuracy " << hex_double(m.train_accuracy) << '\n';
  os << "degenerate " << (m.degenerate ? 1 : 0) << '\n';
  os << "bias " << hex_double(m.bias) << '\n';
  os << "weights " << m.weights.size() << '\n';
  for (double w : m.weights) os << hex_double(w) << '\n';
}

inline LinearModel read_model(std::istream& is) {
  auto expect = [&](const std::string& key) {
    std::string k;
    if (!(is >> k) || k != key) throw Error("read_model: expected '" + key + "'");
  };
  std::string magic, version;
  if (!(is >> magic >> version) || magic != kModelMagic) throw Error("read_model: bad magic");
  if (version != "v" + std::to_string(kModelVersion)) throw Error("read_model: unsupported version " + version);
  LinearModel m;
  std::string tok;
  expect("window");
  is >> m.window;
  expect("params");
  is >> m.params.proposals >> m.params.block >> m.params.cell >> m.params.bins;
  expect("label");
  is >> m.label;
  expect("train_accuracy");
  is >> tok;
  m.train_accuracy = parse_double(tok);
  expect("degenerate");
  int deg = 0;
  is >> deg;
  m.degenerate = deg != 0;
  expect("bias");
  is >> tok;
  m.bias = parse_double(tok);
  expect("weights");
  std::size_t n = 0;
  is >> n;
  if (!is) throw Error("read_model: truncated header");
  m.weights.resize(n);
  for (auto& w : m.weights) {
    if (!(is >> tok)) throw Error("read_model: truncated weights");
    w = parse_double(tok);
  }
  if (m.weights.size() != feature_length(m.window, m.params)) throw Error("read_model: weight length mismatch");
  return m;
}

}  // namespace adet
