#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "adet/core.hpp"

namespace adet {

struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

struct Flow {
  Point from;
  Point to;
  bool valid = false;
};

struct TrackerState {
  std::vector<Point> points;
  BBox box;           // B_t
  BBox template_box;  // B_d the track was started from
  int frames_since_init = 0;
  int frames_since_detect = 0;
};

struct CornerOptions {
  double min_score = 25.0;  // absolute floor on the minimum eigenvalue
  double quality = 0.01;    // relative to the best score in the box
  double min_distance = 4.0;
};

namespace detail {

// Central-difference gradients (half differences) with replicated borders.
struct GradientImage {
  int width = 0;
  int height = 0;
  std::vector<float> gx, gy;

  explicit GradientImage(const std::vector<float>& img, int w, int h) : width(w), height(h), gx(img.size()), gy(img.size()) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const auto at = [&](int xx, int yy) {
          return img[static_cast<std::size_t>(std::clamp(yy, 0, h - 1)) * w + static_cast<std::size_t>(std::clamp(xx, 0, w - 1))];
        };
        const std::size_t i = static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x);
        gx[i] = 0.5f * (at(x + 1, y) - at(x - 1, y));
        gy[i] = 0.5f * (at(x, y + 1) - at(x, y - 1));
      }
    }
  }
};

inline std::vector<float> to_float(const Frame& f) {
  return std::vector<float>(f.pixels().begin(), f.pixels().end());
}

inline std::vector<float> half(const std::vector<float>& img, int w, int h, int& hw, int& hh) {
  hw = std::max(1, w / 2);
  hh = std::max(1, h / 2);
  std::vector<float> out(static_cast<std::size_t>(hw) * hh);
  for (int y = 0; y < hh; ++y) {
    for (int x = 0; x < hw; ++x) {
      const int x0 = std::min(2 * x, w - 1), x1 = std::min(2 * x + 1, w - 1);
      const int y0 = std::min(2 * y, h - 1), y1 = std::min(2 * y + 1, h - 1);
      out[static_cast<std::size_t>(y) * hw + x] =
          0.25f * (img[static_cast<std::size_t>(y0) * w + x0] + img[static_cast<std::size_t>(y0) * w + x1] +
                   img[static_cast<std::size_t>(y1) * w + x0] + img[static_cast<std::size_t>(y1) * w + x1]);
    }
  }
  return out;
}

inline double bilinear(const std::vector<float>& img, int w, int h, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = std::min(static_cast<int>(x), w - 1), y0 = std::min(static_cast<int>(y), h - 1);
  const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0, fy = y - y0;
  const auto at = [&](int xx, int yy) { return static_cast<double>(img[static_cast<std::size_t>(yy) * w + xx]); };
  return (1 - fy) * ((1 - fx) * at(x0, y0) + fx * at(x1, y0)) + fy * ((1 - fx) * at(x0, y1) + fx * at(x1, y1));
}

inline double min_eigen(double sxx, double sxy, double syy) {
  const double tr = 0.5 * (sxx + syy);
  const double d = 0.5 * (sxx - syy);
  return tr - std::sqrt(d * d + sxy * sxy);
}

struct Pyramid {
  std::vector<std::vector<float>> img;
  std::vector<int> w, h;

  Pyramid(const Frame& f, int levels) {
    img.push_back(to_float(f));
    w.push_back(f.width());
    h.push_back(f.height());
    for (int l = 1; l < levels; ++l) {
      int hw = 0, hh = 0;
      img.push_back(half(img.back(), w.back(), h.back(), hw, hh));
      w.push_back(hw);
      h.push_back(hh);
    }
  }
};

}  // namespace detail

// Minimum-eigenvalue corners of the 3x3 structure tensor inside box,
// strongest first (ties in scan order), at least min_distance apart.
inline std::vector<Point> extract_corners(const Frame& frame, const BBox& box, int max_points, const CornerOptions& opt = {}) {
  std::vector<Point> out;
  if (max_points <= 0) return out;
  const PixelRect r = rasterize(box, frame.width(), frame.height());
  if (r.empty()) return out;

  // Gradients on the box plus a 2-pixel margin.
  const int x0 = std::max(r.x0 - 2, 0), y0 = std::max(r.y0 - 2, 0);
  const int x1 = std::min(r.x1 + 2, frame.width()), y1 = std::min(r.y1 + 2, frame.height());
  const int w = x1 - x0, h = y1 - y0;
  std::vector<float> sub(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) sub[static_cast<std::size_t>(y) * w + x] = frame.at(x0 + x, y0 + y);
  const detail::GradientImage g(sub, w, h);

  struct Cand {
    double score;
    int x, y;
  };
  std::vector<Cand> cands;
  double best = 0.0;
  for (int y = r.y0; y < r.y1; ++y) {
    for (int x = r.x0; x < r.x1; ++x) {
      double sxx = 0, sxy = 0, syy = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int lx = std::clamp(x + dx - x0, 0, w - 1), ly = std::clamp(y + dy - y0, 0, h - 1);
          const std::size_t i = static_cast<std::size_t>(ly) * w + static_cast<std::size_t>(lx);
          sxx += static_cast<double>(g.gx[i]) * g.gx[i];
          sxy += static_cast<double>(g.gx[i]) * g.gy[i];
          syy += static_cast<double>(g.gy[i]) * g.gy[i];
        }
      }
      const double s = detail::min_eigen(sxx, sxy, syy);
      if (s >= opt.min_score) {
        cands.push_back({s, x, y});
        best = std::max(best, s);
      }
    }
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.score > b.score; });
  const double d2 = opt.min_distance * opt.min_distance;
  for (const auto& c : cands) {
    if (c.score < opt.quality * best) break;
    const Point p{static_cast<double>(c.x), static_cast<double>(c.y)};
    const bool crowded = std::any_of(out.begin(), out.end(), [&](const Point& q) {
      return (q.x - p.x) * (q.x - p.x) + (q.y - p.y) * (q.y - p.y) < d2;
    });
    if (crowded) continue;
    out.push_back(p);
    if (static_cast<int>(out.size()) >= max_points) break;
  }
  return out;
}

struct LkOptions {
  int levels = 2;
  int half_window = 3;  // 7x7
  int max_iterations = 10;
  double epsilon = 0.01;   // px
  double min_eigen = 1.0;  // per-pixel mean, intensity^2
};

// Pyramidal Lucas-Kanade for each point from prev to next.
inline std::vector<Flow> lk_step(const Frame& prev, const Frame& next, const std::vector<Point>& points, const LkOptions& opt = {}) {
  if (prev.width() != next.width() || prev.height() != next.height()) throw Error("lk_step: frame size mismatch");
  const detail::Pyramid P(prev, opt.levels), N(next, opt.levels);
  std::vector<detail::GradientImage> G;
  for (int l = 0; l < opt.levels; ++l) G.emplace_back(P.img[static_cast<std::size_t>(l)], P.w[static_cast<std::size_t>(l)], P.h[static_cast<std::size_t>(l)]);
  const int hw = opt.half_window;
  const double area = static_cast<double>((2 * hw + 1) * (2 * hw + 1));

  std::vector<Flow> out;
  for (const auto& pt : points) {
    Flow f{pt, pt, true};
    double gx = 0.0, gy = 0.0;  // guess carried down the pyramid
    for (int l = opt.levels - 1; l >= 0 && f.valid; --l) {
      const auto L = static_cast<std::size_t>(l);
      const int w = P.w[L], h = P.h[L];
      const double sc = std::ldexp(1.0, -l);
      const double px = pt.x * sc, py = pt.y * sc;
      double sxx = 0, sxy = 0, syy = 0;
      std::vector<double> ix, iy, iv;
      for (int dy = -hw; dy <= hw; ++dy) {
        for (int dx = -hw; dx <= hw; ++dx) {
          const double x = px + dx, y = py + dy;
          const double a = detail::bilinear(G[L].gx, w, h, x, y), b = detail::bilinear(G[L].gy, w, h, x, y);
          ix.push_back(a);
          iy.push_back(b);
          iv.push_back(detail::bilinear(P.img[L], w, h, x, y));
          sxx += a * a;
          sxy += a * b;
          syy += b * b;
        }
      }
      if (detail::min_eigen(sxx, sxy, syy) / area < opt.min_eigen) {
        f.valid = false;
        break;
      }
      const double det = sxx * syy - sxy * sxy;
      double vx = 0.0, vy = 0.0;
      for (int it = 0; it < opt.max_iterations; ++it) {
        double bx = 0.0, by = 0.0;
        std::size_t k = 0;
        for (int dy = -hw; dy <= hw; ++dy) {
          for (int dx = -hw; dx <= hw; ++dx, ++k) {
            const double j = detail::bilinear(N.img[L], w, h, px + dx + gx + vx, py + dy + gy + vy);
            const double diff = iv[k] - j;
            bx += diff * ix[k];
            by += diff * iy[k];
          }
        }
        const double ex = (syy * bx - sxy * by) / det;
        const double ey = (sxx * by - sxy * bx) / det;
        vx += ex;
        vy += ey;
        if (std::hypot(ex, ey) < opt.epsilon) break;
      }
      gx += vx;
      gy += vy;
      if (l > 0) {
        gx *= 2.0;
        gy *= 2.0;
      }
    }
    f.to = {pt.x + gx, pt.y + gy};
    if (f.to.x < 0.0 || f.to.y < 0.0 || f.to.x > next.width() - 1.0 || f.to.y > next.height() - 1.0) f.valid = false;
    out.push_back(f);
  }
  return out;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw Error("median of empty set");
  const std::size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m), v.end());
  const double hi = v[m];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m));
  return 0.5 * (lo + hi);
}

inline constexpr int kMinTrackPoints = 4;
inline constexpr double kMinScaleStep = 0.5;
inline constexpr double kMaxScaleStep = 2.0;

// Median-flow box update: scale is the median ratio of pairwise distances,
// the centre the median of each point's prediction of it.
inline BBox update_box(TrackerState& st, const std::vector<Flow>& flows) {
  std::vector<Point> a, b;
  for (const auto& f : flows) {
    if (!f.valid) continue;
    a.push_back(f.from);
    b.push_back(f.to);
  }
  if (static_cast<int>(a.size()) < kMinTrackPoints) throw Error("track lost");

  std::vector<double> ratios;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const double d0 = std::hypot(a[i].x - a[j].x, a[i].y - a[j].y);
      if (d0 < 1e-9) continue;
      ratios.push_back(std::hypot(b[i].x - b[j].x, b[i].y - b[j].y) / d0);
    }
  }
  const double s = ratios.empty() ? 1.0 : std::clamp(median(ratios), kMinScaleStep, kMaxScaleStep);

  const double cx = st.box.cx(), cy = st.box.cy();
  std::vector<double> ex, ey;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ex.push_back(b[i].x - s * (a[i].x - cx));
    ey.push_back(b[i].y - s * (a[i].y - cy));
  }
  st.box = BBox::from_center(median(ex), median(ey), st.box.w * s, st.box.h * s);
  st.points = b;
  ++st.frames_since_init;
  ++st.frames_since_detect;
  return st.box;
}

inline bool check(const BBox& tracked, const BBox& detected, double theta) { return iou(tracked, detected) >= theta; }

inline constexpr int kMaxTrackPoints = 25;
inline constexpr int kReinitFrames = 10;

// KLT tracker for one stream. Corners are re-extracted inside the current
// box every reinit_frames tracked frames.
class KltTracker {
 public:
  explicit KltTracker(int max_points = kMaxTrackPoints, int reinit_frames = kReinitFrames)
      : max_points_(max_points), reinit_frames_(reinit_frames) {}

  // Starts a track on a detector box; false if the box has too little texture.
  bool init(const Frame& frame, const BBox& box) {
    state_ = TrackerState{};
    state_.box = box;
    state_.template_box = box;
    state_.points = extract_corners(frame, box, max_points_);
    prev_ = frame;
    active_ = static_cast<int>(state_.points.size()) >= kMinTrackPoints;
    return active_;
  }

  // Propagates the box to frame; nullopt when the track is lost.
  std::optional<BBox> track(const Frame& frame) {
    if (!active_) return std::nullopt;
    const auto flows = lk_step(*prev_, frame, state_.points);
    try {
      update_box(state_, flows);
    } catch (const Error&) {
      active_ = false;
      return std::nullopt;
    }
    prev_ = frame;
    if (state_.frames_since_init >= reinit_frames_) {
      state_.points = extract_corners(frame, state_.box, max_points_);
      state_.frames_since_init = 0;
      ++reinitializations_;
      if (static_cast<int>(state_.points.size()) < kMinTrackPoints) active_ = false;
    }
    return state_.box;
  }

  void reset() { active_ = false; }
  bool active() const { return active_; }
  const TrackerState& state() const { return state_; }
  int reinitializations() const { return reinitializations_; }

 private:
  int max_points_;
  int reinit_frames_;
  TrackerState state_;
  std::optional<Frame> prev_;
  bool active_ = false;
  int reinitializations_ = 0;
};

}  // namespace adet
