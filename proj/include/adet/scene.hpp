#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "adet/core.hpp"
#include "adet/random.hpp"

namespace adet {

inline constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  bool operator==(const Vec2&) const = default;
};

inline Vec2 heading_vector(double heading) { return {std::cos(heading), std::sin(heading)}; }

// Pinhole camera looking along the drone heading; the optical centre is the
// image centre and sign centres sit at camera height.
struct Camera {
  double focal = 300.0;  // pixels
  int width = 480;
  int height = 270;

  double cx() const { return 0.5 * width; }
  double cy() const { return 0.5 * height; }
};

struct Pose {
  Vec2 position;
  double heading = 0.0;  // radians, counter-clockwise from +x
};

struct Sign {
  SignClass cls = SignClass::Left;
  Vec2 position;       // cm
  Vec2 facing{-1, 0};  // unit normal pointing away from the mounting surface
  double size = 40.0;  // physical side, cm
};

struct ProjectedSign {
  SignClass cls = SignClass::Left;
  BBox box;  // unclipped image-plane square
  double depth = 0.0;
  double lateral = 0.0;
};

// h = f * S / d along the optical axis.
inline std::optional<ProjectedSign> project_sign(const Camera& cam, const Pose& pose, const Sign& sign,
                                                 double min_depth = 10.0) {
  const Vec2 fwd = heading_vector(pose.heading);
  const Vec2 right{fwd.y, -fwd.x};
  const Vec2 d = sign.position - pose.position;
  const double depth = d.dot(fwd);
  if (depth < min_depth) return std::nullopt;
  const double lateral = d.dot(right);
  const double h = cam.focal * sign.size / depth;
  const double u = cam.cx() + cam.focal * lateral / depth;
  const double v = cam.cy();
  ProjectedSign p;
  p.cls = sign.cls;
  p.box = BBox::from_center(u, v, h, h);
  p.depth = depth;
  p.lateral = lateral;
  return p;
}

inline bool box_in_view(const Camera& cam, const BBox& b) {
  return b.right() > 0.0 && b.x < cam.width && b.bottom() > 0.0 && b.y < cam.height;
}

// Visible part of a projected box, or nothing when less than min_fraction of
// it lands inside the image.
inline std::optional<BBox> clip_to_view(const Camera& cam, const BBox& b, double min_fraction = 0.5) {
  const double x0 = std::max(0.0, b.x), y0 = std::max(0.0, b.y);
  const double x1 = std::min<double>(cam.width, b.right()), y1 = std::min<double>(cam.height, b.bottom());
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  if ((x1 - x0) * (y1 - y0) < min_fraction * b.area()) return std::nullopt;
  return BBox(x0, y0, x1 - x0, y1 - y0);
}

// Sign face pattern on the unit square: true where the face is dark.
inline bool glyph_dark(SignClass cls, double u, double v) {
  if (u < 0.1 || u > 0.9 || v < 0.1 || v > 0.9) return true;  // border
  switch (cls) {
    case SignClass::Right:
      u = 1.0 - u;
      [[fallthrough]];
    case SignClass::Left: {
      if (u >= 0.40 && u <= 0.80 && v >= 0.42 && v <= 0.58) return true;
      if (u >= 0.18 && u <= 0.45 && std::abs(v - 0.5) <= (u - 0.18) / 0.27 * 0.26) return true;
      return false;
    }
    case SignClass::Stop: {
      const double x = u - 0.5, y = v - 0.5;
      const bool oct = std::max(std::abs(x), std::abs(y)) <= 0.3 && std::abs(x) + std::abs(y) <= 0.42;
      const bool bar = std::abs(y) <= 0.05 && std::abs(x) <= 0.22;
      return oct && !bar;
    }
    case SignClass::Wait: {
      const double hx = u - 0.5, hy = v - 0.27;
      if (hx * hx + hy * hy <= 0.08 * 0.08) return true;
      if (u >= 0.45 && u <= 0.55 && v >= 0.37 && v <= 0.62) return true;
      if (u >= 0.32 && u <= 0.68 && v >= 0.40 && v <= 0.46) return true;
      // legs: segments from (0.5, 0.62) to (0.38 / 0.62, 0.84)
      if (v >= 0.62 && v <= 0.84) {
        const double t = (v - 0.62) / 0.22;
        if (std::abs(u - (0.5 - 0.12 * t)) <= 0.04 || std::abs(u - (0.5 + 0.12 * t)) <= 0.04) return true;
      }
      return false;
    }
    case SignClass::Goal: {
      if (u < 0.2 || u > 0.8 || v < 0.2 || v > 0.8) return false;
      const int i = std::min(3, static_cast<int>((u - 0.2) / 0.15));
      const int j = std::min(3, static_cast<int>((v - 0.2) / 0.15));
      return (i + j) % 2 == 0;
    }
  }
  return false;
}

struct SceneLook {
  double clutter = 0.3;       // 0 = plain backdrop, 1 = heavy texture
  double illumination = 1.0;  // global intensity scale
};

// Horizontally periodic backdrop covering a full turn of heading, so yaw
// pans it by focal pixels per radian. Values are centred on zero in
// roughly [-1, 1]; clutter scales them at render time.
class Backdrop {
 public:
  Backdrop(const Camera& cam, std::uint64_t seed)
      : width_(std::max(cam.width, static_cast<int>(std::lround(2.0 * kPi * cam.focal)))), height_(cam.height) {
    values_.assign(static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_), 0.0f);
    Rng rng(seed);
    add_value_noise(rng, 48, 0.55f);
    add_value_noise(rng, 12, 0.30f);
    // Shelving-like blocks: these create strong straight edges that compete
    // with signs for proposals.
    const int blocks = width_ / 9;
    for (int b = 0; b < blocks; ++b) {
      const int w = rng.integer(8, 70), h = rng.integer(8, 70);
      const int x = rng.integer(0, width_ - 1), y = rng.integer(-h / 2, height_ - 1);
      const float level = static_cast<float>(rng.uniform(-1.0, 1.0));
      fill(x, y, w, h, level, 0.3f);
    }
    // Decoy plates: bordered squares with bar patterns, sign-like at a glance.
    const int decoys = width_ / 40;
    for (int d = 0; d < decoys; ++d) {
      const int s = rng.integer(18, 90);
      const int x = rng.integer(0, width_ - 1), y = rng.integer(0, std::max(0, height_ - s));
      const float dark = static_cast<float>(rng.uniform(-1.0, -0.6)), bright = static_cast<float>(rng.uniform(0.6, 1.0));
      fill(x, y, s, s, dark, 0.0f);
      const int b = std::max(2, s / 10);
      fill(x + b, y + b, s - 2 * b, s - 2 * b, bright, 0.0f);
      const int bars = rng.integer(1, 4);
      for (int k = 0; k < bars; ++k) {
        const bool horiz = rng.bernoulli(0.5);
        const int len = rng.integer(s / 3, s - 3 * b), thick = rng.integer(std::max(1, s / 12), std::max(2, s / 5));
        const int ox = x + rng.integer(b, std::max(b, s - b - (horiz ? len : thick)));
        const int oy = y + rng.integer(b, std::max(b, s - b - (horiz ? thick : len)));
        fill(ox, oy, horiz ? len : thick, horiz ? thick : len, dark, 0.0f);
      }
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  float at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }

 private:
  float& at(int x, int y) { return values_[static_cast<std::size_t>(y) * width_ + x]; }

  // Paints a rectangle (wrapping horizontally); keep blends in what was there.
  void fill(int x, int y, int w, int h, float level, float keep) {
    for (int yy = std::max(0, y); yy < std::min(height_, y + h); ++yy)
      for (int xx = x; xx < x + w; ++xx) {
        float& v = at(((xx % width_) + width_) % width_, yy);
        v = keep * v + (1.0f - keep) * 1.5f * level;
      }
  }

  void add_value_noise(Rng& rng, int cell, float amp) {
    const int gw = (width_ + cell - 1) / cell;  // periodic in x
    const int gh = height_ / cell + 2;
    std::vector<float> lattice(static_cast<std::size_t>(gw) * gh);
    for (auto& v : lattice) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    auto L = [&](int i, int j) { return lattice[static_cast<std::size_t>(j) * gw + ((i % gw + gw) % gw)]; };
    for (int y = 0; y < height_; ++y) {
      const float fy = static_cast<float>(y) / cell;
      const int j = static_cast<int>(fy);
      const float ty = fy - j;
      for (int x = 0; x < width_; ++x) {
        const float fx = static_cast<float>(x) * gw / width_;
        const int i = static_cast<int>(fx);
        const float tx = fx - i;
        const float a = L(i, j) * (1 - tx) + L(i + 1, j) * tx;
        const float b = L(i, j + 1) * (1 - tx) + L(i + 1, j + 1) * tx;
        at(x, y) += amp * (a * (1 - ty) + b * ty);
      }
    }
  }

  int width_, height_;
  std::vector<float> values_;
};

inline constexpr float kSignDark = 0.08f;
inline constexpr float kSignBright = 0.92f;
inline constexpr float kBackdropMean = 0.5f;

// Draws the backdrop (panned by pan_px), then signs far-to-near, then scales
// by illumination and adds seeded sensor noise.
inline Frame render_scene(const Camera& cam, const Backdrop& backdrop, const SceneLook& look, double pan_px,
                          std::vector<ProjectedSign> signs, std::uint64_t noise_seed, std::int64_t index = 0) {
  const int W = cam.width, H = cam.height;
  std::vector<float> img(static_cast<std::size_t>(W) * H);
  const int bw = backdrop.width();
  int off = static_cast<int>(std::lround(pan_px)) % bw;
  if (off < 0) off += bw;
  const float amp = static_cast<float>(0.5 * look.clutter);
  for (int y = 0; y < H; ++y) {
    const int by = std::min(y, backdrop.height() - 1);
    float* r = img.data() + static_cast<std::size_t>(y) * W;
    for (int x = 0; x < W; ++x) r[x] = kBackdropMean + amp * backdrop.at((x + off) % bw, by);
  }

  std::sort(signs.begin(), signs.end(), [](const ProjectedSign& a, const ProjectedSign& b) { return a.depth > b.depth; });
  for (const auto& s : signs) {
    const BBox& b = s.box;
    const int x0 = std::max(0, static_cast<int>(std::floor(b.x)));
    const int x1 = std::min(W, static_cast<int>(std::ceil(b.right())));
    const int y0 = std::max(0, static_cast<int>(std::floor(b.y)));
    const int y1 = std::min(H, static_cast<int>(std::ceil(b.bottom())));
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        // 2x2 supersampling with partial pixel coverage at the sign edge.
        float acc = 0.0f;
        int inside = 0;
        for (int sy = 0; sy < 2; ++sy) {
          for (int sx = 0; sx < 2; ++sx) {
            const double px = x + 0.25 + 0.5 * sx, py = y + 0.25 + 0.5 * sy;
            const double u = (px - b.x) / b.w, v = (py - b.y) / b.h;
            if (u < 0.0 || u >= 1.0 || v < 0.0 || v >= 1.0) continue;
            acc += glyph_dark(s.cls, u, v) ? kSignDark : kSignBright;
            ++inside;
          }
        }
        if (inside == 0) continue;
        float& p = img[static_cast<std::size_t>(y) * W + x];
        p = (acc + p * static_cast<float>(4 - inside)) * 0.25f;
      }
    }
  }

  XorShift32 noise(noise_seed);
  const float illum = static_cast<float>(look.illumination);
  const float sigma = static_cast<float>(3.0 + 10.0 * look.clutter);
  std::vector<std::uint8_t> px(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const float v = (img[i] * 255.0f + sigma * noise.symmetric()) * illum;
    px[i] = static_cast<std::uint8_t>(std::clamp(static_cast<int>(std::lround(v)), 0, 255));
  }
  return Frame(W, H, std::move(px), index);
}

}  // namespace adet
