#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace adet {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Axis-aligned box in pixel space: top-left corner plus extent.
// Kept in reals so tracker updates can move it by sub-pixel amounts.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;

  BBox() = default;
  BBox(double x_, double y_, double w_, double h_) : x(x_), y(y_), w(w_), h(h_) {
    if (!(std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h)))
      throw Error("bbox: non-finite coordinate");
    if (!(w > 0.0) || !(h > 0.0)) throw Error("bbox: non-positive extent");
  }

  static BBox from_center(double cx, double cy, double w, double h) {
    return BBox(cx - 0.5 * w, cy - 0.5 * h, w, h);
  }

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }
  double area() const { return w * h; }

  bool operator==(const BBox&) const = default;
};

inline double intersection_area(const BBox& a, const BBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

// Intersection over union. Zero-area overlap is exactly 0.
inline double iou(const BBox& a, const BBox& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

// 8-bit grayscale image, row-major.
class Frame {
 public:
  Frame() = default;
  Frame(int width, int height, std::uint8_t fill = 0, std::int64_t index = 0)
      : width_(width), height_(height), index_(index) {
    if (width < 0 || height < 0) throw Error("frame: negative size");
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }
  Frame(int width, int height, std::vector<std::uint8_t> pixels, std::int64_t index = 0)
      : width_(width), height_(height), index_(index), pixels_(std::move(pixels)) {
    if (width < 0 || height < 0) throw Error("frame: negative size");
    if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw Error("frame: pixel buffer length does not match width*height");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::int64_t index() const { return index_; }
  void set_index(std::int64_t i) { index_ = i; }
  bool empty() const { return pixels_.empty(); }

  std::uint8_t at(int x, int y) const {
    return pixels_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)];
  }
  std::uint8_t& at(int x, int y) {
    return pixels_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)];
  }
  // Border-replicated access.
  std::uint8_t clamped(int x, int y) const {
    return at(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
  }

  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::span<std::uint8_t> pixels() { return pixels_; }
  const std::uint8_t* row(int y) const { return pixels_.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(width_); }

  bool same_pixels(const Frame& o) const {
    return width_ == o.width_ && height_ == o.height_ && pixels_ == o.pixels_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::int64_t index_ = 0;
  std::vector<std::uint8_t> pixels_;
};

struct Detection {
  BBox box;
  double confidence = -std::numeric_limits<double>::infinity();
  int label = -1;
  double cost = 0.0;        // wall-clock seconds spent producing it
  bool degenerate = false;  // no proposal was evaluated

  bool valid() const { return !degenerate && std::isfinite(confidence); }
};

// Integer pixel rectangle [x0, x1) x [y0, y1) covered by a box after
// rounding to the pixel grid and clamping to the frame.
struct PixelRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
};

inline PixelRect rasterize(const BBox& box, int frame_w, int frame_h) {
  PixelRect r;
  r.x0 = static_cast<int>(std::lround(box.x));
  r.y0 = static_cast<int>(std::lround(box.y));
  r.x1 = static_cast<int>(std::lround(box.right()));
  r.y1 = static_cast<int>(std::lround(box.bottom()));
  if (r.x1 <= r.x0) r.x1 = r.x0 + 1;
  if (r.y1 <= r.y0) r.y1 = r.y0 + 1;
  r.x0 = std::max(r.x0, 0);
  r.y0 = std::max(r.y0, 0);
  r.x1 = std::min(r.x1, frame_w);
  r.y1 = std::min(r.y1, frame_h);
  return r;
}

// Nearest-neighbour resample of the frame-clamped crop to win x win.
inline void crop_resize_into(const Frame& frame, const BBox& box, int win, std::vector<std::uint8_t>& out) {
  if (win <= 0) throw Error("crop_resize: window must be positive");
  const PixelRect r = rasterize(box, frame.width(), frame.height());
  if (r.empty()) throw Error("empty crop");
  out.resize(static_cast<std::size_t>(win) * static_cast<std::size_t>(win));
  const int cw = r.width();
  const int ch = r.height();
  // Column lookup shared by all rows.
  int xs[1024];
  std::vector<int> xs_heap;
  int* xmap = xs;
  if (win > 1024) {
    xs_heap.resize(static_cast<std::size_t>(win));
    xmap = xs_heap.data();
  }
  for (int i = 0; i < win; ++i) xmap[i] = r.x0 + static_cast<int>((static_cast<long long>(2 * i + 1) * cw) / (2LL * win));
  for (int j = 0; j < win; ++j) {
    const int sy = r.y0 + static_cast<int>((static_cast<long long>(2 * j + 1) * ch) / (2LL * win));
    const std::uint8_t* src = frame.row(sy);
    std::uint8_t* dst = out.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(win);
    for (int i = 0; i < win; ++i) dst[i] = src[xmap[i]];
  }
}

inline Frame crop_resize(const Frame& frame, const BBox& box, int win) {
  std::vector<std::uint8_t> buf;
  crop_resize_into(frame, box, win, buf);
  return Frame(win, win, std::move(buf), frame.index());
}

// Sign classes shared by the detector, the renderer and the navigator.
enum class SignClass : int { Left = 0, Right = 1, Stop = 2, Wait = 3, Goal = 4 };
inline constexpr int kNumSignClasses = 5;

inline const char* sign_name(SignClass c) {
  switch (c) {
    case SignClass::Left: return "LEFT";
    case SignClass::Right: return "RIGHT";
    case SignClass::Stop: return "STOP";
    case SignClass::Wait: return "WAIT";
    case SignClass::Goal: return "GOAL";
  }
  return "?";
}

inline const char* label_name(int label) {
  if (label < 0 || label >= kNumSignClasses) return "none";
  return sign_name(static_cast<SignClass>(label));
}

}  // namespace adet
