#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "kerman/error.hpp"

namespace kerman {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

// Displacement between two points, in pixels.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  double norm() const noexcept { return std::hypot(x, y); }

  friend Vec2 operator-(Vec2 a, Vec2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator+(Vec2 a, Vec2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a) noexcept { return {-a.x, -a.y}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline Vec2 operator-(Point2 a, Point2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator+(Point2 p, Vec2 d) noexcept { return {p.x + d.x, p.y + d.y}; }

inline double distance(Point2 a, Point2 b) noexcept { return (a - b).norm(); }

// Axis-aligned box; (x, y) is the top-left corner.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool valid() const noexcept {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) && w > 0.0 &&
           h > 0.0;
  }
  double area() const noexcept { return w * h; }
  double diagonal() const noexcept { return std::hypot(w, h); }

  friend bool operator==(const BBox&, const BBox&) = default;
};

inline Point2 center(const BBox& b) noexcept { return {b.x + b.w / 2.0, b.y + b.h / 2.0}; }

inline Point2 midpoint(Point2 a, Point2 b) noexcept { return {(a.x + b.x) / 2.0, (a.y + b.y) / 2.0}; }

inline BBox translate(const BBox& b, Vec2 d) noexcept { return {b.x + d.x, b.y + d.y, b.w, b.h}; }

// Same size, centered at c, then shifted so the box lies inside the frame.
inline BBox recenter(const BBox& b, Point2 c, double frame_w, double frame_h) noexcept {
  const double x = std::clamp(c.x - b.w / 2.0, 0.0, std::max(0.0, frame_w - b.w));
  const double y = std::clamp(c.y - b.h / 2.0, 0.0, std::max(0.0, frame_h - b.h));
  return {x, y, b.w, b.h};
}

// Translation-only clamp: keeps dimensions, moves the box inside the frame.
inline BBox clamp_position(const BBox& b, double frame_w, double frame_h) noexcept {
  return recenter(b, center(b), frame_w, frame_h);
}

// Intersection with the frame rectangle; may shrink the box (w or h can become 0).
inline BBox clip_to_frame(const BBox& b, double frame_w, double frame_h) noexcept {
  const double x0 = std::clamp(b.x, 0.0, frame_w);
  const double y0 = std::clamp(b.y, 0.0, frame_h);
  const double x1 = std::clamp(b.x + b.w, 0.0, frame_w);
  const double y1 = std::clamp(b.y + b.h, 0.0, frame_h);
  return {x0, y0, x1 - x0, y1 - y0};
}

inline double intersection_area(const BBox& a, const BBox& b) noexcept {
  const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  return (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
}

inline double iou(const BBox& a, const BBox& b) noexcept {
  // Areas from edge differences so identical boxes give exactly 1.
  const auto edge_area = [](const BBox& r) { return ((r.x + r.w) - r.x) * ((r.y + r.h) - r.y); };
  const double inter = intersection_area(a, b);
  const double uni = edge_area(a) + edge_area(b) - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

// Closed-interval containment.
inline bool contains(const BBox& b, Point2 p) noexcept {
  return p.x >= b.x && p.x <= b.x + b.w && p.y >= b.y && p.y <= b.y + b.h;
}

// 8-bit grayscale image, row-major.
struct Frame {
  std::int64_t index = 0;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> luma;

  Frame() = default;
  Frame(std::int64_t idx, int w, int h, std::vector<std::uint8_t> data)
      : index(idx), width(w), height(h), luma(std::move(data)) {
    if (w <= 0 || h <= 0 || luma.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h)) {
      throw Error(ErrorKind::DimensionMismatch, "frame buffer does not match width x height");
    }
  }
  Frame(std::int64_t idx, int w, int h, std::uint8_t fill = 0)
      : Frame(idx, w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, fill)) {}

  std::uint8_t at(int x, int y) const noexcept { return luma[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) noexcept { return luma[static_cast<std::size_t>(y) * width + x]; }

  // Border-replicating access.
  std::uint8_t clamped(int x, int y) const noexcept {
    return at(std::clamp(x, 0, width - 1), std::clamp(y, 0, height - 1));
  }
};

inline Frame resize_bilinear(const Frame& src, int out_w, int out_h) {
  if (src.width == out_w && src.height == out_h) return src;
  Frame dst(src.index, out_w, out_h);
  const double sx = static_cast<double>(src.width) / out_w;
  const double sy = static_cast<double>(src.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double wx = fx - x0;
      const double top = src.at(x0, y0) * (1.0 - wx) + src.at(x1, y0) * wx;
      const double bottom = src.at(x0, y1) * (1.0 - wx) + src.at(x1, y1) * wx;
      const double v = top * (1.0 - wy) + bottom * wy;
      dst.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return dst;
}

struct Detection {
  BBox box;
  double score = 1.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

}  // namespace kerman
