#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "kerman/error.hpp"
#include "kerman/geometry.hpp"
#include "kerman/thread_pool.hpp"

namespace kerman {

struct BgConfig {
  int modes = 5;
  int history = 500;            // learning rate = 1 / history
  double var_threshold = 16.0;  // squared Mahalanobis match cutoff
  double background_ratio = 0.9;
  double var_floor = 4.0;
  double var_init = 225.0;
  double var_max = 5.0 * 225.0;
  double min_area = 64.0;
  bool morphology = true;       // 3x3 opening before contour extraction

  double learning_rate() const noexcept { return 1.0 / history; }
};

struct FgMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  FgMask() = default;
  FgMask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

  bool at(int x, int y) const noexcept { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) noexcept { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  std::size_t count() const noexcept { return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1)); }
};

struct Contour {
  BBox box;
  Point2 center;  // pixel-index centroid
  double area = 0.0;
};

// Per-pixel Gaussian mixture over intensity. Modes are kept sorted by
// descending weight; a match is background when the weight of the modes ranked
// above it is still below background_ratio.
class BgModel {
 public:
  explicit BgModel(BgConfig cfg = {}) : cfg_(cfg) {}

  const BgConfig& config() const noexcept { return cfg_; }
  bool initialized() const noexcept { return width_ > 0; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  int mode_count(int x, int y) const noexcept { return count_[pixel(x, y)]; }
  double weight(int x, int y, int m) const noexcept { return weight_[slot(pixel(x, y), m)]; }
  double mean(int x, int y, int m) const noexcept { return mean_[slot(pixel(x, y), m)]; }
  double variance(int x, int y, int m) const noexcept { return var_[slot(pixel(x, y), m)]; }

  // Classifies and learns one frame. The first frame seeds the model and is
  // reported as all background. Rows are processed in bands on `pool` if given.
  FgMask apply(const Frame& frame, ThreadPool* pool = nullptr) {
    if (!initialized()) {
      seed(frame);
      return FgMask(width_, height_);
    }
    if (frame.width != width_ || frame.height != height_) {
      throw Error(ErrorKind::DimensionMismatch, "frame size differs from background model");
    }
    FgMask mask(width_, height_);
    auto band = [&](std::size_t b, std::size_t bands) {
      const int y0 = static_cast<int>(b * height_ / bands);
      const int y1 = static_cast<int>((b + 1) * height_ / bands);
      for (int y = y0; y < y1; ++y) {
        for (int x = 0; x < width_; ++x) {
          const std::size_t p = pixel(x, y);
          mask.bits[p] = update_pixel(p, frame.luma[p]) ? 0 : 1;
        }
      }
    };
    if (pool && pool->size() > 1) {
      const std::size_t bands = pool->size() * 2;
      pool->parallel_for(bands, [&](std::size_t b) { band(b, bands); });
    } else {
      band(0, 1);
    }
    return mask;
  }

 private:
  std::size_t pixel(int x, int y) const noexcept { return static_cast<std::size_t>(y) * width_ + x; }
  std::size_t slot(std::size_t p, int m) const noexcept { return p * cfg_.modes + m; }

  void seed(const Frame& frame) {
    width_ = frame.width;
    height_ = frame.height;
    const std::size_t n = static_cast<std::size_t>(width_) * height_;
    count_.assign(n, 1);
    weight_.assign(n * cfg_.modes, 0.0);
    mean_.assign(n * cfg_.modes, 0.0);
    var_.assign(n * cfg_.modes, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
      weight_[slot(p, 0)] = 1.0;
      mean_[slot(p, 0)] = frame.luma[p];
      var_[slot(p, 0)] = cfg_.var_init;
    }
  }

  void swap_modes(std::size_t p, int a, int b) noexcept {
    std::swap(weight_[slot(p, a)], weight_[slot(p, b)]);
    std::swap(mean_[slot(p, a)], mean_[slot(p, b)]);
    std::swap(var_[slot(p, a)], var_[slot(p, b)]);
  }

  // Returns true when the pixel is background.
  bool update_pixel(std::size_t p, double value) noexcept {
    const double alpha = cfg_.learning_rate();
    const int n = count_[p];
    bool matched = false;
    bool background = false;
    double above = 0.0;  // weight of modes ranked above the current one

    for (int m = 0; m < n; ++m) {
      const std::size_t s = slot(p, m);
      double w = weight_[s] * (1.0 - alpha);
      if (!matched) {
        const double diff = value - mean_[s];
        const double d2 = diff * diff;
        if (d2 < cfg_.var_threshold * var_[s]) {
          matched = true;
          background = above < cfg_.background_ratio;
          w += alpha;
          const double rate = alpha / w;
          mean_[s] += rate * diff;
          var_[s] = std::clamp(var_[s] + rate * (d2 - var_[s]), cfg_.var_floor, cfg_.var_max);
          weight_[s] = w;
          for (int i = m; i > 0 && weight_[slot(p, i)] > weight_[slot(p, i - 1)]; --i) swap_modes(p, i, i - 1);
          continue;
        }
      }
      weight_[s] = w;
      above += w;
    }

    if (!matched) {
      const int m = n < cfg_.modes ? n : cfg_.modes - 1;
      if (n < cfg_.modes) count_[p] = static_cast<std::uint8_t>(n + 1);
      const std::size_t s = slot(p, m);
      weight_[s] = alpha;
      mean_[s] = value;
      var_[s] = cfg_.var_init;
      for (int i = m; i > 0 && weight_[slot(p, i)] > weight_[slot(p, i - 1)]; --i) swap_modes(p, i, i - 1);
    }

    double total = 0.0;
    for (int m = 0; m < count_[p]; ++m) total += weight_[slot(p, m)];
    if (total > 0.0) {
      for (int m = 0; m < count_[p]; ++m) weight_[slot(p, m)] /= total;
    }
    return background;
  }

  BgConfig cfg_;
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> count_;
  std::vector<double> weight_;
  std::vector<double> mean_;
  std::vector<double> var_;
};

// 3x3 erosion followed by 3x3 dilation; out-of-frame neighbours are ignored.
inline FgMask open3x3(const FgMask& in) {
  auto pass = [](const FgMask& src, bool erode) {
    FgMask dst(src.width, src.height);
    for (int y = 0; y < src.height; ++y) {
      for (int x = 0; x < src.width; ++x) {
        bool v = erode;
        for (int dy = -1; dy <= 1 && v == erode; ++dy) {
          const int yy = y + dy;
          if (yy < 0 || yy >= src.height) continue;
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = x + dx;
            if (xx < 0 || xx >= src.width) continue;
            if (src.at(xx, yy) != erode) {
              v = !erode;
              break;
            }
          }
        }
        dst.set(x, y, v);
      }
    }
    return dst;
  };
  return pass(pass(in, true), false);
}

// 8-connected components with area >= min_area, largest first.
inline std::vector<Contour> contours(const FgMask& mask, double min_area) {
  std::vector<Contour> out;
  std::vector<std::uint8_t> seen(mask.bits.size(), 0);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * mask.width + x;
      if (!mask.bits[p] || seen[p]) continue;
      seen[p] = 1;
      stack.assign(1, {x, y});
      double sum_x = 0.0;
      double sum_y = 0.0;
      std::size_t area = 0;
      int min_x = x, max_x = x, min_y = y, max_y = y;
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        ++area;
        sum_x += cx;
        sum_y += cy;
        min_x = std::min(min_x, cx);
        max_x = std::max(max_x, cx);
        min_y = std::min(min_y, cy);
        max_y = std::max(max_y, cy);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx;
            const int ny = cy + dy;
            if (nx < 0 || ny < 0 || nx >= mask.width || ny >= mask.height) continue;
            const std::size_t q = static_cast<std::size_t>(ny) * mask.width + nx;
            if (mask.bits[q] && !seen[q]) {
              seen[q] = 1;
              stack.emplace_back(nx, ny);
            }
          }
        }
      }
      if (static_cast<double>(area) < min_area) continue;
      Contour c;
      c.area = static_cast<double>(area);
      c.center = {sum_x / static_cast<double>(area), sum_y / static_cast<double>(area)};
      c.box = {static_cast<double>(min_x), static_cast<double>(min_y), static_cast<double>(max_x - min_x + 1),
               static_cast<double>(max_y - min_y + 1)};
      out.push_back(c);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Contour& a, const Contour& b) { return a.area > b.area; });
  return out;
}

inline bool contour_in_box(const Contour& c, const BBox& b) noexcept { return contains(b, c.center); }

}  // namespace kerman
