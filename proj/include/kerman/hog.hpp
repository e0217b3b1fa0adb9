#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "kerman/error.hpp"
#include "kerman/geometry.hpp"

namespace kerman {

inline constexpr int kHogOrientations = 9;
inline constexpr int kHogChannels = 3 * kHogOrientations + 4;  // 18 signed + 9 unsigned + 4 texture
inline constexpr double kHogTruncation = 0.2;

// Channel-major cell grid: value(c, x, y) lives at data[c * cells + y * cells_w + x].
struct FeatureMap {
  int cells_w = 0;
  int cells_h = 0;
  int channels = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(int w, int h, int c) : cells_w(w), cells_h(h), channels(c), data(static_cast<std::size_t>(w) * h * c) {}

  std::size_t cells() const noexcept { return static_cast<std::size_t>(cells_w) * cells_h; }
  double& at(int c, int x, int y) noexcept { return data[c * cells() + static_cast<std::size_t>(y) * cells_w + x]; }
  double at(int c, int x, int y) const noexcept {
    return data[c * cells() + static_cast<std::size_t>(y) * cells_w + x];
  }
  std::span<const double> channel(int c) const noexcept { return {data.data() + c * cells(), cells()}; }
  std::span<double> channel(int c) noexcept { return {data.data() + c * cells(), cells()}; }

  bool same_shape(const FeatureMap& o) const noexcept {
    return cells_w == o.cells_w && cells_h == o.cells_h && channels == o.channels;
  }
  double squared_norm() const noexcept {
    double s = 0.0;
    for (double v : data) s += v * v;
    return s;
  }
};

inline std::vector<double> hann(int n) {
  std::vector<double> w(static_cast<std::size_t>(n), 1.0);
  if (n > 1) {
    for (int i = 0; i < n; ++i) w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / (n - 1)));
  }
  return w;
}

// Cell grid that a window of the given pixel size produces.
inline std::pair<int, int> hog_grid(const BBox& window, int cell_size) {
  return {static_cast<int>(std::floor(window.w / cell_size)), static_cast<int>(std::floor(window.h / cell_size))};
}

namespace detail {

struct OrientationTable {
  std::array<double, kHogOrientations> cos{};
  std::array<double, kHogOrientations> sin{};
  OrientationTable() {
    for (int o = 0; o < kHogOrientations; ++o) {
      cos[o] = std::cos(o * std::numbers::pi / kHogOrientations);
      sin[o] = std::sin(o * std::numbers::pi / kHogOrientations);
    }
  }
};

inline const OrientationTable& orientations() {
  static const OrientationTable table;
  return table;
}

// Signed orientation bin in [0, 18) for a gradient: the closest of 18 directions.
inline int signed_bin(double dx, double dy) noexcept {
  const auto& t = orientations();
  double best = 0.0;
  int bin = 0;
  for (int o = 0; o < kHogOrientations; ++o) {
    const double dot = t.cos[o] * dx + t.sin[o] * dy;
    if (dot > best) {
      best = dot;
      bin = o;
    } else if (-dot > best) {
      best = -dot;
      bin = o + kHogOrientations;
    }
  }
  return bin;
}

}  // namespace detail

// Felzenszwalb-style 31-channel HOG over `window`, sampled from `frame` with
// border replication, finished with a per-channel Hann taper.
inline FeatureMap extract_features(const Frame& frame, const BBox& window, int cell_size, bool taper = true) {
  const auto [cw, ch] = hog_grid(window, cell_size);
  if (cw < 4 || ch < 4) throw Error(ErrorKind::WindowTooSmall, "HOG cell grid smaller than 4x4");
  const int pw = cw * cell_size;
  const int ph = ch * cell_size;
  const int x0 = static_cast<int>(std::lround(window.x));
  const int y0 = static_cast<int>(std::lround(window.y));

  constexpr int kSigned = 2 * kHogOrientations;
  std::vector<double> hist(static_cast<std::size_t>(cw) * ch * kSigned, 0.0);
  auto hist_at = [&](int o, int x, int y) -> double& {
    return hist[(static_cast<std::size_t>(y) * cw + x) * kSigned + o];
  };

  for (int py = 0; py < ph; ++py) {
    const int fy = y0 + py;
    for (int px = 0; px < pw; ++px) {
      const int fx = x0 + px;
      const double dx = static_cast<double>(frame.clamped(fx + 1, fy)) - frame.clamped(fx - 1, fy);
      const double dy = static_cast<double>(frame.clamped(fx, fy + 1)) - frame.clamped(fx, fy - 1);
      const double mag = std::sqrt(dx * dx + dy * dy);
      if (mag == 0.0) continue;
      const int bin = detail::signed_bin(dx, dy);

      // Bilinear vote into the four nearest cell centers.
      const double cx = (px + 0.5) / cell_size - 0.5;
      const double cy = (py + 0.5) / cell_size - 0.5;
      const int ix = static_cast<int>(std::floor(cx));
      const int iy = static_cast<int>(std::floor(cy));
      const double ax = cx - ix;
      const double ay = cy - iy;
      for (int j = 0; j < 2; ++j) {
        const int gy = iy + j;
        if (gy < 0 || gy >= ch) continue;
        const double wy = j ? ay : 1.0 - ay;
        for (int i = 0; i < 2; ++i) {
          const int gx = ix + i;
          if (gx < 0 || gx >= cw) continue;
          const double wx = i ? ax : 1.0 - ax;
          hist_at(bin, gx, gy) += mag * wx * wy;
        }
      }
    }
  }

  std::vector<double> energy(static_cast<std::size_t>(cw) * ch, 0.0);
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      double e = 0.0;
      for (int o = 0; o < kHogOrientations; ++o) {
        const double u = hist_at(o, x, y) + hist_at(o + kHogOrientations, x, y);
        e += u * u;
      }
      energy[static_cast<std::size_t>(y) * cw + x] = e;
    }
  }
  auto energy_at = [&](int x, int y) {
    return energy[static_cast<std::size_t>(std::clamp(y, 0, ch - 1)) * cw + std::clamp(x, 0, cw - 1)];
  };

  constexpr double kEps = 1e-4;
  constexpr double kTextureScale = 0.2357;
  FeatureMap out(cw, ch, kHogChannels);
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      // The four 2x2 blocks containing this cell.
      std::array<double, 4> norm{};
      int k = 0;
      for (int by : {-1, 0}) {
        for (int bx : {-1, 0}) {
          const double s = energy_at(x + bx, y + by) + energy_at(x + bx + 1, y + by) +
                           energy_at(x + bx, y + by + 1) + energy_at(x + bx + 1, y + by + 1);
          norm[k++] = 1.0 / std::sqrt(s + kEps);
        }
      }
      std::array<double, 4> texture{};
      for (int o = 0; o < kSigned; ++o) {
        const double h = hist_at(o, x, y);
        double sum = 0.0;
        for (int n = 0; n < 4; ++n) {
          const double t = std::min(h * norm[n], kHogTruncation);
          sum += t;
          texture[n] += t;
        }
        out.at(o, x, y) = 0.5 * sum;
      }
      for (int o = 0; o < kHogOrientations; ++o) {
        const double h = hist_at(o, x, y) + hist_at(o + kHogOrientations, x, y);
        double sum = 0.0;
        for (int n = 0; n < 4; ++n) sum += std::min(h * norm[n], kHogTruncation);
        out.at(kSigned + o, x, y) = 0.5 * sum;
      }
      for (int n = 0; n < 4; ++n) out.at(kSigned + kHogOrientations + n, x, y) = kTextureScale * texture[n];
    }
  }

  if (taper) {
    const auto wx = hann(cw);
    const auto wy = hann(ch);
    for (int c = 0; c < kHogChannels; ++c) {
      for (int y = 0; y < ch; ++y) {
        for (int x = 0; x < cw; ++x) out.at(c, x, y) *= wx[x] * wy[y];
      }
    }
  }
  return out;
}

}  // namespace kerman
