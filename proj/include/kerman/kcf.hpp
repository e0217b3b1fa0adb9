#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "kerman/error.hpp"
#include "kerman/fft.hpp"
#include "kerman/geometry.hpp"
#include "kerman/hog.hpp"

namespace kerman {

struct KcfConfig {
  int cell_size = 4;
  double sigma = 0.5;          // Gaussian kernel bandwidth, normalized feature units
  double lambda = 1e-4;        // ridge regularizer
  double learning_rate = 0.02;
  double padding = 1.5;        // training window = padding x target
  double label_sigma_factor = 0.1;
};

struct KcfModel {
  ComplexGrid alphaf;
  FeatureMap templ;
  double window_w = 0.0;  // pixels, padding included
  double window_h = 0.0;
  double target_w = 0.0;
  double target_h = 0.0;
  double label_sigma = 0.0;  // in cells
  bool trained = false;
};

struct ResponseMap {
  int cols = 0;
  int rows = 0;
  std::vector<double> values;
  int peak_x = 0;
  int peak_y = 0;
  double peak_value = 0.0;
  double psr = 0.0;
  int shift_x = 0;  // peak displacement from zero-motion, in cells
  int shift_y = 0;

  double at(int x, int y) const noexcept { return values[static_cast<std::size_t>(y) * cols + x]; }
};

// k(t) = exp(-max(0, |a|^2 + |b|^2 - 2 * sum_c corr(a_c, b_c)(t)) / (sigma^2 * N)),
// where corr(a, b)(t) = sum_p a(p) * b(p + t) with circular indexing.
inline std::vector<double> gaussian_correlation(const FeatureMap& a, const FeatureMap& b, double sigma) {
  if (!a.same_shape(b)) throw Error(ErrorKind::DimensionMismatch, "gaussian_correlation operands differ in shape");
  const int cols = a.cells_w;
  const int rows = a.cells_h;
  ComplexGrid acc(cols, rows);
  for (int c = 0; c < a.channels; ++c) {
    const ComplexGrid fa = fft2(a.channel(c), cols, rows);
    const ComplexGrid fb = fft2(b.channel(c), cols, rows);
    for (std::size_t i = 0; i < acc.size(); ++i) acc.data[i] += std::conj(fa.data[i]) * fb.data[i];
  }
  const std::vector<double> cross = ifft2_real(std::move(acc));
  const double norms = a.squared_norm() + b.squared_norm();
  const double denom = sigma * sigma * static_cast<double>(a.data.size());
  std::vector<double> k(cross.size());
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = std::exp(-std::max(0.0, norms - 2.0 * cross[i]) / denom);
  return k;
}

// Scales a box about its center.
inline BBox scaled_about_center(const BBox& b, double w, double h) noexcept {
  const Point2 c = center(b);
  return {c.x - w / 2.0, c.y - h / 2.0, w, h};
}

// Gaussian regression target peaked (value 1) at cell (cols/2, rows/2).
inline std::vector<double> gaussian_label(int cols, int rows, double sigma) {
  std::vector<double> y(static_cast<std::size_t>(cols) * rows);
  const int cx = cols / 2;
  const int cy = rows / 2;
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i < cols; ++i) {
      const double d2 = static_cast<double>((i - cx) * (i - cx) + (j - cy) * (j - cy));
      y[static_cast<std::size_t>(j) * cols + i] = std::exp(-0.5 * d2 / (sigma * sigma));
    }
  }
  return y;
}

inline KcfModel train(const Frame& frame, const BBox& target, const KcfConfig& cfg) {
  KcfModel m;
  m.target_w = target.w;
  m.target_h = target.h;
  m.window_w = target.w * cfg.padding;
  m.window_h = target.h * cfg.padding;
  m.templ = extract_features(frame, scaled_about_center(target, m.window_w, m.window_h), cfg.cell_size);
  m.label_sigma = std::sqrt(target.w * target.h) * cfg.label_sigma_factor / cfg.cell_size;

  const int cols = m.templ.cells_w;
  const int rows = m.templ.cells_h;
  const ComplexGrid ky = fft2(gaussian_label(cols, rows, m.label_sigma), cols, rows);
  const ComplexGrid kk = fft2(gaussian_correlation(m.templ, m.templ, cfg.sigma), cols, rows);
  m.alphaf = ComplexGrid(cols, rows);
  for (std::size_t i = 0; i < kk.size(); ++i) m.alphaf.data[i] = ky.data[i] / (kk.data[i] + cfg.lambda);
  m.trained = true;
  return m;
}

namespace detail {

inline void fill_peak_stats(ResponseMap& r) {
  auto best = std::max_element(r.values.begin(), r.values.end());
  const auto idx = static_cast<int>(best - r.values.begin());
  r.peak_x = idx % r.cols;
  r.peak_y = idx / r.cols;
  r.peak_value = *best;

  // Peak-to-sidelobe ratio outside an 11x11 (circular) exclusion zone.
  constexpr int kHalf = 5;
  double sum = 0.0;
  double sq = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < r.rows; ++y) {
    int dy = std::abs(y - r.peak_y);
    dy = std::min(dy, r.rows - dy);
    for (int x = 0; x < r.cols; ++x) {
      int dx = std::abs(x - r.peak_x);
      dx = std::min(dx, r.cols - dx);
      if (dx <= kHalf && dy <= kHalf) continue;
      const double v = r.at(x, y);
      sum += v;
      sq += v * v;
      ++n;
    }
  }
  r.psr = 0.0;
  if (n > 1) {
    const double mean = sum / static_cast<double>(n);
    const double var = sq / static_cast<double>(n) - mean * mean;
    if (var > 0.0) r.psr = (r.peak_value - mean) / std::sqrt(var);
  }

  auto wrap = [](int d, int n) {
    if (d > n / 2) d -= n;
    if (d < -(n / 2)) d += n;
    return d;
  };
  r.shift_x = wrap(r.peak_x - r.cols / 2, r.cols);
  r.shift_y = wrap(r.peak_y - r.rows / 2, r.rows);
}

}  // namespace detail

struct Detected {
  BBox box;
  ResponseMap response;
};

// Evaluates the model over a window centered on `prev_box`. `search_scale`
// (between 1 and the training padding) limits the image content considered to
// search_scale x target; cells outside that region are zeroed so the feature
// grid stays aligned with the model.
inline Detected detect(const KcfModel& model, const Frame& frame, const BBox& prev_box, double search_scale,
                       const KcfConfig& cfg) {
  if (!model.trained) throw Error(ErrorKind::NotTrained, "detect called on an untrained model");
  const BBox window = scaled_about_center(prev_box, model.window_w, model.window_h);
  FeatureMap z = extract_features(frame, window, cfg.cell_size);
  if (!z.same_shape(model.templ)) throw Error(ErrorKind::DimensionMismatch, "search window grid differs from model");

  const double reach_x = search_scale * model.target_w / 2.0;
  const double reach_y = search_scale * model.target_h / 2.0;
  if (reach_x < model.window_w / 2.0 || reach_y < model.window_h / 2.0) {
    const double half_w = z.cells_w * cfg.cell_size / 2.0;
    const double half_h = z.cells_h * cfg.cell_size / 2.0;
    for (int y = 0; y < z.cells_h; ++y) {
      const bool in_y = std::abs((y + 0.5) * cfg.cell_size - half_h) <= reach_y;
      for (int x = 0; x < z.cells_w; ++x) {
        const bool in_x = std::abs((x + 0.5) * cfg.cell_size - half_w) <= reach_x;
        if (in_x && in_y) continue;
        for (int c = 0; c < z.channels; ++c) z.at(c, x, y) = 0.0;
      }
    }
  }

  const int cols = z.cells_w;
  const int rows = z.cells_h;
  ComplexGrid kf = fft2(gaussian_correlation(model.templ, z, cfg.sigma), cols, rows);
  for (std::size_t i = 0; i < kf.size(); ++i) kf.data[i] *= model.alphaf.data[i];

  Detected out;
  out.response.cols = cols;
  out.response.rows = rows;
  out.response.values = ifft2_real(std::move(kf));
  detail::fill_peak_stats(out.response);

  const Vec2 motion{static_cast<double>(out.response.shift_x * cfg.cell_size),
                    static_cast<double>(out.response.shift_y * cfg.cell_size)};
  out.box = clamp_position(translate(prev_box, motion), frame.width, frame.height);
  return out;
}

// Elementwise (1 - lr) * old + lr * fresh.
inline KcfModel update_model(const KcfModel& old, const KcfModel& fresh, double lr) {
  if (!old.templ.same_shape(fresh.templ) || old.alphaf.cols != fresh.alphaf.cols ||
      old.alphaf.rows != fresh.alphaf.rows) {
    throw Error(ErrorKind::DimensionMismatch, "model update with mismatched grids");
  }
  KcfModel out = old;
  for (std::size_t i = 0; i < out.alphaf.size(); ++i) {
    out.alphaf.data[i] = (1.0 - lr) * old.alphaf.data[i] + lr * fresh.alphaf.data[i];
  }
  for (std::size_t i = 0; i < out.templ.data.size(); ++i) {
    out.templ.data[i] = (1.0 - lr) * old.templ.data[i] + lr * fresh.templ.data[i];
  }
  out.trained = old.trained || fresh.trained;
  return out;
}

}  // namespace kerman
