#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <unordered_map>
#include <vector>

#include "kerman/error.hpp"

namespace kerman {

using Complex = std::complex<double>;

// Mixed-radix Cooley-Tukey plan for a fixed length. Any length is accepted:
// the length is factored into primes and each stage runs a direct DFT of that
// radix, so cost is O(n * sum(factors)).
class FftPlan {
 public:
  explicit FftPlan(std::size_t n) : n_(n), twiddle_(n) {
    for (std::size_t k = 0; k < n; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      twiddle_[k] = {std::cos(angle), std::sin(angle)};
    }
    std::size_t rest = n;
    for (std::size_t p = 2; p * p <= rest; ++p) {
      while (rest % p == 0) {
        factors_.push_back(p);
        rest /= p;
      }
    }
    if (rest > 1 || factors_.empty()) factors_.push_back(rest);
  }

  std::size_t size() const noexcept { return n_; }

  // Unnormalized in both directions; the caller scales the inverse by 1/n.
  void transform(std::span<const Complex> in, std::span<Complex> out, std::size_t in_stride,
                 bool inverse) const {
    std::vector<Complex> scratch(max_factor());
    run(in.data(), in_stride, out.data(), n_, 0, inverse, scratch);
  }

 private:
  std::size_t max_factor() const noexcept {
    std::size_t m = 1;
    for (auto f : factors_) m = std::max(m, f);
    return m;
  }

  Complex w(std::size_t k, bool inverse) const noexcept {
    const Complex t = twiddle_[k % n_];
    return inverse ? std::conj(t) : t;
  }

  void run(const Complex* in, std::size_t stride, Complex* out, std::size_t n, std::size_t stage, bool inverse,
           std::vector<Complex>& scratch) const {
    if (n == 1) {
      out[0] = in[0];
      return;
    }
    const std::size_t p = factors_[stage];
    const std::size_t m = n / p;
    for (std::size_t q = 0; q < p; ++q) {
      run(in + q * stride, stride * p, out + q * m, m, stage + 1, inverse, scratch);
    }
    const std::size_t step = n_ / n;      // W_n^e == W_N^(e * step)
    const std::size_t pstep = n_ / p;     // W_p^e == W_N^(e * pstep)
    std::vector<Complex> t(p);
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t q = 0; q < p; ++q) t[q] = out[q * m + k] * w(q * k * step, inverse);
      for (std::size_t s = 0; s < p; ++s) {
        Complex acc = t[0];
        for (std::size_t q = 1; q < p; ++q) acc += t[q] * w(((q * s) % p) * pstep, inverse);
        scratch[s] = acc;
      }
      for (std::size_t s = 0; s < p; ++s) out[k + m * s] = scratch[s];
    }
  }

  std::size_t n_;
  std::vector<Complex> twiddle_;
  std::vector<std::size_t> factors_;
};

// Per-thread cache; plans are immutable once built.
inline const FftPlan& fft_plan(std::size_t n) {
  thread_local std::unordered_map<std::size_t, std::unique_ptr<FftPlan>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<FftPlan>(n);
  return *slot;
}

// Dense complex grid, row-major (rows x cols).
struct ComplexGrid {
  int cols = 0;
  int rows = 0;
  std::vector<Complex> data;

  ComplexGrid() = default;
  ComplexGrid(int c, int r) : cols(c), rows(r), data(static_cast<std::size_t>(c) * r) {}

  Complex& operator()(int x, int y) noexcept { return data[static_cast<std::size_t>(y) * cols + x]; }
  const Complex& operator()(int x, int y) const noexcept { return data[static_cast<std::size_t>(y) * cols + x]; }
  std::size_t size() const noexcept { return data.size(); }
};

namespace detail {

inline void fft2d_inplace(ComplexGrid& g, bool inverse) {
  const auto& row_plan = fft_plan(static_cast<std::size_t>(g.cols));
  const auto& col_plan = fft_plan(static_cast<std::size_t>(g.rows));
  std::vector<Complex> buf(static_cast<std::size_t>(std::max(g.cols, g.rows)));
  for (int y = 0; y < g.rows; ++y) {
    std::span<Complex> row(&g(0, y), static_cast<std::size_t>(g.cols));
    row_plan.transform(row, std::span(buf.data(), row.size()), 1, inverse);
    std::copy_n(buf.begin(), row.size(), row.begin());
  }
  for (int x = 0; x < g.cols; ++x) {
    col_plan.transform(std::span<const Complex>(&g(x, 0), g.size() - x), std::span(buf.data(), g.rows),
                       static_cast<std::size_t>(g.cols), inverse);
    for (int y = 0; y < g.rows; ++y) g(x, y) = buf[y];
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(g.size());
    for (auto& v : g.data) v *= scale;
  }
}

}  // namespace detail

inline ComplexGrid fft2(std::span<const double> real, int cols, int rows) {
  if (real.size() != static_cast<std::size_t>(cols) * rows) {
    throw Error(ErrorKind::DimensionMismatch, "fft2 input size");
  }
  ComplexGrid g(cols, rows);
  for (std::size_t i = 0; i < real.size(); ++i) g.data[i] = real[i];
  detail::fft2d_inplace(g, false);
  return g;
}

inline ComplexGrid fft2(ComplexGrid g) {
  detail::fft2d_inplace(g, false);
  return g;
}

inline ComplexGrid ifft2(ComplexGrid g) {
  detail::fft2d_inplace(g, true);
  return g;
}

// Real part of the inverse transform.
inline std::vector<double> ifft2_real(ComplexGrid g) {
  detail::fft2d_inplace(g, true);
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = g.data[i].real();
  return out;
}

}  // namespace kerman
