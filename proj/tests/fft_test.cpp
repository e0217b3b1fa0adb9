#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "kerman/fft.hpp"
#include "kerman/kcf.hpp"
#include "support.hpp"

namespace kerman {
namespace {

std::vector<Complex> naive_dft(const std::vector<Complex>& in) {
  const std::size_t n = in.size();
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>(k * j % n) / static_cast<double>(n);
      out[k] += in[j] * Complex(std::cos(a), std::sin(a));
    }
  }
  return out;
}

TEST(Fft, MatchesNaiveDftOnMixedRadixSizes) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int cols : {1, 2, 5, 7, 12, 15, 16, 30, 31}) {
    const int rows = 3;
    std::vector<double> real(static_cast<std::size_t>(cols) * rows);
    for (double& v : real) v = u(rng);
    const ComplexGrid g = fft2(real, cols, rows);
    // Row transforms then column transforms: compare against a separable naive DFT.
    std::vector<std::vector<Complex>> tmp(rows);
    for (int y = 0; y < rows; ++y) {
      std::vector<Complex> row(cols);
      for (int x = 0; x < cols; ++x) row[x] = real[static_cast<std::size_t>(y) * cols + x];
      tmp[y] = naive_dft(row);
    }
    for (int x = 0; x < cols; ++x) {
      std::vector<Complex> col(rows);
      for (int y = 0; y < rows; ++y) col[y] = tmp[y][x];
      const auto want = naive_dft(col);
      for (int y = 0; y < rows; ++y) EXPECT_LT(std::abs(g(x, y) - want[y]), 1e-9) << cols << "x" << rows;
    }
  }
}

TEST(Fft, RoundTripWithinTolerance) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (auto [cols, rows] : {std::pair{8, 8}, {17, 9}, {32, 24}, {45, 27}, {100, 1}}) {
    std::vector<double> real(static_cast<std::size_t>(cols) * rows);
    double norm = 0.0;
    for (double& v : real) {
      v = u(rng);
      norm = std::max(norm, std::abs(v));
    }
    const auto back = ifft2_real(fft2(real, cols, rows));
    for (std::size_t i = 0; i < real.size(); ++i) EXPECT_LE(std::abs(back[i] - real[i]), 1e-9 * norm);
  }
}

TEST(Fft, RejectsWrongBufferSize) {
  std::vector<double> v(10);
  EXPECT_THROW(fft2(v, 3, 3), Error);
}

TEST(GaussianCorrelation, SelfCorrelationIsOneAtZeroShift) {
  std::mt19937 rng(5);
  const FeatureMap a = testing::random_features(12, 10, 3, rng);
  const auto k = gaussian_correlation(a, a, 0.5);
  EXPECT_NEAR(k[0], 1.0, 1e-12);
  for (double v : k) {
    EXPECT_GT(v, 0.0);
    EXPECT_LE(v, 1.0 + 1e-12);
  }
}

TEST(GaussianCorrelation, ZeroCrossCorrelationGivesConstantGrid) {
  // a lives in channel 0 only, b in channel 1 only: every cross-correlation term is 0.
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FeatureMap a(8, 6, 2);
  FeatureMap b(8, 6, 2);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 8; ++x) a.at(0, x, y) = u(rng);
  }
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 8; ++x) b.at(1, (x + 3) % 8, (y + 1) % 6) = a.at(0, x, y);
  }
  const double sigma = 0.5;
  const double expected = std::exp(-2.0 * a.squared_norm() / (sigma * sigma * static_cast<double>(a.data.size())));
  for (double v : gaussian_correlation(a, b, sigma)) EXPECT_NEAR(v, expected, 1e-12);
}

TEST(GaussianCorrelation, MatchesDirectCircularSum) {
  std::mt19937 rng(7);
  for (auto [c, r, ch] : {std::tuple{16, 16, 2}, {8, 8, 1}, {11, 7, 5}, {20, 13, 31}}) {
    const FeatureMap a = testing::random_features(c, r, ch, rng);
    const FeatureMap b = testing::random_features(c, r, ch, rng);
    const auto got = gaussian_correlation(a, b, 0.5);
    const auto want = testing::direct_gaussian_correlation(a, b, 0.5);
    EXPECT_LT(testing::max_relative_error(got, want), 1e-6);
  }
}

TEST(GaussianCorrelation, ShiftedCopyPeaksAtShift) {
  std::mt19937 rng(8);
  const FeatureMap a = testing::random_features(10, 10, 4, rng);
  FeatureMap b(10, 10, 4);
  for (int c = 0; c < 4; ++c) {
    for (int y = 0; y < 10; ++y) {
      for (int x = 0; x < 10; ++x) b.at(c, (x + 2) % 10, (y + 7) % 10) = a.at(c, x, y);
    }
  }
  const auto k = gaussian_correlation(a, b, 0.5);
  EXPECT_NEAR(k[7 * 10 + 2], 1.0, 1e-9);
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (i != 72) {
      EXPECT_LT(k[i], 1.0 - 1e-6);
    }
  }
}

TEST(GaussianCorrelation, ShapeMismatchThrows) {
  const FeatureMap a(4, 4, 2);
  const FeatureMap b(4, 5, 2);
  try {
    gaussian_correlation(a, b, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

}  // namespace
}  // namespace kerman
