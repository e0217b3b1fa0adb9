#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "kerman/geometry.hpp"
#include "kerman/hog.hpp"
#include "kerman/scenario.hpp"

namespace kerman::testing {

// Smooth random texture with structure at the 4 px cell scale.
inline Frame textured_frame(int w, int h, std::uint32_t seed, std::int64_t index = 0) {
  return Frame(index, w, h, detail::value_noise(w, h, 4, 128.0, 90.0, seed));
}

// out(x, y) = in((x - dx) mod w, (y - dy) mod h): contents move by (+dx, +dy).
inline Frame circular_shift(const Frame& in, int dx, int dy) {
  Frame out(in.index, in.width, in.height);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      const int sx = ((x - dx) % in.width + in.width) % in.width;
      const int sy = ((y - dy) % in.height + in.height) % in.height;
      out.at(x, y) = in.at(sx, sy);
    }
  }
  return out;
}

inline FeatureMap random_features(int cols, int rows, int channels, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FeatureMap m(cols, rows, channels);
  for (double& v : m.data) v = u(rng);
  return m;
}

// Gaussian kernel correlation summed directly over every circular shift.
inline std::vector<double> direct_gaussian_correlation(const FeatureMap& a, const FeatureMap& b, double sigma) {
  const int cols = a.cells_w;
  const int rows = a.cells_h;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    na += a.data[i] * a.data[i];
    nb += b.data[i] * b.data[i];
  }
  const double n = static_cast<double>(a.data.size());
  std::vector<double> k(static_cast<std::size_t>(cols) * rows);
  for (int ty = 0; ty < rows; ++ty) {
    for (int tx = 0; tx < cols; ++tx) {
      double corr = 0.0;
      for (int c = 0; c < a.channels; ++c) {
        for (int y = 0; y < rows; ++y) {
          for (int x = 0; x < cols; ++x) corr += a.at(c, x, y) * b.at(c, (x + tx) % cols, (y + ty) % rows);
        }
      }
      const double d = std::max(0.0, na + nb - 2.0 * corr);
      k[static_cast<std::size_t>(ty) * cols + tx] = std::exp(-d / (sigma * sigma * n));
    }
  }
  return k;
}

inline double max_relative_error(const std::vector<double>& got, const std::vector<double>& want) {
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double scale = std::max(std::abs(want[i]), 1e-300);
    worst = std::max(worst, std::abs(got[i] - want[i]) / scale);
  }
  return worst;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("kerman-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace kerman::testing
