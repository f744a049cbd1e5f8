#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "crowdflow/raster.hpp"

namespace testing {

/// Sum of random Gaussian blobs on a mid-grey field.
inline crowdflow::GrayFrame blob_texture(int n, std::uint64_t seed, int blobs = 60) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  struct Blob {
    double x, y, s, a;
  };
  std::vector<Blob> bs;
  for (int i = 0; i < blobs; ++i) bs.push_back({u(rng) * n, u(rng) * n, 2 + u(rng) * 5, u(rng) * 0.6 - 0.3});
  crowdflow::GrayFrame f(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double v = 0.5;
      for (const Blob& b : bs) {
        const double d2 = (x - b.x) * (x - b.x) + (y - b.y) * (y - b.y);
        v += b.a * std::exp(-d2 / (2 * b.s * b.s));
      }
      f(x, y) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return f;
}

/// out(x, y) = in(x - dx, y - dy) with replicate border.
inline crowdflow::GrayFrame shifted(const crowdflow::GrayFrame& in, int dx, int dy) {
  crowdflow::GrayFrame out(in.width(), in.height());
  for (int y = 0; y < in.height(); ++y) {
    for (int x = 0; x < in.width(); ++x) out(x, y) = in.clamped(x - dx, y - dy);
  }
  return out;
}

template <class T>
double central_mean(const crowdflow::Raster<T>& r, int margin) {
  double sum = 0.0;
  int n = 0;
  for (int y = margin; y < r.height() - margin; ++y) {
    for (int x = margin; x < r.width() - margin; ++x) {
      sum += r(x, y);
      ++n;
    }
  }
  return sum / n;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("crowdflow_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
