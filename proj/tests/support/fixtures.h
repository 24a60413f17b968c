#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rainforge/homography.h"
#include "rainforge/image.h"
#include "rainforge/rain.h"

namespace rftest {

using rainforge::DisplacementField;
using rainforge::Homography;
using rainforge::Image;

// Multi-scale noise plus random rectangles, values in [0.05, 0.95].
Image textured_image(int width, int height, int channels, std::uint64_t seed);

// Uniform noise in [0,1].
Image random_image(int width, int height, int channels, std::uint64_t seed);

// Sum of Gaussian bumps: field(p) = sum_k amp_k * exp(-|p-c_k|^2 / (2 s^2)).
struct Bump {
  double cx, cy, sigma, ax, ay;
};
DisplacementField bump_field(int width, int height, const std::vector<Bump>& bumps);

// Small random projective perturbation of a w x h frame: corners move by up
// to `corner_px` pixels.
Homography random_homography(int width, int height, double corner_px, std::uint64_t seed);

// n correspondences under h, the first round(n*outlier_frac) replaced by
// uniform outliers over [0,256)^2, Gaussian noise on inliers, then shuffled.
struct Synthetic {
  std::vector<rainforge::Correspondence> corrs;
  std::vector<bool> truth;  // inlier flags
};
Synthetic make_correspondences(const Homography& h, int n, double outlier_frac, double noise,
                               std::uint64_t seed);

// Directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "rf");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Streak layer parameters covering a frame.
rainforge::StreakParams streaks(int width, int height, int count, std::uint64_t seed);

}  // namespace rftest
