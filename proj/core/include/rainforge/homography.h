#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rainforge/image.h"
#include "rainforge/matching.h"

namespace rainforge {

// Normalized DLT over >= 4 correspondences (source -> target). Throws
// DegenerateError for collinear or coincident configurations.
Homography solve_homography_dlt(std::span<const Correspondence> corrs);

// sqrt(|H s - t|^2 + |H^-1 t - s|^2), in pixels. Infinite when a point maps
// to infinity.
double symmetric_transfer_error(const Homography& h, const Correspondence& c);

struct RansacParams {
  double inlier_threshold = 3.0;  // symmetric transfer error, pixels
  int max_iterations = 2000;
  double confidence = 0.995;
  std::uint64_t seed = 0;
};

struct RansacResult {
  Homography homography;
  std::vector<bool> inlier_flags;
  int iterations_used = 0;
  double mean_reprojection_error = 0.0;  // forward error over inliers

  std::size_t inlier_count() const;
};

// 4-point RANSAC with adaptive iteration bound and a final DLT refit on the
// inliers. Deterministic for a fixed seed. Throws DegenerateError when no
// model reaches 4 inliers.
RansacResult estimate_homography_ransac(std::span<const Correspondence> corrs,
                                        const RansacParams& params = {});

// Largest displacement of the four image corners between two homographies.
double corner_error(const Homography& estimated, const Homography& truth, int width,
                    int height);

}  // namespace rainforge
