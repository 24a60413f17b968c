#pragma once

// Direct-formula reference implementations, written without the library's
// helpers. Slow on purpose.

#include <array>
#include <cstddef>
#include <vector>

#include "rainforge/image.h"
#include "rainforge/keypoints.h"

namespace oracle {

using rainforge::Image;

double psnr(const Image& a, const Image& b);

// Dense 11x11 (radius r) Gaussian window at every fully-inside center.
double ssim(const Image& a, const Image& b, double sigma = 1.5, int radius = 5);

// Wang et al. multi-scale construction with 2x2 mean decimation.
double ms_ssim(const Image& a, const Image& b, const std::vector<double>& weights);

// Dense 2-D convolution with clamp-to-edge, kernel exp(-d^2/2s^2) normalized
// over the (2r+1)^2 square, r = ceil(3s).
Image blur2d(const Image& img, double sigma);

// Bilinear lookup; false outside [0,w-1]x[0,h-1].
bool bilinear(const Image& img, double x, double y, int c, double& out);

// Per-pixel inverse mapping through a row-major 3x3 matrix (output -> input).
Image warp_inverse_map(const Image& img, const std::array<double, 9>& out_to_in);

Image warp_field(const Image& img, const std::vector<rainforge::Vec2>& field);

// Anti-aliased capsule of a segment, clamped coverage accumulation.
std::vector<double> capsule(int width, int height, double ax, double ay, double bx, double by,
                            double thickness, double opacity);

// Hamilton apportionment.
std::array<std::size_t, 3> hamilton(std::size_t total, const std::array<double, 3>& ratios);

struct Match {
  int a, b;
  double ratio;
};
// Exhaustive nearest/second-nearest with the lowest-ratio claim per target.
std::vector<Match> brute_force_match(const std::vector<rainforge::Keypoint>& a,
                                     const std::vector<rainforge::Keypoint>& b, double ratio);

}  // namespace oracle
