#pragma once

#include <limits>
#include <vector>

#include "rainforge/image.h"

namespace rainforge {

// PSNR of identical images. Compare with std::isinf.
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

// 10 log10(peak^2 / MSE) over all channels; kInfinitePsnr when MSE is 0.
double psnr(const Image& a, const Image& b, double peak = 1.0);

struct SsimParams {
  double k1 = 0.01;
  double k2 = 0.03;
  double sigma = 1.5;
  int radius = 5;  // 11x11 window
  double dynamic_range = 1.0;

  void validate() const;
};

struct SsimResult {
  double mean = 0.0;
  // Valid-window map, (w - 2r) x (h - 2r), averaged over channels.
  Image map;
};

// Per-channel SSIM over windows fully inside the image, averaged over
// channels.
SsimResult ssim(const Image& a, const Image& b, const SsimParams& params = {});

struct MsSsimParams {
  // Published weights sum to 1.0001; divided by that sum.
  std::vector<double> scale_weights{0.0448 / 1.0001, 0.2856 / 1.0001, 0.3001 / 1.0001,
                                    0.2363 / 1.0001, 0.1333 / 1.0001};
  SsimParams ssim;

  void validate() const;
  // Renormalized leading weights, for configurations with fewer scales.
  static MsSsimParams with_scales(int scales);
};

// Multi-scale SSIM: contrast-structure terms at every scale, luminance at the
// coarsest, negative terms clamped to 0; per channel, then averaged.
double ms_ssim(const Image& a, const Image& b, const MsSsimParams& params = {});

// Smallest image side accepted by ms_ssim for the given parameters.
int ms_ssim_min_size(const MsSsimParams& params);

// Mean absolute difference over all channels.
double mean_absolute_error(const Image& a, const Image& b);

}  // namespace rainforge
