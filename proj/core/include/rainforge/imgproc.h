#pragma once

#include <vector>

#include "rainforge/image.h"

namespace rainforge {

enum class Interpolation { kNearest, kBilinear };

// Image plus the per-pixel validity mask of a warp: false where the sample
// position fell outside the source image (the pixel is then 0).
struct WarpResult {
  Image image;
  RegionMask valid;
};

struct CropResult {
  Image image;
  RegionMask mask;
  Rect region;
};

// Luminance y = 0.299 r + 0.587 g + 0.114 b. Requires 3 channels.
Image to_grayscale(const Image& img);
// Returns img unchanged when it is already single-channel.
Image luminance(const Image& img);

// Output pixel p is sampled at h^-1 p.
WarpResult warp_homography(const Image& img, const Homography& h,
                           Interpolation interp = Interpolation::kBilinear);

// Output pixel p is sampled at p + field(p).
WarpResult warp_displacement(const Image& img, const DisplacementField& field,
                             Interpolation interp = Interpolation::kBilinear);

// Separable Gaussian, radius ceil(3 sigma), clamp-to-edge. sigma = 0 is the
// identity.
Image gaussian_blur(const Image& img, double sigma);
std::vector<double> gaussian_kernel(double sigma);

// Tight bounding-box crop of the included region; excluded pixels inside the
// box are zeroed.
CropResult apply_mask_crop(const Image& img, const RegionMask& mask);

Image crop(const Image& img, const Rect& r);

// Samples channel c at a real-valued position. Returns false (and leaves
// value untouched) outside [0, w-1] x [0, h-1].
bool sample(const Image& img, double x, double y, int c, Interpolation interp,
            double& value);

// Averages 2x2 blocks; odd trailing rows/columns are dropped.
Image downsample2x(const Image& img);

// Grey-level opening (min then max) over a (2r+1)^2 square, per channel,
// windows clipped at the border. Removes bright detail thinner than the
// window.
Image grey_opening(const Image& img, int radius);

// Resizes a field to new dimensions with bilinear interpolation, scaling the
// vectors by the size ratio.
DisplacementField resample_field(const DisplacementField& field, int width, int height);

// Smooths both components of a field with gaussian_blur semantics.
DisplacementField blur_field(const DisplacementField& field, double sigma);

double mean_squared_error(const Image& a, const Image& b);
double mean_squared_error(const Image& a, const Image& b, const Rect& region);

}  // namespace rainforge
