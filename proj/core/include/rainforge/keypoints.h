#pragma once

#include <array>
#include <vector>

#include "rainforge/image.h"

namespace rainforge {

inline constexpr int kDescriptorSize = 128;

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double scale = 0.0;        // Gaussian sigma in input-image pixels
  double orientation = 0.0;  // radians
  double response = 0.0;     // |DoG| at the refined extremum
  std::array<float, kDescriptorSize> descriptor{};  // unit L2 norm
};

struct KeypointParams {
  int octaves = 4;
  int scales_per_octave = 3;
  double initial_sigma = 1.6;
  // Sigma already present in the input image.
  double assumed_blur = 0.5;
  double contrast_threshold = 0.03;
  double edge_ratio = 10.0;
};

inline constexpr int kMinKeypointImageSize = 32;

// Difference-of-Gaussian keypoints with gradient-histogram descriptors.
// Input must be single-channel and at least 32x32; an empty result is valid.
std::vector<Keypoint> detect_keypoints(const Image& gray, const KeypointParams& params = {});

}  // namespace rainforge
