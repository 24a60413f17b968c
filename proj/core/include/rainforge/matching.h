#pragma once

#include <vector>

#include "rainforge/keypoints.h"

namespace rainforge {

struct Correspondence {
  Vec2 source;
  Vec2 target;
  double match_score = 0.0;  // nearest / second-nearest descriptor distance
  int source_index = -1;
  int target_index = -1;
};

// Ratio-test matching of a against b, one-to-one by keeping the lowest
// ratio per target keypoint. When b holds a single keypoint the ratio is
// taken as 0; equal nearest and second-nearest distances score 1.
std::vector<Correspondence> match_descriptors(const std::vector<Keypoint>& a,
                                              const std::vector<Keypoint>& b,
                                              double ratio = 0.75);

}  // namespace rainforge
