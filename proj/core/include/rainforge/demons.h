#pragma once

#include <vector>

#include "rainforge/image.h"

namespace rainforge {

struct DemonsParams {
  int iterations = 200;  // per pyramid level
  double field_smoothing_sigma = 2.0;
  double update_smoothing_sigma = 1.0;
  double max_step = 2.0;
  double stop_tolerance = 0.01;
  int levels = 3;  // coarse-to-fine: x4, x2, x1

  // Throws InvalidArgument unless all values are positive and
  // stop_tolerance < max_step.
  void validate() const;
};

struct DemonsIteration {
  int level = 0;  // 0 = finest
  int iteration = 0;
  double max_step = 0.0;     // largest per-pixel update applied
  double mean_update = 0.0;  // mean update magnitude
};

struct DemonsTrace {
  std::vector<DemonsIteration> iterations;
};

// Additive demons: finds field such that moving(p + field(p)) ~ fixed(p).
// Both images must be single-channel with equal dimensions.
DisplacementField register_elastic(const Image& moving, const Image& fixed,
                                   const DemonsParams& params = {},
                                   DemonsTrace* trace = nullptr);

}  // namespace rainforge
