#pragma once

#include <vector>

#include "rainforge/image.h"

namespace rainforge {

// Translation s such that b(p) ~ a(p - s).
struct PhaseCorrelation {
  Vec2 shift;        // peak plus parabolic sub-pixel refinement
  int peak_x = 0;    // integer peak, wrapped to (-N/2, N/2]
  int peak_y = 0;
  double peak_value = 0.0;  // normalized correlation at the peak
};

// Hann-windowed phase correlation of two equally sized single-channel
// images (luminance is taken for 3-channel input).
PhaseCorrelation phase_correlate(const Image& a, const Image& b);

struct BlockShift {
  Rect block;
  Vec2 shift;
  double magnitude = 0.0;
  double peak_value = 0.0;
};

struct MotionReport {
  Vec2 global_shift;
  int global_peak_x = 0;
  int global_peak_y = 0;
  double global_magnitude = 0.0;
  std::vector<BlockShift> blocks;
  double max_block_shift = 0.0;
  double mean_block_shift = 0.0;
  int block_size = 0;
};

// Luminance with thin bright structure (rain streaks up to ~4 px wide)
// opened away; the view motion is measured on.
Image motion_view(const Image& img);

// Global and per-block translation between a and b. Blocks tile the image
// from the origin; partial edge blocks are dropped, and so are blocks with
// any pixel outside `valid` when a mask is given.
MotionReport alignment_residual(const Image& a, const Image& b, int block = 32,
                                const RegionMask* valid = nullptr);

}  // namespace rainforge
