#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "rainforge/image.h"

namespace rainforge {

// Additive rain radiance, one value per pixel in [0,1].
class StreakLayer {
 public:
  StreakLayer() = default;
  StreakLayer(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  double at(int x, int y) const { return v_[static_cast<std::size_t>(y) * width_ + x]; }
  double& at(int x, int y) { return v_[static_cast<std::size_t>(y) * width_ + x]; }
  const std::vector<double>& values() const { return v_; }
  std::vector<double>& values() { return v_; }

  double energy() const;  // sum of intensities

  friend bool operator==(const StreakLayer&, const StreakLayer&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> v_;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct StreakParams {
  int width = 0;
  int height = 0;
  int count = 0;
  Range length{8.0, 24.0};
  Range thickness{1.0, 2.0};
  Range angle{-0.3, 0.3};  // radians from vertical
  Range opacity{0.2, 0.6};
  double blur_sigma = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct VeilParams {
  double strength = 0.0;
  std::array<double, 3> airlight{0.8, 0.8, 0.8};

  void validate() const;
};

// Antialiased capsule coverage of a segment: clamp(thickness/2 + 0.5 - d, 0, 1)
// where d is the distance from the pixel center to the segment.
void rasterize_streak(StreakLayer& layer, Vec2 a, Vec2 b, double thickness, double opacity);

// count streaks with per-streak length, thickness, angle, opacity drawn from
// the ranges, then Gaussian motion blur. Deterministic under seed.
StreakLayer render_streak_layer(const StreakParams& params);

struct CompositeResult {
  Image image;
  std::size_t saturated = 0;  // samples clamped at 1
};

// I = J + sum of layers (broadcast over channels), clamped to [0,1].
CompositeResult composite_rain(const Image& clean, const std::vector<StreakLayer>& layers);

// (1 - strength) img + strength airlight, per channel.
Image apply_veiling(const Image& img, const VeilParams& veil);

struct SynthesisRequest {
  std::vector<StreakParams> layers;
  VeilParams veil;
  std::optional<Homography> warp;
  std::optional<DisplacementField> field;
};

struct SynthesisResult {
  Image rainy;
  std::size_t saturated = 0;
  // Every parameter and seed used.
  nlohmann::json provenance;
};

// Geometric perturbation of clean (homography, then displacement), then
// veiling, then streak compositing.
SynthesisResult synthesize_pair(const Image& clean, const SynthesisRequest& request);

}  // namespace rainforge
