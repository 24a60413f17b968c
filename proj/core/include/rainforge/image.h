#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rainforge {

// Axis-aligned pixel rectangle.
struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool empty() const { return width <= 0 || height <= 0; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

// Row-major interleaved image with 1 or 3 channels. Values are nominally in
// [0,1]; operations that clamp document it.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);
  Image(int width, int height, int channels, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }
  std::size_t size() const { return data_.size(); }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  double& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  double at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ &&
           channels_ == other.channels_;
  }
  bool same_size(int width, int height) const {
    return width_ == width && height_ == height;
  }

  // Clamp every value into [0,1].
  void clamp();

  // Single channel plane copied out.
  Image channel(int c) const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// Per-pixel inclusion flags. Also used as the validity mask produced by
// warps (true = sampled inside the source image).
class RegionMask {
 public:
  RegionMask() = default;
  RegionMask(int width, int height, bool fill = true);

  int width() const { return width_; }
  int height() const { return height_; }

  bool at(int x, int y) const {
    return included_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }
  void set(int x, int y, bool value) {
    included_[static_cast<std::size_t>(y) * width_ + x] = value ? 1 : 0;
  }

  std::size_t count() const;
  bool all() const { return count() == included_.size(); }
  bool none() const { return count() == 0; }

  // Tight bounding box of included pixels; empty Rect when none.
  Rect bounding_box() const;

  // Largest-effort axis-aligned rectangle containing only included pixels,
  // found by repeatedly trimming the border side with most excluded pixels.
  Rect inscribed_rect() const;

  // Pixel-wise AND.
  RegionMask intersect(const RegionMask& other) const;
  RegionMask crop(const Rect& r) const;

  const std::vector<std::uint8_t>& flags() const { return included_; }

  friend bool operator==(const RegionMask&, const RegionMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> included_;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

// Dense per-pixel displacement in pixels. Sampling convention used by the
// warps: output(p) = input(p + field(p)).
class DisplacementField {
 public:
  DisplacementField() = default;
  DisplacementField(int width, int height);
  DisplacementField(int width, int height, std::vector<Vec2> vectors);

  int width() const { return width_; }
  int height() const { return height_; }

  Vec2& at(int x, int y) { return vectors_[static_cast<std::size_t>(y) * width_ + x]; }
  const Vec2& at(int x, int y) const {
    return vectors_[static_cast<std::size_t>(y) * width_ + x];
  }

  std::vector<Vec2>& vectors() { return vectors_; }
  const std::vector<Vec2>& vectors() const { return vectors_; }

  bool all_finite() const;
  double max_magnitude() const;
  double mean_magnitude() const;

  friend bool operator==(const DisplacementField&, const DisplacementField&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Vec2> vectors_;
};

// 3x3 projective map from source pixel coordinates to target coordinates.
// Stored row-major and kept normalized (m[2][2] = 1 whenever possible).
class Homography {
 public:
  using Matrix = std::array<double, 9>;

  Homography();  // identity
  explicit Homography(const Matrix& m);

  static Homography identity() { return Homography(); }
  static Homography translation(double tx, double ty);

  double operator()(int row, int col) const { return m_[row * 3 + col]; }
  const Matrix& matrix() const { return m_; }

  double determinant() const;
  Homography inverse() const;
  // this * other (apply other first).
  Homography compose(const Homography& other) const;

  // Maps (x, y); throws DegenerateError when the point maps to infinity.
  Vec2 apply(Vec2 p) const;
  // Same, reporting failure through the return flag instead of throwing.
  bool try_apply(Vec2 p, Vec2& out) const;

  friend bool operator==(const Homography&, const Homography&) = default;

 private:
  void normalize();
  Matrix m_;
};

}  // namespace rainforge
