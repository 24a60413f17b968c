#include "rainforge/image.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "rainforge/error.h"

namespace rainforge {

namespace {

void check_dims(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw InvalidArgument("image dimensions must be positive, got " +
                          std::to_string(width) + "x" + std::to_string(height));
  }
}

}  // namespace

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  check_dims(width, height);
  if (channels != 1 && channels != 3) {
    throw InvalidArgument("images have 1 or 3 channels, got " + std::to_string(channels));
  }
  data_.assign(pixel_count() * static_cast<std::size_t>(channels), fill);
}

Image::Image(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_dims(width, height);
  if (channels != 1 && channels != 3) {
    throw InvalidArgument("images have 1 or 3 channels, got " + std::to_string(channels));
  }
  if (data_.size() != pixel_count() * static_cast<std::size_t>(channels)) {
    throw InvalidArgument("image data length does not match width*height*channels");
  }
}

void Image::clamp() {
  for (double& v : data_) v = std::clamp(v, 0.0, 1.0);
}

Image Image::channel(int c) const {
  if (c < 0 || c >= channels_) throw InvalidArgument("channel index out of range");
  Image out(width_, height_, 1);
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    out.values()[i] = data_[i * channels_ + c];
  }
  return out;
}

RegionMask::RegionMask(int width, int height, bool fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  included_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

std::size_t RegionMask::count() const {
  return static_cast<std::size_t>(std::count(included_.begin(), included_.end(), 1));
}

Rect RegionMask::bounding_box() const {
  int x0 = width_, y0 = height_, x1 = -1, y1 = -1;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (!at(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) return {};
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

Rect RegionMask::inscribed_rect() const {
  Rect r = bounding_box();
  if (r.empty()) return r;
  auto excluded_in_row = [&](int y) {
    int n = 0;
    for (int x = r.x; x < r.x + r.width; ++x) n += at(x, y) ? 0 : 1;
    return n;
  };
  auto excluded_in_col = [&](int x) {
    int n = 0;
    for (int y = r.y; y < r.y + r.height; ++y) n += at(x, y) ? 0 : 1;
    return n;
  };
  while (!r.empty()) {
    const int top = excluded_in_row(r.y);
    const int bottom = excluded_in_row(r.y + r.height - 1);
    const int left = excluded_in_col(r.x);
    const int right = excluded_in_col(r.x + r.width - 1);
    const int worst = std::max({top, bottom, left, right});
    if (worst == 0) break;
    // Ties resolve in a fixed order: top, bottom, left, right.
    if (top == worst) {
      ++r.y;
      --r.height;
    } else if (bottom == worst) {
      --r.height;
    } else if (left == worst) {
      ++r.x;
      --r.width;
    } else {
      --r.width;
    }
  }
  if (r.empty()) return {};
  // Interior holes are not removed by border trimming; report them as empty.
  for (int y = r.y; y < r.y + r.height; ++y)
    for (int x = r.x; x < r.x + r.width; ++x)
      if (!at(x, y)) return {};
  return r;
}

RegionMask RegionMask::intersect(const RegionMask& other) const {
  if (width_ != other.width_ || height_ != other.height_) {
    throw InvalidArgument("mask dimensions differ");
  }
  RegionMask out = *this;
  for (std::size_t i = 0; i < included_.size(); ++i) {
    out.included_[i] = (included_[i] && other.included_[i]) ? 1 : 0;
  }
  return out;
}

RegionMask RegionMask::crop(const Rect& r) const {
  if (r.empty() || r.x < 0 || r.y < 0 || r.x + r.width > width_ ||
      r.y + r.height > height_) {
    throw InvalidArgument("crop rectangle outside mask");
  }
  RegionMask out(r.width, r.height, false);
  for (int y = 0; y < r.height; ++y)
    for (int x = 0; x < r.width; ++x) out.set(x, y, at(r.x + x, r.y + y));
  return out;
}

DisplacementField::DisplacementField(int width, int height)
    : width_(width), height_(height) {
  check_dims(width, height);
  vectors_.assign(static_cast<std::size_t>(width) * height, Vec2{});
}

DisplacementField::DisplacementField(int width, int height, std::vector<Vec2> vectors)
    : width_(width), height_(height), vectors_(std::move(vectors)) {
  check_dims(width, height);
  if (vectors_.size() != static_cast<std::size_t>(width) * height) {
    throw InvalidArgument("displacement field length does not match width*height");
  }
  if (!all_finite()) throw InvalidArgument("displacement field contains non-finite values");
}

bool DisplacementField::all_finite() const {
  return std::all_of(vectors_.begin(), vectors_.end(), [](const Vec2& v) {
    return std::isfinite(v.x) && std::isfinite(v.y);
  });
}

double DisplacementField::max_magnitude() const {
  double m = 0.0;
  for (const Vec2& v : vectors_) m = std::max(m, std::hypot(v.x, v.y));
  return m;
}

double DisplacementField::mean_magnitude() const {
  if (vectors_.empty()) return 0.0;
  double s = 0.0;
  for (const Vec2& v : vectors_) s += std::hypot(v.x, v.y);
  return s / static_cast<double>(vectors_.size());
}

Homography::Homography() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}

Homography::Homography(const Matrix& m) : m_(m) {
  for (double v : m_) {
    if (!std::isfinite(v)) throw DegenerateError("homography has non-finite entries");
  }
  normalize();
  if (std::abs(determinant()) <= 1e-12) {
    throw DegenerateError("homography is singular");
  }
}

Homography Homography::translation(double tx, double ty) {
  return Homography(Matrix{1, 0, tx, 0, 1, ty, 0, 0, 1});
}

void Homography::normalize() {
  if (std::abs(m_[8]) > 1e-12) {
    const double s = m_[8];
    for (double& v : m_) v /= s;
    return;
  }
  double norm = 0.0;
  for (double v : m_) norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0) throw DegenerateError("homography is the zero matrix");
  for (double& v : m_) v /= norm;
}

double Homography::determinant() const {
  const Matrix& a = m_;
  return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
         a[2] * (a[3] * a[7] - a[4] * a[6]);
}

Homography Homography::inverse() const {
  const Matrix& a = m_;
  const double det = determinant();
  if (std::abs(det) <= 1e-12) throw DegenerateError("homography is singular");
  Matrix inv{
      (a[4] * a[8] - a[5] * a[7]), -(a[1] * a[8] - a[2] * a[7]), (a[1] * a[5] - a[2] * a[4]),
      -(a[3] * a[8] - a[5] * a[6]), (a[0] * a[8] - a[2] * a[6]), -(a[0] * a[5] - a[2] * a[3]),
      (a[3] * a[7] - a[4] * a[6]), -(a[0] * a[7] - a[1] * a[6]), (a[0] * a[4] - a[1] * a[3])};
  for (double& v : inv) v /= det;
  return Homography(inv);
}

Homography Homography::compose(const Homography& other) const {
  Matrix r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += m_[i * 3 + k] * other.m_[k * 3 + j];
      r[i * 3 + j] = s;
    }
  return Homography(r);
}

bool Homography::try_apply(Vec2 p, Vec2& out) const {
  const double w = m_[6] * p.x + m_[7] * p.y + m_[8];
  if (std::abs(w) < 1e-15) return false;
  out.x = (m_[0] * p.x + m_[1] * p.y + m_[2]) / w;
  out.y = (m_[3] * p.x + m_[4] * p.y + m_[5]) / w;
  return std::isfinite(out.x) && std::isfinite(out.y);
}

Vec2 Homography::apply(Vec2 p) const {
  Vec2 out;
  if (!try_apply(p, out)) throw DegenerateError("point maps to infinity");
  return out;
}

}  // namespace rainforge
