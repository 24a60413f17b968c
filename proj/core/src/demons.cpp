#include "rainforge/demons.h"

#include <algorithm>
#include <cmath>

#include "rainforge/error.h"
#include "rainforge/imgproc.h"

namespace rainforge {

namespace {

constexpr double kDenominatorFloor = 1e-10;
constexpr int kMinLevelSize = 16;

struct Gradient {
  std::vector<double> gx, gy;
};

Gradient image_gradient(const Image& img) {
  const int w = img.width();
  const int h = img.height();
  Gradient g{std::vector<double>(img.pixel_count()), std::vector<double>(img.pixel_count())};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
      const int yu = std::max(y - 1, 0), yd = std::min(y + 1, h - 1);
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      g.gx[i] = xr > xl ? (img.at(xr, y) - img.at(xl, y)) / (xr - xl) : 0.0;
      g.gy[i] = yd > yu ? (img.at(x, yd) - img.at(x, yu)) / (yd - yu) : 0.0;
    }
  return g;
}

void register_level(const Image& moving, const Image& fixed, const DemonsParams& p, int level,
                    DisplacementField& field, DemonsTrace* trace) {
  const Gradient grad = image_gradient(fixed);
  const std::size_t n = fixed.pixel_count();
  DisplacementField update(fixed.width(), fixed.height());
  for (int it = 0; it < p.iterations; ++it) {
    const WarpResult warped = warp_displacement(moving, field, Interpolation::kBilinear);
    for (int y = 0; y < fixed.height(); ++y)
      for (int x = 0; x < fixed.width(); ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * fixed.width() + x;
        Vec2& u = update.vectors()[i];
        u = {};
        if (!warped.valid.at(x, y)) continue;
        const double diff = fixed.values()[i] - warped.image.values()[i];
        const double denom = grad.gx[i] * grad.gx[i] + grad.gy[i] * grad.gy[i] + diff * diff;
        if (denom < kDenominatorFloor) continue;
        u.x = diff * grad.gx[i] / denom;
        u.y = diff * grad.gy[i] / denom;
      }
    update = blur_field(update, p.update_smoothing_sigma);

    double max_step = 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      Vec2& u = update.vectors()[i];
      double mag = std::hypot(u.x, u.y);
      if (mag > p.max_step) {
        const double s = p.max_step / mag;
        u.x *= s;
        u.y *= s;
        mag = std::hypot(u.x, u.y);
      }
      max_step = std::max(max_step, mag);
      sum += mag;
      field.vectors()[i].x += u.x;
      field.vectors()[i].y += u.y;
    }
    field = blur_field(field, p.field_smoothing_sigma);
    const double mean_update = sum / static_cast<double>(n);
    if (trace) trace->iterations.push_back({level, it, max_step, mean_update});
    if (mean_update < p.stop_tolerance) break;
  }
}

}  // namespace

void DemonsParams::validate() const {
  if (iterations <= 0 || !(field_smoothing_sigma > 0) || !(update_smoothing_sigma > 0) ||
      !(max_step > 0) || !(stop_tolerance > 0) || levels <= 0) {
    throw InvalidArgument("demons parameters must be positive");
  }
  if (!(stop_tolerance < max_step)) {
    throw InvalidArgument("demons stop_tolerance must be below max_step");
  }
}

DisplacementField register_elastic(const Image& moving, const Image& fixed,
                                   const DemonsParams& params, DemonsTrace* trace) {
  params.validate();
  if (moving.channels() != 1 || fixed.channels() != 1) {
    throw InvalidArgument("register_elastic expects single-channel images");
  }
  if (!moving.same_shape(fixed)) throw InvalidArgument("moving and fixed dimensions differ");

  std::vector<Image> fixed_pyr{fixed};
  std::vector<Image> moving_pyr{moving};
  for (int l = 1; l < params.levels; ++l) {
    const Image& f = fixed_pyr.back();
    if (f.width() / 2 < kMinLevelSize || f.height() / 2 < kMinLevelSize) break;
    fixed_pyr.push_back(downsample2x(f));
    moving_pyr.push_back(downsample2x(moving_pyr.back()));
  }

  DisplacementField field;
  for (int l = static_cast<int>(fixed_pyr.size()) - 1; l >= 0; --l) {
    const Image& f = fixed_pyr[l];
    if (field.vectors().empty()) {
      field = DisplacementField(f.width(), f.height());
    } else {
      field = resample_field(field, f.width(), f.height());
    }
    register_level(moving_pyr[l], f, params, l, field, trace);
  }
  return field;
}

}  // namespace rainforge
