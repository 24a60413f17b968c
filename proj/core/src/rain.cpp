#include "rainforge/rain.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rainforge/error.h"
#include "rainforge/imgproc.h"
#include "rainforge/random.h"

namespace rainforge {

namespace {

void check_range(const Range& r, double lo, double hi, const char* name) {
  if (!(r.lo <= r.hi) || r.lo < lo || r.hi > hi) {
    throw InvalidArgument(std::string("streak ") + name + " range is invalid");
  }
}

nlohmann::json range_json(const Range& r) { return {r.lo, r.hi}; }

nlohmann::json streak_json(const StreakParams& p) {
  return {{"width", p.width},
          {"height", p.height},
          {"count", p.count},
          {"length", range_json(p.length)},
          {"thickness", range_json(p.thickness)},
          {"angle", range_json(p.angle)},
          {"opacity", range_json(p.opacity)},
          {"blur_sigma", p.blur_sigma},
          {"seed", p.seed}};
}

}  // namespace

StreakLayer::StreakLayer(int width, int height) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw InvalidArgument("streak layer dimensions must be positive");
  v_.assign(static_cast<std::size_t>(width) * height, 0.0);
}

double StreakLayer::energy() const {
  double s = 0.0;
  for (double v : v_) s += v;
  return s;
}

void StreakParams::validate() const {
  if (width <= 0 || height <= 0) throw InvalidArgument("streak layer dimensions must be positive");
  if (count < 0) throw InvalidArgument("streak count must be non-negative");
  check_range(length, 0.0, 1e6, "length");
  check_range(thickness, 0.0, 1e3, "thickness");
  check_range(angle, -std::numbers::pi / 2, std::numbers::pi / 2, "angle");
  check_range(opacity, 0.0, 1.0, "opacity");
  if (!(blur_sigma >= 0)) throw InvalidArgument("streak blur sigma must be non-negative");
}

void VeilParams::validate() const {
  if (!(strength >= 0 && strength <= 1)) throw InvalidArgument("veil strength must lie in [0,1]");
  for (double a : airlight) {
    if (!(a >= 0 && a <= 1)) throw InvalidArgument("airlight must lie in [0,1]");
  }
}

void rasterize_streak(StreakLayer& layer, Vec2 a, Vec2 b, double thickness, double opacity) {
  const double half = 0.5 * thickness;
  const double reach = half + 0.5;
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - reach)));
  const int x1 = std::min(layer.width() - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + reach)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - reach)));
  const int y1 = std::min(layer.height() - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + reach)));
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      double t = len2 > 0 ? ((x - a.x) * dx + (y - a.y) * dy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double d = std::hypot(x - (a.x + t * dx), y - (a.y + t * dy));
      const double coverage = std::clamp(reach - d, 0.0, 1.0);
      if (coverage <= 0) continue;
      layer.at(x, y) = std::min(1.0, layer.at(x, y) + opacity * coverage);
    }
  }
}

StreakLayer render_streak_layer(const StreakParams& params) {
  params.validate();
  StreakLayer layer(params.width, params.height);
  Rng rng(params.seed);
  for (int i = 0; i < params.count; ++i) {
    const double cx = rng.uniform(0.0, params.width);
    const double cy = rng.uniform(0.0, params.height);
    const double len = rng.uniform(params.length.lo, params.length.hi);
    const double thick = rng.uniform(params.thickness.lo, params.thickness.hi);
    const double angle = rng.uniform(params.angle.lo, params.angle.hi);
    const double opacity = rng.uniform(params.opacity.lo, params.opacity.hi);
    const double hx = 0.5 * len * std::sin(angle);
    const double hy = 0.5 * len * std::cos(angle);
    rasterize_streak(layer, {cx - hx, cy - hy}, {cx + hx, cy + hy}, thick, opacity);
  }
  if (params.blur_sigma > 0) {
    Image plane(params.width, params.height, 1, layer.values());
    plane = gaussian_blur(plane, params.blur_sigma);
    layer.values() = plane.values();
  }
  return layer;
}

CompositeResult composite_rain(const Image& clean, const std::vector<StreakLayer>& layers) {
  for (const StreakLayer& l : layers) {
    if (l.width() != clean.width() || l.height() != clean.height()) {
      throw InvalidArgument("streak layer dimensions do not match the image");
    }
  }
  CompositeResult out{clean, 0};
  auto& v = out.image.values();
  const int ch = clean.channels();
  for (std::size_t p = 0; p < clean.pixel_count(); ++p) {
    for (int c = 0; c < ch; ++c) {
      double& s = v[p * ch + c];
      // layer by layer, so compositing in stages is exact below saturation
      for (const StreakLayer& l : layers) s += l.values()[p];
      if (s > 1.0) {
        s = 1.0;
        ++out.saturated;
      } else if (s < 0.0) {
        s = 0.0;
      }
    }
  }
  return out;
}

Image apply_veiling(const Image& img, const VeilParams& veil) {
  veil.validate();
  Image out = img;
  const int ch = img.channels();
  for (std::size_t p = 0; p < img.pixel_count(); ++p)
    for (int c = 0; c < ch; ++c) {
      double& v = out.values()[p * ch + c];
      v = (1.0 - veil.strength) * v + veil.strength * veil.airlight[c];
    }
  return out;
}

SynthesisResult synthesize_pair(const Image& clean, const SynthesisRequest& request) {
  request.veil.validate();
  Image img = clean;
  nlohmann::json prov;
  prov["width"] = clean.width();
  prov["height"] = clean.height();
  if (request.warp) {
    img = warp_homography(img, *request.warp, Interpolation::kBilinear).image;
    prov["homography"] = request.warp->matrix();
  } else {
    prov["homography"] = nullptr;
  }
  if (request.field) {
    img = warp_displacement(img, *request.field, Interpolation::kBilinear).image;
    prov["field"] = {{"max_magnitude", request.field->max_magnitude()},
                     {"mean_magnitude", request.field->mean_magnitude()}};
  } else {
    prov["field"] = nullptr;
  }
  img = apply_veiling(img, request.veil);
  prov["veil"] = {{"strength", request.veil.strength}, {"airlight", request.veil.airlight}};

  std::vector<StreakLayer> layers;
  nlohmann::json layer_json = nlohmann::json::array();
  for (const StreakParams& sp : request.layers) {
    if (sp.width != clean.width() || sp.height != clean.height()) {
      throw InvalidArgument("streak layer dimensions do not match the image");
    }
    layers.push_back(render_streak_layer(sp));
    layer_json.push_back(streak_json(sp));
  }
  prov["layers"] = layer_json;
  prov["layer_count"] = layers.size();
  CompositeResult comp = composite_rain(img, layers);
  prov["saturated"] = comp.saturated;
  return {std::move(comp.image), comp.saturated, std::move(prov)};
}

}  // namespace rainforge
