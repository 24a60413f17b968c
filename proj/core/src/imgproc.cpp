#include "rainforge/imgproc.h"

#include <algorithm>
#include <cmath>

#include "rainforge/error.h"

namespace rainforge {

namespace {

constexpr double kBoundsEps = 1e-9;

}  // namespace

Image to_grayscale(const Image& img) {
  if (img.channels() != 3) throw InvalidArgument("to_grayscale requires 3 channels");
  Image out(img.width(), img.height(), 1);
  const auto& in = img.values();
  auto& o = out.values();
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    o[i] = 0.299 * in[3 * i] + 0.587 * in[3 * i + 1] + 0.114 * in[3 * i + 2];
  }
  return out;
}

Image luminance(const Image& img) {
  return img.channels() == 1 ? img : to_grayscale(img);
}

bool sample(const Image& img, double x, double y, int c, Interpolation interp,
            double& value) {
  const int w = img.width();
  const int h = img.height();
  if (!(x >= -kBoundsEps && y >= -kBoundsEps && x <= w - 1 + kBoundsEps &&
        y <= h - 1 + kBoundsEps)) {
    return false;
  }
  if (interp == Interpolation::kNearest) {
    const int xi = std::clamp(static_cast<int>(std::floor(x + 0.5)), 0, w - 1);
    const int yi = std::clamp(static_cast<int>(std::floor(y + 0.5)), 0, h - 1);
    value = img.at(xi, yi, c);
    return true;
  }
  const double xf = std::clamp(x, 0.0, static_cast<double>(w - 1));
  const double yf = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(std::floor(xf));
  const int y0 = static_cast<int>(std::floor(yf));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = xf - x0;
  const double fy = yf - y0;
  value = (1 - fx) * (1 - fy) * img.at(x0, y0, c) + fx * (1 - fy) * img.at(x1, y0, c) +
          (1 - fx) * fy * img.at(x0, y1, c) + fx * fy * img.at(x1, y1, c);
  return true;
}

WarpResult warp_homography(const Image& img, const Homography& h, Interpolation interp) {
  const Homography inv = h.inverse();
  WarpResult out{Image(img.width(), img.height(), img.channels()),
                 RegionMask(img.width(), img.height(), false)};
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      Vec2 src;
      if (!inv.try_apply({static_cast<double>(x), static_cast<double>(y)}, src)) continue;
      bool ok = true;
      for (int c = 0; c < img.channels() && ok; ++c) {
        ok = sample(img, src.x, src.y, c, interp, out.image.at(x, y, c));
      }
      out.valid.set(x, y, ok);
    }
  }
  return out;
}

WarpResult warp_displacement(const Image& img, const DisplacementField& field,
                             Interpolation interp) {
  if (field.width() != img.width() || field.height() != img.height()) {
    throw InvalidArgument("displacement field dimensions do not match the image");
  }
  WarpResult out{Image(img.width(), img.height(), img.channels()),
                 RegionMask(img.width(), img.height(), false)};
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const Vec2 d = field.at(x, y);
      bool ok = true;
      for (int c = 0; c < img.channels() && ok; ++c) {
        ok = sample(img, x + d.x, y + d.y, c, interp, out.image.at(x, y, c));
      }
      out.valid.set(x, y, ok);
    }
  }
  return out;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw InvalidArgument("gaussian sigma must be finite and non-negative");
  }
  if (sigma == 0.0) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

Image gaussian_blur(const Image& img, double sigma) {
  const std::vector<double> k = gaussian_kernel(sigma);
  if (k.size() == 1) return img;
  const int radius = static_cast<int>(k.size() / 2);
  const int w = img.width();
  const int h = img.height();
  const int ch = img.channels();
  Image tmp(w, h, ch);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        double s = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          s += k[i + radius] * img.at(std::clamp(x + i, 0, w - 1), y, c);
        }
        tmp.at(x, y, c) = s;
      }
  Image out(w, h, ch);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        double s = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          s += k[i + radius] * tmp.at(x, std::clamp(y + i, 0, h - 1), c);
        }
        out.at(x, y, c) = s;
      }
  return out;
}

Image crop(const Image& img, const Rect& r) {
  if (r.empty() || r.x < 0 || r.y < 0 || r.x + r.width > img.width() ||
      r.y + r.height > img.height()) {
    throw InvalidArgument("crop rectangle outside image");
  }
  Image out(r.width, r.height, img.channels());
  for (int y = 0; y < r.height; ++y)
    for (int x = 0; x < r.width; ++x)
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = img.at(r.x + x, r.y + y, c);
  return out;
}

CropResult apply_mask_crop(const Image& img, const RegionMask& mask) {
  if (mask.width() != img.width() || mask.height() != img.height()) {
    throw InvalidArgument("mask dimensions do not match the image");
  }
  const Rect box = mask.bounding_box();
  if (box.empty()) throw InvalidArgument("mask includes no pixels");
  CropResult out{crop(img, box), mask.crop(box), box};
  for (int y = 0; y < box.height; ++y)
    for (int x = 0; x < box.width; ++x)
      if (!out.mask.at(x, y))
        for (int c = 0; c < img.channels(); ++c) out.image.at(x, y, c) = 0.0;
  return out;
}

namespace {

// Separable running extremum, horizontal then vertical.
template <typename Pick>
Image extremum_filter(const Image& img, int r, Pick pick) {
  const int w = img.width(), h = img.height(), ch = img.channels();
  Image tmp = img, out = img;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        double v = img.at(x, y, c);
        for (int k = std::max(0, x - r); k <= std::min(w - 1, x + r); ++k) v = pick(v, img.at(k, y, c));
        tmp.at(x, y, c) = v;
      }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        double v = tmp.at(x, y, c);
        for (int k = std::max(0, y - r); k <= std::min(h - 1, y + r); ++k) v = pick(v, tmp.at(x, k, c));
        out.at(x, y, c) = v;
      }
  return out;
}

}  // namespace

Image grey_opening(const Image& img, int radius) {
  if (radius < 0) throw InvalidArgument("opening radius must be non-negative");
  if (radius == 0) return img;
  const Image eroded = extremum_filter(img, radius, [](double a, double b) { return std::min(a, b); });
  return extremum_filter(eroded, radius, [](double a, double b) { return std::max(a, b); });
}

Image downsample2x(const Image& img) {
  const int w = img.width() / 2;
  const int h = img.height() / 2;
  if (w < 1 || h < 1) throw InvalidArgument("image too small to downsample");
  Image out(w, h, img.channels());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < img.channels(); ++c) {
        out.at(x, y, c) = 0.25 * (img.at(2 * x, 2 * y, c) + img.at(2 * x + 1, 2 * y, c) +
                                  img.at(2 * x, 2 * y + 1, c) + img.at(2 * x + 1, 2 * y + 1, c));
      }
  return out;
}

DisplacementField resample_field(const DisplacementField& field, int width, int height) {
  DisplacementField out(width, height);
  const double sx = static_cast<double>(field.width()) / width;
  const double sy = static_cast<double>(field.height()) / height;
  Image fx(field.width(), field.height(), 1);
  Image fy(field.width(), field.height(), 1);
  for (std::size_t i = 0; i < field.vectors().size(); ++i) {
    fx.values()[i] = field.vectors()[i].x;
    fy.values()[i] = field.vectors()[i].y;
  }
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      // Pixel-center alignment between the two grids.
      const double u = std::clamp((x + 0.5) * sx - 0.5, 0.0, field.width() - 1.0);
      const double v = std::clamp((y + 0.5) * sy - 0.5, 0.0, field.height() - 1.0);
      double dx = 0.0, dy = 0.0;
      sample(fx, u, v, 0, Interpolation::kBilinear, dx);
      sample(fy, u, v, 0, Interpolation::kBilinear, dy);
      out.at(x, y) = {dx / sx, dy / sy};
    }
  return out;
}

DisplacementField blur_field(const DisplacementField& field, double sigma) {
  if (sigma == 0.0) return field;
  Image comps(field.width(), field.height(), 1);
  DisplacementField out = field;
  for (int comp = 0; comp < 2; ++comp) {
    for (std::size_t i = 0; i < field.vectors().size(); ++i) {
      comps.values()[i] = comp == 0 ? field.vectors()[i].x : field.vectors()[i].y;
    }
    const Image blurred = gaussian_blur(comps, sigma);
    for (std::size_t i = 0; i < field.vectors().size(); ++i) {
      (comp == 0 ? out.vectors()[i].x : out.vectors()[i].y) = blurred.values()[i];
    }
  }
  return out;
}

double mean_squared_error(const Image& a, const Image& b) {
  return mean_squared_error(a, b, Rect{0, 0, a.width(), a.height()});
}

double mean_squared_error(const Image& a, const Image& b, const Rect& region) {
  if (!a.same_shape(b)) throw InvalidArgument("images differ in shape");
  if (region.empty() || region.x < 0 || region.y < 0 || region.x + region.width > a.width() ||
      region.y + region.height > a.height()) {
    throw InvalidArgument("region outside image");
  }
  double s = 0.0;
  for (int y = region.y; y < region.y + region.height; ++y)
    for (int x = region.x; x < region.x + region.width; ++x)
      for (int c = 0; c < a.channels(); ++c) {
        const double d = a.at(x, y, c) - b.at(x, y, c);
        s += d * d;
      }
  return s / (static_cast<double>(region.width) * region.height * a.channels());
}

}  // namespace rainforge
