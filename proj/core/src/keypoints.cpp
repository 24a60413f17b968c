#include "rainforge/keypoints.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rainforge/error.h"
#include "rainforge/imgproc.h"

namespace rainforge {

namespace {

constexpr int kBorder = 5;
constexpr int kMaxInterpSteps = 5;
constexpr int kOrientationBins = 36;
constexpr double kOrientationSigmaFactor = 1.5;
constexpr double kOrientationRadiusFactor = 3.0 * kOrientationSigmaFactor;
constexpr double kOrientationPeakRatio = 0.8;
constexpr int kDescWidth = 4;
constexpr int kDescBins = 8;
constexpr double kDescScaleFactor = 3.0;
constexpr double kDescMagThreshold = 0.2;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Plain 2D plane with cheap row access; pyramid levels are stored this way.
struct Plane {
  int w = 0;
  int h = 0;
  std::vector<double> v;

  double operator()(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

Plane to_plane(const Image& img) { return {img.width(), img.height(), img.values()}; }

Image to_image(const Plane& p) { return Image(p.w, p.h, 1, p.v); }

Plane decimate(const Plane& p) {
  Plane out{p.w / 2, p.h / 2, {}};
  out.v.resize(static_cast<std::size_t>(out.w) * out.h);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) out.v[static_cast<std::size_t>(y) * out.w + x] = p(2 * x, 2 * y);
  return out;
}

Plane subtract(const Plane& a, const Plane& b) {
  Plane out{a.w, a.h, std::vector<double>(a.v.size())};
  for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] - b.v[i];
  return out;
}

struct Pyramid {
  std::vector<std::vector<Plane>> gauss;  // [octave][s + 3]
  std::vector<std::vector<Plane>> dog;    // [octave][s + 2]
};

Pyramid build_pyramid(const Image& gray, const KeypointParams& p, int octaves) {
  const int s = p.scales_per_octave;
  std::vector<double> sig(s + 3);
  sig[0] = p.initial_sigma;
  const double k = std::pow(2.0, 1.0 / s);
  for (int i = 1; i < s + 3; ++i) {
    const double prev = std::pow(k, i - 1) * p.initial_sigma;
    const double total = prev * k;
    sig[i] = std::sqrt(total * total - prev * prev);
  }
  Pyramid pyr;
  pyr.gauss.resize(octaves);
  pyr.dog.resize(octaves);
  const double base_sigma =
      std::sqrt(std::max(p.initial_sigma * p.initial_sigma - p.assumed_blur * p.assumed_blur, 0.01));
  for (int o = 0; o < octaves; ++o) {
    auto& g = pyr.gauss[o];
    g.resize(s + 3);
    if (o == 0) {
      g[0] = to_plane(gaussian_blur(gray, base_sigma));
    } else {
      g[0] = decimate(pyr.gauss[o - 1][s]);
    }
    for (int i = 1; i < s + 3; ++i) g[i] = to_plane(gaussian_blur(to_image(g[i - 1]), sig[i]));
    auto& d = pyr.dog[o];
    d.resize(s + 2);
    for (int i = 0; i < s + 2; ++i) d[i] = subtract(g[i + 1], g[i]);
  }
  return pyr;
}

bool is_extremum(const std::vector<Plane>& dog, int layer, int x, int y, double threshold) {
  const double val = dog[layer](x, y);
  if (std::abs(val) <= threshold) return false;
  const bool is_max = val > 0;
  for (int l = layer - 1; l <= layer + 1; ++l)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (l == layer && dx == 0 && dy == 0) continue;
        const double n = dog[l](x + dx, y + dy);
        if (is_max ? n > val : n < val) return false;
      }
  return true;
}

struct Refined {
  int x, y, layer;
  double ox, oy, ol;
  double response;
};

// Quadratic refinement of a discrete extremum; false when the candidate is
// rejected (drifts out, low contrast, or edge-like).
bool refine(const std::vector<Plane>& dog, const KeypointParams& p, int x, int y, int layer,
            Refined& out) {
  const int s = p.scales_per_octave;
  const Plane& ref = dog[0];
  double ox = 0, oy = 0, ol = 0;
  double dD[3] = {0, 0, 0};
  int step = 0;
  for (; step < kMaxInterpSteps; ++step) {
    const Plane& prev = dog[layer - 1];
    const Plane& cur = dog[layer];
    const Plane& next = dog[layer + 1];
    dD[0] = 0.5 * (cur(x + 1, y) - cur(x - 1, y));
    dD[1] = 0.5 * (cur(x, y + 1) - cur(x, y - 1));
    dD[2] = 0.5 * (next(x, y) - prev(x, y));
    const double v2 = 2.0 * cur(x, y);
    const double dxx = cur(x + 1, y) + cur(x - 1, y) - v2;
    const double dyy = cur(x, y + 1) + cur(x, y - 1) - v2;
    const double dss = next(x, y) + prev(x, y) - v2;
    const double dxy =
        0.25 * (cur(x + 1, y + 1) - cur(x - 1, y + 1) - cur(x + 1, y - 1) + cur(x - 1, y - 1));
    const double dxs = 0.25 * (next(x + 1, y) - next(x - 1, y) - prev(x + 1, y) + prev(x - 1, y));
    const double dys = 0.25 * (next(x, y + 1) - next(x, y - 1) - prev(x, y + 1) + prev(x, y - 1));
    // Solve H * X = -dD by Cramer's rule.
    const double a = dxx, b = dxy, c = dxs, d = dyy, e = dys, f = dss;
    const double det = a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c);
    if (std::abs(det) < 1e-18) return false;
    const double r0 = -dD[0], r1 = -dD[1], r2 = -dD[2];
    ox = (r0 * (d * f - e * e) - b * (r1 * f - e * r2) + c * (r1 * e - d * r2)) / det;
    oy = (a * (r1 * f - e * r2) - r0 * (b * f - e * c) + c * (b * r2 - r1 * c)) / det;
    ol = (a * (d * r2 - r1 * e) - b * (b * r2 - r1 * c) + r0 * (b * e - d * c)) / det;
    if (std::abs(ox) < 0.5 && std::abs(oy) < 0.5 && std::abs(ol) < 0.5) break;
    if (std::abs(ox) > 1e6 || std::abs(oy) > 1e6 || std::abs(ol) > 1e6) return false;
    x += static_cast<int>(std::lround(ox));
    y += static_cast<int>(std::lround(oy));
    layer += static_cast<int>(std::lround(ol));
    if (layer < 1 || layer > s || x < kBorder || x >= ref.w - kBorder || y < kBorder ||
        y >= ref.h - kBorder) {
      return false;
    }
  }
  if (step >= kMaxInterpSteps) return false;

  const Plane& cur = dog[layer];
  const double contrast = cur(x, y) + 0.5 * (dD[0] * ox + dD[1] * oy + dD[2] * ol);
  if (std::abs(contrast) * s < p.contrast_threshold) return false;

  const double v2 = 2.0 * cur(x, y);
  const double dxx = cur(x + 1, y) + cur(x - 1, y) - v2;
  const double dyy = cur(x, y + 1) + cur(x, y - 1) - v2;
  const double dxy =
      0.25 * (cur(x + 1, y + 1) - cur(x - 1, y + 1) - cur(x + 1, y - 1) + cur(x - 1, y - 1));
  const double tr = dxx + dyy;
  const double det = dxx * dyy - dxy * dxy;
  const double r = p.edge_ratio;
  if (det <= 0 || tr * tr * r >= (r + 1) * (r + 1) * det) return false;

  out = {x, y, layer, ox, oy, ol, std::abs(contrast)};
  return true;
}

// Gradient-orientation histogram peaks (radians).
std::vector<double> dominant_orientations(const Plane& img, int x, int y, double sigma) {
  const int radius = static_cast<int>(std::lround(kOrientationRadiusFactor * sigma));
  const double weight_scale = -1.0 / (2.0 * std::pow(kOrientationSigmaFactor * sigma, 2));
  std::array<double, kOrientationBins> hist{};
  for (int j = -radius; j <= radius; ++j) {
    const int yy = y + j;
    if (yy <= 0 || yy >= img.h - 1) continue;
    for (int i = -radius; i <= radius; ++i) {
      const int xx = x + i;
      if (xx <= 0 || xx >= img.w - 1) continue;
      const double gx = img(xx + 1, yy) - img(xx - 1, yy);
      const double gy = img(xx, yy + 1) - img(xx, yy - 1);
      const double w = std::exp((i * i + j * j) * weight_scale);
      double angle = std::atan2(gy, gx);
      if (angle < 0) angle += kTwoPi;
      int bin = static_cast<int>(std::lround(angle * kOrientationBins / kTwoPi));
      bin = (bin % kOrientationBins + kOrientationBins) % kOrientationBins;
      hist[bin] += w * std::hypot(gx, gy);
    }
  }
  std::array<double, kOrientationBins> smooth{};
  constexpr int n = kOrientationBins;
  for (int i = 0; i < n; ++i) {
    smooth[i] = (hist[(i + n - 2) % n] + hist[(i + 2) % n]) * (1.0 / 16) +
                (hist[(i + n - 1) % n] + hist[(i + 1) % n]) * (4.0 / 16) + hist[i] * (6.0 / 16);
  }
  const double max_val = *std::max_element(smooth.begin(), smooth.end());
  std::vector<double> out;
  if (max_val <= 0) return out;
  for (int i = 0; i < n; ++i) {
    const double l = smooth[(i + n - 1) % n];
    const double r = smooth[(i + 1) % n];
    const double c = smooth[i];
    if (c > l && c > r && c >= kOrientationPeakRatio * max_val) {
      double bin = i + 0.5 * (l - r) / (l - 2 * c + r);
      if (bin < 0) bin += n;
      if (bin >= n) bin -= n;
      out.push_back(bin * kTwoPi / n);
    }
  }
  return out;
}

bool compute_descriptor(const Plane& img, double px, double py, double ori, double sigma,
                        std::array<float, kDescriptorSize>& desc) {
  constexpr int d = kDescWidth;
  constexpr int n = kDescBins;
  const double hist_width = kDescScaleFactor * sigma;
  int radius = static_cast<int>(std::lround(hist_width * std::numbers::sqrt2 * (d + 1) * 0.5));
  radius = std::min(radius, static_cast<int>(std::sqrt(double(img.w) * img.w + double(img.h) * img.h)));
  const double cos_t = std::cos(ori) / hist_width;
  const double sin_t = std::sin(ori) / hist_width;
  const double exp_scale = -1.0 / (d * d * 0.5);
  const int cx = static_cast<int>(std::lround(px));
  const int cy = static_cast<int>(std::lround(py));

  std::vector<double> hist((d + 2) * (d + 2) * (n + 2), 0.0);
  auto at = [&](int r, int c, int o) -> double& { return hist[((r * (d + 2)) + c) * (n + 2) + o]; };

  for (int i = -radius; i <= radius; ++i) {
    for (int j = -radius; j <= radius; ++j) {
      // Offset (j, i) expressed in the keypoint frame.
      const double c_rot = j * cos_t + i * sin_t;
      const double r_rot = -j * sin_t + i * cos_t;
      const double rbin = r_rot + d / 2.0 - 0.5;
      const double cbin = c_rot + d / 2.0 - 0.5;
      const int xx = cx + j;
      const int yy = cy + i;
      if (!(rbin > -1 && rbin < d && cbin > -1 && cbin < d)) continue;
      if (xx <= 0 || xx >= img.w - 1 || yy <= 0 || yy >= img.h - 1) continue;
      const double gx = img(xx + 1, yy) - img(xx - 1, yy);
      const double gy = img(xx, yy + 1) - img(xx, yy - 1);
      const double mag = std::hypot(gx, gy) * std::exp((c_rot * c_rot + r_rot * r_rot) * exp_scale);
      double obin = (std::atan2(gy, gx) - ori) * n / kTwoPi;
      obin = std::fmod(obin, static_cast<double>(n));
      if (obin < 0) obin += n;

      const int r0 = static_cast<int>(std::floor(rbin));
      const int c0 = static_cast<int>(std::floor(cbin));
      int o0 = static_cast<int>(std::floor(obin));
      const double fr = rbin - r0;
      const double fc = cbin - c0;
      const double fo = obin - o0;
      for (int dr = 0; dr <= 1; ++dr) {
        const double wr = dr ? fr : 1 - fr;
        for (int dc = 0; dc <= 1; ++dc) {
          const double wc = dc ? fc : 1 - fc;
          for (int dob = 0; dob <= 1; ++dob) {
            const double wo = dob ? fo : 1 - fo;
            at(r0 + 1 + dr, c0 + 1 + dc, (o0 + dob) % n) += mag * wr * wc * wo;
          }
        }
      }
    }
  }

  std::array<double, kDescriptorSize> raw{};
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c)
      for (int o = 0; o < n; ++o) raw[(r * d + c) * n + o] = at(r + 1, c + 1, o);

  double norm = 0.0;
  for (double v : raw) norm += v * v;
  norm = std::sqrt(norm);
  if (norm <= 1e-12) return false;
  const double clamp_at = kDescMagThreshold * norm;
  double norm2 = 0.0;
  for (double& v : raw) {
    v = std::min(v, clamp_at);
    norm2 += v * v;
  }
  norm2 = std::sqrt(norm2);
  // Normalize in double and again in float so the stored vector is unit-norm
  // to float precision.
  double fnorm = 0.0;
  for (int i = 0; i < kDescriptorSize; ++i) {
    desc[i] = static_cast<float>(raw[i] / norm2);
    fnorm += static_cast<double>(desc[i]) * desc[i];
  }
  fnorm = std::sqrt(fnorm);
  for (float& v : desc) v = static_cast<float>(v / fnorm);
  return true;
}

}  // namespace

std::vector<Keypoint> detect_keypoints(const Image& gray, const KeypointParams& params) {
  if (gray.channels() != 1) throw InvalidArgument("detect_keypoints requires a grayscale image");
  if (gray.width() < kMinKeypointImageSize || gray.height() < kMinKeypointImageSize) {
    throw InvalidArgument("image too small for keypoint detection (minimum 32x32)");
  }
  if (params.octaves < 1 || params.scales_per_octave < 1 || params.initial_sigma <= 0 ||
      params.edge_ratio <= 0 || params.contrast_threshold < 0) {
    throw InvalidArgument("invalid keypoint parameters");
  }
  const int max_octaves =
      static_cast<int>(std::floor(std::log2(std::min(gray.width(), gray.height())))) - 3;
  const int octaves = std::clamp(max_octaves, 1, params.octaves);
  const Pyramid pyr = build_pyramid(gray, params, octaves);
  const int s = params.scales_per_octave;
  const double threshold = 0.5 * params.contrast_threshold / s;

  std::vector<Keypoint> out;
  for (int o = 0; o < octaves; ++o) {
    const auto& dog = pyr.dog[o];
    const int w = dog[0].w;
    const int h = dog[0].h;
    const double octave_scale = std::ldexp(1.0, o);
    for (int layer = 1; layer <= s; ++layer) {
      for (int y = kBorder; y < h - kBorder; ++y) {
        for (int x = kBorder; x < w - kBorder; ++x) {
          if (!is_extremum(dog, layer, x, y, threshold)) continue;
          Refined r{};
          if (!refine(dog, params, x, y, layer, r)) continue;
          const double sigma_oct = params.initial_sigma * std::pow(2.0, (r.layer + r.ol) / s);
          const double kx = (r.x + r.ox) * octave_scale;
          const double ky = (r.y + r.oy) * octave_scale;
          if (kx < 0 || ky < 0 || kx > gray.width() - 1 || ky > gray.height() - 1) continue;
          const Plane& g = pyr.gauss[o][r.layer];
          for (double ori : dominant_orientations(g, r.x, r.y, sigma_oct)) {
            Keypoint kp;
            kp.x = kx;
            kp.y = ky;
            kp.scale = sigma_oct * octave_scale;
            kp.orientation = ori;
            kp.response = r.response;
            if (!compute_descriptor(g, r.x + r.ox, r.y + r.oy, ori, sigma_oct, kp.descriptor)) {
              continue;
            }
            out.push_back(kp);
          }
        }
      }
    }
  }
  return out;
}

}  // namespace rainforge
