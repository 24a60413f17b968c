#include "rainforge/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rainforge/error.h"
#include "rainforge/imgproc.h"

namespace rainforge {

namespace {

void require_same_shape(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw InvalidArgument("images differ in dimensions or channels");
}

std::vector<double> ssim_window(const SsimParams& p) {
  std::vector<double> k(2 * p.radius + 1);
  double sum = 0.0;
  for (int i = -p.radius; i <= p.radius; ++i) {
    k[i + p.radius] = std::exp(-0.5 * i * i / (p.sigma * p.sigma));
    sum += k[i + p.radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Valid-mode separable filtering of a single plane.
std::vector<double> filter_valid(const std::vector<double>& in, int w, int h,
                                 const std::vector<double>& k) {
  const int r = static_cast<int>(k.size() / 2);
  const int ow = w - 2 * r;
  const int oh = h - 2 * r;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i <= 2 * r; ++i) s += k[i] * in[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i <= 2 * r; ++i) s += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  return out;
}

struct SsimMaps {
  std::vector<double> luminance;  // l term
  std::vector<double> cs;         // contrast-structure term
  int width = 0;
  int height = 0;
};

SsimMaps ssim_maps(const Image& a, const Image& b, const SsimParams& p) {
  const int w = a.width();
  const int h = a.height();
  const auto k = ssim_window(p);
  const std::size_t n = a.pixel_count();
  std::vector<double> aa(n), bb(n), ab(n);
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = av[i] * av[i];
    bb[i] = bv[i] * bv[i];
    ab[i] = av[i] * bv[i];
  }
  const auto mu_a = filter_valid(av, w, h, k);
  const auto mu_b = filter_valid(bv, w, h, k);
  const auto e_aa = filter_valid(aa, w, h, k);
  const auto e_bb = filter_valid(bb, w, h, k);
  const auto e_ab = filter_valid(ab, w, h, k);
  const double c1 = std::pow(p.k1 * p.dynamic_range, 2);
  const double c2 = std::pow(p.k2 * p.dynamic_range, 2);
  SsimMaps maps;
  maps.width = w - 2 * p.radius;
  maps.height = h - 2 * p.radius;
  maps.luminance.resize(mu_a.size());
  maps.cs.resize(mu_a.size());
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double var_a = e_aa[i] - mu_a[i] * mu_a[i];
    const double var_b = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    maps.luminance[i] =
        (2.0 * mu_a[i] * mu_b[i] + c1) / (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1);
    maps.cs[i] = (2.0 * cov + c2) / (var_a + var_b + c2);
  }
  return maps;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double psnr(const Image& a, const Image& b, double peak) {
  require_same_shape(a, b);
  if (!(peak > 0)) throw InvalidArgument("PSNR peak must be positive");
  const double mse = mean_squared_error(a, b);
  if (mse == 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(peak * peak / mse);
}

void SsimParams::validate() const {
  if (!(k1 > 0) || !(k2 > 0) || !(dynamic_range > 0) || !(sigma > 0) || radius < 0) {
    throw InvalidArgument("invalid SSIM parameters");
  }
}

SsimResult ssim(const Image& a, const Image& b, const SsimParams& params) {
  params.validate();
  require_same_shape(a, b);
  const int win = 2 * params.radius + 1;
  if (a.width() < win || a.height() < win) throw InvalidArgument("image smaller than SSIM window");
  SsimResult out;
  out.map = Image(a.width() - 2 * params.radius, a.height() - 2 * params.radius, 1);
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    const SsimMaps maps = ssim_maps(a.channel(c), b.channel(c), params);
    double sum = 0.0;
    for (std::size_t i = 0; i < maps.cs.size(); ++i) {
      const double v = maps.luminance[i] * maps.cs[i];
      out.map.values()[i] += v / a.channels();
      sum += v;
    }
    total += sum / static_cast<double>(maps.cs.size());
  }
  out.mean = total / a.channels();
  return out;
}

void MsSsimParams::validate() const {
  ssim.validate();
  if (scale_weights.empty()) throw InvalidArgument("MS-SSIM needs at least one scale");
  double sum = 0.0;
  for (double w : scale_weights) {
    if (!(w > 0)) throw InvalidArgument("MS-SSIM weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("MS-SSIM weights must sum to 1");
}

MsSsimParams MsSsimParams::with_scales(int scales) {
  MsSsimParams p;
  if (scales < 1 || scales > static_cast<int>(p.scale_weights.size())) {
    throw InvalidArgument("MS-SSIM supports 1 to 5 default scales");
  }
  p.scale_weights.resize(scales);
  const double sum = std::accumulate(p.scale_weights.begin(), p.scale_weights.end(), 0.0);
  for (double& w : p.scale_weights) w /= sum;
  return p;
}

int ms_ssim_min_size(const MsSsimParams& params) {
  const int win = 2 * params.ssim.radius + 1;
  return win << (params.scale_weights.size() - 1);
}

double ms_ssim(const Image& a, const Image& b, const MsSsimParams& params) {
  params.validate();
  require_same_shape(a, b);
  const int scales = static_cast<int>(params.scale_weights.size());
  const int win = 2 * params.ssim.radius + 1;
  if (std::min(a.width(), a.height()) >> (scales - 1) < win) {
    throw InvalidArgument("image too small for the requested number of MS-SSIM scales");
  }
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    Image pa = a.channel(c);
    Image pb = b.channel(c);
    double product = 1.0;
    for (int s = 0; s < scales; ++s) {
      const SsimMaps maps = ssim_maps(pa, pb, params.ssim);
      double term;
      if (s == scales - 1) {
        std::vector<double> full(maps.cs.size());
        for (std::size_t i = 0; i < full.size(); ++i) full[i] = maps.luminance[i] * maps.cs[i];
        term = mean_of(full);
      } else {
        term = mean_of(maps.cs);
      }
      product *= std::pow(std::max(term, 0.0), params.scale_weights[s]);
      if (s + 1 < scales) {
        pa = downsample2x(pa);
        pb = downsample2x(pb);
      }
    }
    total += product;
  }
  return total / a.channels();
}

double mean_absolute_error(const Image& a, const Image& b) {
  require_same_shape(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a.values()[i] - b.values()[i]);
  return s / static_cast<double>(a.size());
}

}  // namespace rainforge
