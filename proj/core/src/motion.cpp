#include "rainforge/motion.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "fft.h"
#include "rainforge/error.h"
#include "rainforge/imgproc.h"

namespace rainforge {

namespace {

using Complex = std::complex<double>;

std::vector<double> hann(int n) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
  return w;
}

std::vector<Complex> windowed(const Image& img, const Rect& r, const std::vector<double>& wx,
                              const std::vector<double>& wy) {
  double mean = 0.0;
  for (int y = r.y; y < r.y + r.height; ++y)
    for (int x = r.x; x < r.x + r.width; ++x) mean += img.at(x, y);
  mean /= static_cast<double>(r.width) * r.height;
  std::vector<Complex> out(static_cast<std::size_t>(r.width) * r.height);
  for (int y = 0; y < r.height; ++y)
    for (int x = 0; x < r.width; ++x) {
      out[static_cast<std::size_t>(y) * r.width + x] =
          (img.at(r.x + x, r.y + y) - mean) * wx[x] * wy[y];
    }
  return out;
}

int wrap(int k, int n) { return k > n / 2 ? k - n : k; }

double parabolic_offset(double l, double c, double r) {
  const double denom = l - 2.0 * c + r;
  if (std::abs(denom) < 1e-15) return 0.0;
  const double off = 0.5 * (l - r) / denom;
  return std::clamp(off, -0.5, 0.5);
}

PhaseCorrelation correlate_region(const Image& a, const Image& b, const Rect& r) {
  const auto wx = hann(r.width);
  const auto wy = hann(r.height);
  const auto fa = detail::dft2(windowed(a, r, wx, wy), r.width, r.height, false);
  const auto fb = detail::dft2(windowed(b, r, wx, wy), r.width, r.height, false);
  std::vector<Complex> cross(fa.size());
  double energy = 0.0;
  for (std::size_t i = 0; i < fa.size(); ++i) {
    cross[i] = std::conj(fa[i]) * fb[i];
    energy = std::max(energy, std::abs(cross[i]));
  }
  PhaseCorrelation out;
  if (energy < 1e-20) return out;  // no texture in either image
  const double eps = energy * 1e-9;
  for (Complex& c : cross) c /= (std::abs(c) + eps);
  const auto corr = detail::dft2(cross, r.width, r.height, true);

  const double norm = 1.0 / static_cast<double>(corr.size());
  std::size_t best = 0;
  for (std::size_t i = 1; i < corr.size(); ++i)
    if (corr[i].real() > corr[best].real()) best = i;
  const int px = static_cast<int>(best % r.width);
  const int py = static_cast<int>(best / r.width);
  auto value = [&](int x, int y) {
    x = (x % r.width + r.width) % r.width;
    y = (y % r.height + r.height) % r.height;
    return corr[static_cast<std::size_t>(y) * r.width + x].real();
  };
  const double c = value(px, py);
  const double ox = r.width >= 3 ? parabolic_offset(value(px - 1, py), c, value(px + 1, py)) : 0.0;
  const double oy = r.height >= 3 ? parabolic_offset(value(px, py - 1), c, value(px, py + 1)) : 0.0;
  out.peak_x = wrap(px, r.width);
  out.peak_y = wrap(py, r.height);
  out.shift = {out.peak_x + ox, out.peak_y + oy};
  out.peak_value = c * norm;
  return out;
}

}  // namespace

PhaseCorrelation phase_correlate(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw InvalidArgument("phase correlation requires equal dimensions");
  }
  const Image la = luminance(a);
  const Image lb = luminance(b);
  return correlate_region(la, lb, {0, 0, a.width(), a.height()});
}

namespace {

bool fully_valid(const RegionMask& m, const Rect& r) {
  for (int y = r.y; y < r.y + r.height; ++y)
    for (int x = r.x; x < r.x + r.width; ++x)
      if (!m.at(x, y)) return false;
  return true;
}

}  // namespace

Image motion_view(const Image& img) { return grey_opening(luminance(img), 2); }

MotionReport alignment_residual(const Image& a, const Image& b, int block, const RegionMask* valid) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw InvalidArgument("alignment_residual requires equal dimensions");
  }
  if (block < 4) throw InvalidArgument("block size must be at least 4");
  if (valid && (valid->width() != a.width() || valid->height() != a.height())) {
    throw InvalidArgument("validity mask does not match the images");
  }
  if (a.width() < block || a.height() < block) {
    throw InvalidArgument("images are smaller than one block");
  }
  const Image la = luminance(a);
  const Image lb = luminance(b);
  MotionReport report;
  report.block_size = block;
  const PhaseCorrelation global = correlate_region(la, lb, {0, 0, a.width(), a.height()});
  report.global_shift = global.shift;
  report.global_peak_x = global.peak_x;
  report.global_peak_y = global.peak_y;
  report.global_magnitude = std::hypot(global.shift.x, global.shift.y);

  double sum = 0.0;
  for (int y = 0; y + block <= a.height(); y += block) {
    for (int x = 0; x + block <= a.width(); x += block) {
      const Rect r{x, y, block, block};
      if (valid && !fully_valid(*valid, r)) continue;
      const PhaseCorrelation pc = correlate_region(la, lb, r);
      const double mag = std::hypot(pc.shift.x, pc.shift.y);
      report.blocks.push_back({r, pc.shift, mag, pc.peak_value});
      report.max_block_shift = std::max(report.max_block_shift, mag);
      sum += mag;
    }
  }
  if (!report.blocks.empty()) report.mean_block_shift = sum / static_cast<double>(report.blocks.size());
  return report;
}

}  // namespace rainforge
