#include "fixtures.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "rainforge/imgproc.h"

namespace rftest {

Image random_image(int width, int height, int channels, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(width, height, channels);
  for (double& v : img.values()) v = u(gen);
  return img;
}

Image textured_image(int width, int height, int channels, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image out(width, height, channels);
  for (int c = 0; c < channels; ++c) {
    Image acc(width, height, 1);
    const double sigmas[] = {1.0, 2.5, 6.0};
    const double weights[] = {0.5, 1.0, 1.5};
    for (int k = 0; k < 3; ++k) {
      Image noise(width, height, 1);
      for (double& v : noise.values()) v = u(gen) - 0.5;
      noise = rainforge::gaussian_blur(noise, sigmas[k]);
      double sd = 0.0;
      for (double v : noise.values()) sd += v * v;
      sd = std::sqrt(sd / static_cast<double>(noise.size()));
      for (std::size_t i = 0; i < acc.size(); ++i) acc.values()[i] += weights[k] * noise.values()[i] / sd;
    }
    const int rects = std::max(4, width * height / 1500);
    for (int r = 0; r < rects; ++r) {
      const int rw = 4 + static_cast<int>(u(gen) * width / 6);
      const int rh = 4 + static_cast<int>(u(gen) * height / 6);
      const int x0 = static_cast<int>(u(gen) * (width - rw));
      const int y0 = static_cast<int>(u(gen) * (height - rh));
      const double level = (u(gen) - 0.5) * 4.0;
      for (int y = y0; y < y0 + rh; ++y) {
        for (int x = x0; x < x0 + rw; ++x) acc.at(x, y) = 0.5 * acc.at(x, y) + level;
      }
    }
    // Map mean +- 2.2 sd onto [0.05, 0.95], clamping the tails.
    double mean = 0.0, var = 0.0;
    for (double v : acc.values()) mean += v;
    mean /= static_cast<double>(acc.size());
    for (double v : acc.values()) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(acc.size()));
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double t = std::clamp((acc.at(x, y) - mean) / (4.4 * sd) + 0.5, 0.0, 1.0);
        out.at(x, y, c) = 0.05 + 0.9 * t;
      }
    }
  }
  return out;
}

DisplacementField bump_field(int width, int height, const std::vector<Bump>& bumps) {
  std::vector<rainforge::Vec2> v(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      rainforge::Vec2& d = v[static_cast<std::size_t>(y) * width + x];
      for (const Bump& b : bumps) {
        const double g = std::exp(-((x - b.cx) * (x - b.cx) + (y - b.cy) * (y - b.cy)) /
                                  (2 * b.sigma * b.sigma));
        d.x += b.ax * g;
        d.y += b.ay * g;
      }
    }
  }
  return DisplacementField(width, height, std::move(v));
}

Homography random_homography(int width, int height, double corner_px, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  // Corner displacement solved as a 4-point homography with plain Gaussian
  // elimination on the 8x8 system.
  const double src[4][2] = {{0, 0}, {double(width), 0}, {double(width), double(height)}, {0, double(height)}};
  double dst[4][2];
  for (int i = 0; i < 4; ++i) {
    dst[i][0] = src[i][0] + corner_px * u(gen);
    dst[i][1] = src[i][1] + corner_px * u(gen);
  }
  double a[8][9] = {};
  for (int i = 0; i < 4; ++i) {
    const double x = src[i][0], y = src[i][1], X = dst[i][0], Y = dst[i][1];
    double r0[9] = {x, y, 1, 0, 0, 0, -X * x, -X * y, X};
    double r1[9] = {0, 0, 0, x, y, 1, -Y * x, -Y * y, Y};
    std::copy(r0, r0 + 9, a[2 * i]);
    std::copy(r1, r1 + 9, a[2 * i + 1]);
  }
  for (int col = 0; col < 8; ++col) {
    int piv = col;
    for (int r = col + 1; r < 8; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    for (int r = 0; r < 8; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (int k = col; k < 9; ++k) a[r][k] -= f * a[col][k];
    }
  }
  Homography::Matrix m{};
  for (int i = 0; i < 8; ++i) m[i] = a[i][8] / a[i][i];
  m[8] = 1.0;
  return Homography(m);
}

TempDir::TempDir(const std::string& tag) {
  static std::mt19937_64 gen(std::random_device{}());
  path_ = std::filesystem::temp_directory_path() / (tag + "_" + std::to_string(gen()));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

rainforge::StreakParams streaks(int width, int height, int count, std::uint64_t seed) {
  rainforge::StreakParams p;
  p.width = width;
  p.height = height;
  p.count = count;
  p.seed = seed;
  return p;
}

Synthetic make_correspondences(const Homography& h, int n, double outlier_frac, double noise,
                               std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 256.0);
  std::normal_distribution<double> g(0.0, noise);
  Synthetic s;
  const int outliers = static_cast<int>(std::lround(n * outlier_frac));
  for (int i = 0; i < n; ++i) {
    rainforge::Correspondence c;
    c.source = {u(gen), u(gen)};
    if (i < outliers) {
      c.target = {u(gen), u(gen)};
    } else {
      const rainforge::Vec2 t = h.apply(c.source);
      c.target = {t.x + g(gen), t.y + g(gen)};
    }
    s.corrs.push_back(c);
    s.truth.push_back(i >= outliers);
  }
  // Interleave so outliers are not a prefix.
  std::vector<std::size_t> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), gen);
  Synthetic out;
  for (std::size_t i : order) {
    out.corrs.push_back(s.corrs[i]);
    out.truth.push_back(s.truth[i]);
  }
  return out;
}

}  // namespace rftest
