#include <benchmark/benchmark.h>

#include <algorithm>
#include <cmath>

#include "rainforge/demons.h"
#include "rainforge/homography.h"
#include "rainforge/imgproc.h"
#include "rainforge/keypoints.h"
#include "rainforge/metrics.h"
#include "rainforge/random.h"

using namespace rainforge;

namespace {

// Blurred noise: enough structure for keypoints and demons.
Image texture(int n, std::uint64_t seed) {
  Rng rng(seed);
  Image img(n, n, 1);
  for (double& v : img.values()) v = rng.uniform();
  Image coarse = gaussian_blur(img, 3.0);
  Image fine = gaussian_blur(img, 1.0);
  for (std::size_t i = 0; i < img.values().size(); ++i)
    img.values()[i] = std::clamp(0.5 + 4.0 * (coarse.values()[i] - 0.5) + 0.5 * (fine.values()[i] - 0.5), 0.0, 1.0);
  return img;
}

void BM_Ransac(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Homography h(std::array<double, 9>{1.02, 0.01, 3.0, -0.015, 0.99, -2.0, 1e-5, -2e-5, 1.0});
  Rng rng(3);
  std::vector<Correspondence> corrs;
  for (int i = 0; i < n; ++i) {
    const Vec2 a{rng.uniform(0, 256), rng.uniform(0, 256)};
    const Vec2 b = i % 5 < 2 ? Vec2{rng.uniform(0, 256), rng.uniform(0, 256)} : h.apply(a);
    corrs.push_back({a, b, 0.0});
  }
  RansacParams p;
  for (auto _ : state) benchmark::DoNotOptimize(estimate_homography_ransac(corrs, p));
}
BENCHMARK(BM_Ransac)->Arg(200)->Arg(1000)->Unit(benchmark::kMicrosecond);

void BM_Demons(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image moving = texture(n, 1);
  DisplacementField field(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double g = 4.0 * std::exp(-((x - n / 2.0) * (x - n / 2.0) + (y - n / 2.0) * (y - n / 2.0)) / (2.0 * n * n / 100.0));
      field.at(x, y) = {g * 0.7, -g * 0.7};
    }
  const Image fixed = warp_displacement(moving, field).image;
  for (auto _ : state) benchmark::DoNotOptimize(register_elastic(moving, fixed));
}
BENCHMARK(BM_Demons)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Ssim(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image a = texture(n, 1), b = texture(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_MsSsim(benchmark::State& state) {
  const Image a = texture(256, 1), b = texture(256, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ms_ssim(a, b));
}
BENCHMARK(BM_MsSsim)->Unit(benchmark::kMillisecond);

void BM_Keypoints(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image img = texture(n, 4);
  for (auto _ : state) benchmark::DoNotOptimize(detect_keypoints(img));
}
BENCHMARK(BM_Keypoints)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
