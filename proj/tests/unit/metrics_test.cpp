#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

#include "fixtures.h"
#include "oracles.h"
#include "rainforge/error.h"
#include "rainforge/metrics.h"

using namespace rainforge;

namespace {

Image add_noise(const Image& img, double sigma, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g(0.0, sigma);
  Image out = img;
  for (double& v : out.values()) v += g(gen);
  return out;
}

}  // namespace

TEST(Psnr, IdentityAndUniformOffset) {
  const Image a = rftest::random_image(8, 8, 3, 1);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
  EXPECT_EQ(psnr(a, a), kInfinitePsnr);
  EXPECT_NEAR(psnr(Image(8, 8, 3, 0.3), Image(8, 8, 3, 0.4)), 20.0, 1e-9);
  EXPECT_THROW(psnr(a, Image(8, 7, 3)), InvalidArgument);
}

TEST(Psnr, MatchesDirectOracle) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Image a = rftest::random_image(16, 16, 3, 2 * s), b = rftest::random_image(16, 16, 3, 2 * s + 1);
    EXPECT_NEAR(psnr(a, b), oracle::psnr(a, b), 1e-9);
  }
}

TEST(Ssim, IdentityAndConstants) {
  const Image a = rftest::textured_image(32, 32, 3, 3);
  EXPECT_NEAR(ssim(a, a).mean, 1.0, 1e-9);
  const double ma = 0.4, mb = 0.47, c1 = 1e-4;
  const double expected = (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
  EXPECT_NEAR(ssim(Image(20, 20, 1, ma), Image(20, 20, 1, mb)).mean, expected, 1e-12);
  EXPECT_THROW(ssim(Image(10, 10, 1), Image(10, 10, 1)), InvalidArgument);
  EXPECT_THROW(ssim(a, Image(32, 31, 3)), InvalidArgument);
}

TEST(Ssim, MatchesSlidingWindowOracle) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Image a = rftest::random_image(32, 32, s % 2 ? 3 : 1, 100 + s);
    const Image b = rftest::random_image(32, 32, s % 2 ? 3 : 1, 200 + s);
    EXPECT_NEAR(ssim(a, b).mean, oracle::ssim(a, b), 1e-7);
  }
  const SsimResult r = ssim(rftest::random_image(32, 24, 1, 5), rftest::random_image(32, 24, 1, 6));
  EXPECT_EQ(r.map.width(), 22);
  EXPECT_EQ(r.map.height(), 14);
}

TEST(MsSsim, IdentitySingleScaleAndOracle) {
  const Image a = rftest::textured_image(176, 176, 3, 7);
  EXPECT_NEAR(ms_ssim(a, a), 1.0, 1e-9);
  MsSsimParams one;
  one.scale_weights = {1.0};
  const Image b = rftest::random_image(40, 40, 1, 8), c = rftest::random_image(40, 40, 1, 9);
  const Image bc = rftest::textured_image(40, 40, 1, 10);
  EXPECT_NEAR(ms_ssim(bc, add_noise(bc, 0.05, 1), one), ssim(bc, add_noise(bc, 0.05, 1)).mean, 1e-9);
  const auto three = MsSsimParams::with_scales(3);
  for (std::uint64_t s = 0; s < 4; ++s) {
    const Image x = rftest::textured_image(128, 128, 3, 300 + s);
    const Image y = add_noise(x, 0.05 + 0.05 * s, s);
    EXPECT_NEAR(ms_ssim(x, y, three), oracle::ms_ssim(x, y, three.scale_weights), 1e-6);
  }
  // Random pairs: several terms clamp to 0.
  EXPECT_NEAR(ms_ssim(b, c, MsSsimParams::with_scales(2)),
              oracle::ms_ssim(b, c, MsSsimParams::with_scales(2).scale_weights), 1e-6);
}

TEST(MsSsim, FullScaleOracleAndSizeGuard) {
  const Image x = rftest::textured_image(192, 176, 3, 11);
  const Image y = add_noise(x, 0.08, 12);
  const MsSsimParams p;
  EXPECT_NEAR(ms_ssim(x, y), oracle::ms_ssim(x, y, p.scale_weights), 1e-6);
  EXPECT_EQ(ms_ssim_min_size(p), 176);
  EXPECT_THROW(ms_ssim(Image(175, 200, 1), Image(175, 200, 1)), InvalidArgument);
  MsSsimParams bad;
  bad.scale_weights = {0.5, 0.4};
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(MetricProperties, Symmetry) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Image a = rftest::textured_image(64, 64, 3, 20 + s), b = add_noise(a, 0.1, s);
    const auto p2 = MsSsimParams::with_scales(2);
    EXPECT_NEAR(psnr(a, b), psnr(b, a), 1e-12);
    EXPECT_NEAR(ssim(a, b).mean, ssim(b, a).mean, 1e-12);
    EXPECT_NEAR(ms_ssim(a, b, p2), ms_ssim(b, a, p2), 1e-12);
  }
}

TEST(MetricProperties, Ranges) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Image a = rftest::random_image(48, 48, 1, 40 + s), b = rftest::random_image(48, 48, 1, 60 + s);
    Image inv = a;
    for (double& v : inv.values()) v = 1 - v;
    for (const Image* other : std::array<const Image*, 2>{&b, &inv}) {
      const double s1 = ssim(a, *other).mean;
      const double s2 = ms_ssim(a, *other, MsSsimParams::with_scales(2));
      EXPECT_GE(s1, -1.0);
      EXPECT_LE(s1, 1.0);
      EXPECT_GE(s2, 0.0);
      EXPECT_LE(s2, 1.0);
    }
  }
}

TEST(MetricProperties, NoiseDecreasesScores) {
  const Image a = rftest::textured_image(176, 176, 3, 70);
  double last_ssim = 1.0, last_ms = 1.0;
  for (double sigma : {0.01, 0.05, 0.1}) {
    const Image b = add_noise(a, sigma, 71);
    const double s = ssim(a, b).mean, m = ms_ssim(a, b);
    EXPECT_LT(s, last_ssim);
    EXPECT_LT(m, last_ms);
    last_ssim = s;
    last_ms = m;
  }
}

TEST(MetricProperties, MsSsimLossZeroOnlyAtIdentity) {
  const Image a = rftest::textured_image(176, 176, 1, 80);
  EXPECT_NEAR(1.0 - ms_ssim(a, a), 0.0, 1e-9);
  Image b = a;
  b.at(50, 50) += 0.01;
  EXPECT_GT(1.0 - ms_ssim(a, b), 0.0);
}

TEST(Mae, Direct) {
  EXPECT_NEAR(mean_absolute_error(Image(4, 4, 3, 0.2), Image(4, 4, 3, 0.5)), 0.3, 1e-15);
}
