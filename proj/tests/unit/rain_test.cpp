#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.h"
#include "oracles.h"
#include "rainforge/error.h"
#include "rainforge/image_io.h"
#include "rainforge/metrics.h"
#include "rainforge/rain.h"

using namespace rainforge;

TEST(StreakLayer, ZeroCountAndDeterminism) {
  auto p = rftest::streaks(40, 30, 0, 1);
  EXPECT_EQ(render_streak_layer(p).energy(), 0.0);
  p.count = 25;
  const StreakLayer a = render_streak_layer(p), b = render_streak_layer(p);
  EXPECT_EQ(a, b);
  EXPECT_GT(a.energy(), 0.0);
  for (double v : a.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  p.seed = 2;
  EXPECT_NE(render_streak_layer(p), a);
  p.opacity = {0.5, 1.5};
  EXPECT_THROW(render_streak_layer(p), InvalidArgument);
}

TEST(StreakLayer, SingleSegmentMatchesRasterOracle) {
  struct Case {
    double ax, ay, bx, by, thick;
  };
  for (const Case& c : {Case{5.3, 4.1, 9.7, 22.8, 1.0}, Case{20, 3, 20, 25, 2.0}, Case{2, 2, 30, 9, 1.5},
                        Case{15, 15, 15, 15, 1.0}}) {
    StreakLayer layer(32, 28);
    rasterize_streak(layer, {c.ax, c.ay}, {c.bx, c.by}, c.thick, 1.0);
    const auto ref = oracle::capsule(32, 28, c.ax, c.ay, c.bx, c.by, c.thick, 1.0);
    double sum = 0.0, ref_sum = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      EXPECT_EQ(layer.values()[i] > 0, ref[i] > 0);
      EXPECT_NEAR(layer.values()[i], ref[i], 1e-12);
      sum += layer.values()[i];
      ref_sum += ref[i];
    }
    EXPECT_NEAR(sum, ref_sum, 1e-6);
  }
}

TEST(Composite, ZeroLayersIsIdentity) {
  const Image clean = rftest::random_image(16, 12, 3, 3);
  const CompositeResult r = composite_rain(clean, {});
  EXPECT_EQ(r.image, clean);
  EXPECT_EQ(r.saturated, 0u);
  EXPECT_THROW(composite_rain(clean, {StreakLayer(4, 4)}), InvalidArgument);
}

TEST(Composite, AdditiveBelowSaturation) {
  Image clean(40, 30, 3, 0.1);
  auto p = rftest::streaks(40, 30, 6, 4);
  p.opacity = {0.1, 0.2};
  const StreakLayer l1 = render_streak_layer(p);
  p.seed = 5;
  const StreakLayer l2 = render_streak_layer(p);
  const CompositeResult both = composite_rain(clean, {l1, l2});
  ASSERT_EQ(both.saturated, 0u);
  const Image seq = composite_rain(composite_rain(clean, {l1}).image, {l2}).image;
  EXPECT_EQ(seq, both.image);
}

TEST(Composite, MatchesPerPixelSum) {
  const Image clean = rftest::random_image(24, 20, 3, 6);
  std::vector<StreakLayer> layers;
  for (std::uint64_t s = 0; s < 3; ++s) layers.push_back(render_streak_layer(rftest::streaks(24, 20, 8, 10 + s)));
  const CompositeResult r = composite_rain(clean, layers);
  std::size_t saturated = 0;
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 24; ++x) {
      for (int c = 0; c < 3; ++c) {
        double v = clean.at(x, y, c);
        for (const auto& l : layers) v += l.at(x, y);
        if (v > 1.0) {
          ++saturated;
          v = 1.0;
        }
        EXPECT_EQ(r.image.at(x, y, c), v);
        EXPECT_GE(r.image.at(x, y, c), std::min(clean.at(x, y, c), 1.0));
      }
    }
  }
  EXPECT_EQ(r.saturated, saturated);
}

TEST(Veiling, Examples) {
  const Image img = rftest::random_image(5, 5, 3, 7);
  EXPECT_EQ(apply_veiling(img, {0.0, {0.8, 0.8, 0.8}}), img);
  const Image full = apply_veiling(img, {1.0, {0.8, 0.8, 0.8}});
  for (double v : full.values()) EXPECT_DOUBLE_EQ(v, 0.8);
  const Image px(1, 1, 3, std::vector<double>{0.2, 0.4, 0.6});
  const Image out = apply_veiling(px, {0.3, {0.8, 0.8, 0.8}});
  EXPECT_NEAR(out.at(0, 0, 0), 0.38, 1e-12);
  EXPECT_NEAR(out.at(0, 0, 1), 0.52, 1e-12);
  EXPECT_NEAR(out.at(0, 0, 2), 0.66, 1e-12);
  EXPECT_THROW(apply_veiling(img, {1.2, {0.8, 0.8, 0.8}}), InvalidArgument);
}

TEST(Veiling, PreservesOrder) {
  const Image a = rftest::random_image(10, 10, 3, 8);
  Image b = a;
  for (double& v : b.values()) v = std::min(1.0, v + 0.05);
  for (double s : {0.1, 0.5, 0.9}) {
    const Image va = apply_veiling(a, {s, {0.3, 0.6, 0.9}}), vb = apply_veiling(b, {s, {0.3, 0.6, 0.9}});
    for (std::size_t i = 0; i < va.size(); ++i) EXPECT_LE(va.values()[i], vb.values()[i]);
  }
}

TEST(Synthesize, NoOpAndReproducible) {
  const Image clean = rftest::textured_image(48, 40, 3, 9);
  EXPECT_EQ(synthesize_pair(clean, {}).rainy, clean);
  SynthesisRequest req;
  req.layers = {rftest::streaks(48, 40, 30, 1), rftest::streaks(48, 40, 30, 2)};
  req.veil = {0.2, {0.7, 0.7, 0.75}};
  req.warp = Homography({1, 0, 1.5, 0, 1, -0.5, 0, 0, 1});
  const SynthesisResult a = synthesize_pair(clean, req), b = synthesize_pair(clean, req);
  EXPECT_EQ(encode_png(a.rainy), encode_png(b.rainy));
  EXPECT_EQ(a.provenance, b.provenance);
  EXPECT_EQ(a.provenance["layers"].size(), 2u);
  EXPECT_EQ(a.provenance["layers"][1]["seed"], 2);
  EXPECT_NE(a.rainy, clean);
}

TEST(RainProperties, PsnrFallsWithNestedLayerEnergy) {
  const Image clean = rftest::textured_image(64, 64, 3, 12);
  Image dim = clean;
  for (double& v : dim.values()) v *= 0.5;  // keeps sums below 1
  std::vector<StreakLayer> layers;
  double last = kInfinitePsnr, last_energy = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto p = rftest::streaks(64, 64, 10, 40 + s);
    p.opacity = {0.05, 0.1};
    layers.push_back(render_streak_layer(p));
    double energy = 0.0;
    for (const auto& l : layers) energy += l.energy();
    const double q = psnr(composite_rain(dim, layers).image, dim);
    EXPECT_GT(energy, last_energy);
    EXPECT_LT(q, last);
    last = q;
    last_energy = energy;
  }
}
