#include <gtest/gtest.h>

#include <chrono>
#include <cstdio>
#include <cmath>
#include <random>

#include "fixtures.h"
#include "oracles.h"
#include "rainforge/demons.h"
#include "rainforge/error.h"
#include "rainforge/homography.h"
#include "rainforge/imgproc.h"
#include "rainforge/keypoints.h"
#include "rainforge/matching.h"
#include "rainforge/motion.h"

using namespace rainforge;

namespace {

Image gray_texture(int w, int h, std::uint64_t seed) {
  return to_grayscale(rftest::textured_image(w, h, 3, seed));
}


double max_element_error(const Homography& a, const Homography& b) {
  double e = 0.0;
  for (int i = 0; i < 9; ++i) e = std::max(e, std::abs(a.matrix()[i] - b.matrix()[i]));
  return e;
}

}  // namespace

TEST(Keypoints, ConstantImageHasNone) {
  EXPECT_TRUE(detect_keypoints(Image(64, 64, 1, 0.4)).empty());
  EXPECT_THROW(detect_keypoints(Image(31, 64, 1)), InvalidArgument);
  EXPECT_THROW(detect_keypoints(Image(64, 64, 3)), InvalidArgument);
}

TEST(Keypoints, InvariantsHold) {
  const Image img = gray_texture(128, 96, 1);
  const auto kps = detect_keypoints(img);
  ASSERT_GT(kps.size(), 20u);
  for (const Keypoint& k : kps) {
    double n = 0.0;
    for (float v : k.descriptor) n += double(v) * v;
    EXPECT_NEAR(std::sqrt(n), 1.0, 1e-6);
    EXPECT_GT(k.scale, 0.0);
    EXPECT_GE(k.x, 0.0);
    EXPECT_GE(k.y, 0.0);
    EXPECT_LE(k.x, 127.0);
    EXPECT_LE(k.y, 95.0);
  }
}

TEST(Keypoints, TranslationSelfMatch) {
  const Image big = gray_texture(200, 140, 2);
  const Image a = crop(big, {20, 10, 160, 120});
  const Image b = crop(big, {13, 10, 160, 120});  // b(p) = a(p - (7,0))
  const auto m = match_descriptors(detect_keypoints(a), detect_keypoints(b));
  ASSERT_GT(m.size(), 20u);
  int good = 0;
  for (const Correspondence& c : m) {
    if (std::hypot(c.target.x - c.source.x - 7.0, c.target.y - c.source.y) <= 0.5) ++good;
  }
  EXPECT_GE(good, 0.9 * m.size()) << good << " of " << m.size();
}

TEST(Keypoints, RotationRedetection) {
  const int n = 128;
  const Image img = gray_texture(n, n, 3);
  Image rot(n, n, 1);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) rot.at(x, y) = img.at(y, n - 1 - x);
  }
  const auto ka = detect_keypoints(img);
  const auto kb = detect_keypoints(rot);
  ASSERT_FALSE(ka.empty());
  int found = 0;
  for (const Keypoint& k : ka) {
    const double ex = n - 1 - k.y, ey = k.x;
    for (const Keypoint& q : kb) {
      if (std::hypot(q.x - ex, q.y - ey) <= 1.5) {
        ++found;
        break;
      }
    }
  }
  EXPECT_GE(found, 0.5 * ka.size()) << found << " of " << ka.size();
}

TEST(Matching, SelfMatchesAndEmpty) {
  const auto kps = detect_keypoints(gray_texture(96, 96, 4));
  const auto m = match_descriptors(kps, kps);
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < kps.size(); ++i) {
    bool unique = true;
    for (std::size_t j = 0; j < kps.size(); ++j) {
      if (i != j && kps[i].descriptor == kps[j].descriptor) unique = false;
    }
    distinct += unique;
  }
  std::size_t self = 0;
  for (const Correspondence& c : m) {
    EXPECT_EQ(c.source_index, c.target_index);
    self += c.source_index == c.target_index;
  }
  EXPECT_EQ(self, distinct);
  EXPECT_TRUE(match_descriptors(std::vector<Keypoint>(1), {}).empty());
  EXPECT_THROW(match_descriptors(kps, kps, 1.0), InvalidArgument);
}

TEST(Matching, RandomCloudMatchesBruteForce) {
  std::mt19937_64 gen(5);
  std::normal_distribution<float> g;
  auto cloud = [&](int n) {
    std::vector<Keypoint> out(n);
    for (Keypoint& k : out) {
      float norm = 0.f;
      for (float& v : k.descriptor) norm += (v = g(gen)) * v;
      for (float& v : k.descriptor) v /= std::sqrt(norm);
      k.x = g(gen);
      k.y = g(gen);
    }
    return out;
  };
  const auto a = cloud(150), b0 = cloud(120);
  // Half of b are perturbed copies of a so some ratios pass.
  auto b = b0;
  for (int i = 0; i < 60; ++i) {
    b[i] = a[i * 2];
    for (float& v : b[i].descriptor) v += 0.02f * g(gen);
  }
  for (double ratio : {0.6, 0.8, 0.95}) {
    const auto ours = match_descriptors(a, b, ratio);
    const auto ref = oracle::brute_force_match(a, b, ratio);
    ASSERT_EQ(ours.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      EXPECT_EQ(ours[i].source_index, ref[i].a);
      EXPECT_EQ(ours[i].target_index, ref[i].b);
      EXPECT_NEAR(ours[i].match_score, ref[i].ratio, 1e-12);
      EXPECT_LT(ours[i].match_score, ratio);
    }
  }
}

TEST(Dlt, IdentityAndTranslation) {
  std::vector<Correspondence> c;
  for (Vec2 p : {Vec2{0, 0}, Vec2{10, 0}, Vec2{10, 10}, Vec2{0, 10}}) c.push_back({p, p});
  EXPECT_LT(max_element_error(solve_homography_dlt(c), Homography()), 1e-9);
  for (auto& x : c) x.target = {x.source.x + 3.5, x.source.y - 7.25};
  EXPECT_LT(max_element_error(solve_homography_dlt(c), Homography({1, 0, 3.5, 0, 1, -7.25, 0, 0, 1})),
            1e-9);
}

TEST(Dlt, RandomProjectiveEightPoints) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Homography h = rftest::random_homography(256, 256, 30.0, seed);
    const auto s = rftest::make_correspondences(h, 8, 0.0, 0.0, seed + 100);
    EXPECT_LT(max_element_error(solve_homography_dlt(s.corrs), h), 1e-7);
  }
}

TEST(Dlt, Degenerate) {
  std::vector<Correspondence> c;
  for (int i = 0; i < 5; ++i) c.push_back({{double(i), double(2 * i)}, {double(i), double(i)}});
  EXPECT_THROW(solve_homography_dlt(c), DegenerateError);
  std::vector<Correspondence> three(c.begin(), c.begin() + 3);
  EXPECT_THROW(solve_homography_dlt(three), InvalidArgument);
}

TEST(Dlt, TargetScaleInvariance) {
  // Scaling homogeneous target coordinates (x,y,1) -> (kx,ky,k) leaves the
  // Euclidean points, and so the normalized solution, unchanged.
  const Homography h = rftest::random_homography(256, 256, 20.0, 77);
  auto s = rftest::make_correspondences(h, 12, 0.0, 0.3, 78);
  const Homography a = solve_homography_dlt(s.corrs);
  for (double k : {1e-3, 7.0, 1e4}) {
    auto scaled = s.corrs;
    for (auto& c : scaled) c.target = {(k * c.target.x) / k, (k * c.target.y) / k};
    EXPECT_LT(max_element_error(solve_homography_dlt(scaled), a), 1e-9);
  }
}

TEST(Ransac, AllInliersRecovered) {
  const Homography h = rftest::random_homography(256, 256, 15.0, 9);
  const auto s = rftest::make_correspondences(h, 50, 0.0, 0.0, 10);
  const RansacResult r = estimate_homography_ransac(s.corrs);
  EXPECT_EQ(r.inlier_count(), 50u);
  EXPECT_LT(corner_error(r.homography, h, 256, 256), 1e-6);
}

TEST(Ransac, FortyPercentOutliers) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Homography h = rftest::random_homography(256, 256, 15.0, 20 + seed);
    const auto s = rftest::make_correspondences(h, 200, 0.4, 0.5, 30 + seed);
    RansacParams p;
    p.seed = seed;
    const RansacResult r = estimate_homography_ransac(s.corrs, p);
    int correct = 0;
    for (std::size_t i = 0; i < s.truth.size(); ++i) correct += r.inlier_flags[i] == s.truth[i];
    EXPECT_GE(correct, 0.95 * 200);
    EXPECT_LT(r.mean_reprojection_error, 1.0);
    EXPECT_LT(corner_error(r.homography, h, 256, 256), 1.0);
    for (std::size_t i = 0; i < s.corrs.size(); ++i) {
      if (r.inlier_flags[i]) EXPECT_LE(symmetric_transfer_error(r.homography, s.corrs[i]), 3.0);
    }
  }
}

TEST(Ransac, SixtyPercentOutliers) {
  const Homography h = rftest::random_homography(256, 256, 15.0, 40);
  const auto s = rftest::make_correspondences(h, 200, 0.6, 0.5, 41);
  const RansacResult r = estimate_homography_ransac(s.corrs);
  EXPECT_LT(corner_error(r.homography, h, 256, 256), 1.5);
}

TEST(Ransac, DeterministicAndFailsWithoutModel) {
  const Homography h = rftest::random_homography(256, 256, 15.0, 50);
  const auto s = rftest::make_correspondences(h, 120, 0.5, 0.5, 51);
  RansacParams p;
  p.seed = 99;
  const RansacResult a = estimate_homography_ransac(s.corrs, p);
  const RansacResult b = estimate_homography_ransac(s.corrs, p);
  EXPECT_EQ(a.inlier_flags, b.inlier_flags);
  EXPECT_EQ(a.homography.matrix(), b.homography.matrix());
  EXPECT_EQ(a.iterations_used, b.iterations_used);
  std::vector<Correspondence> three(s.corrs.begin(), s.corrs.begin() + 3);
  EXPECT_THROW(estimate_homography_ransac(three), InvalidArgument);
  std::vector<Correspondence> line;
  for (int i = 0; i < 10; ++i) line.push_back({{double(i), 0}, {double(i), 0}});
  EXPECT_THROW(estimate_homography_ransac(line), DegenerateError);
}

TEST(Demons, IdenticalImagesStopEarly) {
  const Image img = gray_texture(64, 64, 6);
  DemonsTrace trace;
  const DisplacementField f = register_elastic(img, img, {}, &trace);
  EXPECT_EQ(f.max_magnitude(), 0.0);
  // One iteration per level, then the stop rule fires.
  EXPECT_LE(trace.iterations.size(), 3u);
}

TEST(Demons, ConstantImagesGiveZeroField) {
  const DisplacementField f = register_elastic(Image(48, 48, 1, 0.3), Image(48, 48, 1, 0.7));
  EXPECT_EQ(f.max_magnitude(), 0.0);
  EXPECT_THROW(register_elastic(Image(48, 48, 1), Image(40, 48, 1)), InvalidArgument);
  DemonsParams bad;
  bad.stop_tolerance = 5.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Demons, BumpFieldRecovery) {
  const int n = 256;
  const Image moving = gray_texture(n, n, 7);
  const DisplacementField truth = rftest::bump_field(n, n, {{128, 128, 24, 2.8, -2.8}});
  ASSERT_NEAR(truth.max_magnitude(), 4.0, 0.05);
  const Image fixed = warp_displacement(moving, truth).image;
  DemonsTrace trace;
  const DisplacementField est = register_elastic(moving, fixed, {}, &trace);
  double e0 = 0.0, e1 = 0.0;
  for (std::size_t i = 0; i < truth.vectors().size(); ++i) {
    const Vec2 t = truth.vectors()[i], e = est.vectors()[i];
    e0 += std::hypot(t.x, t.y);
    e1 += std::hypot(t.x - e.x, t.y - e.y);
  }
  EXPECT_LE(e1, 0.3 * e0);
  std::printf("endpoint error reduction %.3f\n", 1 - e1 / e0);
  // Compared over pixels the estimated warp could sample.
  const WarpResult warped = warp_displacement(moving, est);
  double before = 0.0, after = 0.0;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      if (!warped.valid.at(x, y)) continue;
      before += std::pow(moving.at(x, y) - fixed.at(x, y), 2);
      after += std::pow(warped.image.at(x, y) - fixed.at(x, y), 2);
    }
  }
  EXPECT_GT(warped.valid.count(), 0.95 * n * n);
  EXPECT_LT(after, before);
  for (const DemonsIteration& it : trace.iterations) EXPECT_LE(it.max_step, 2.0 + 1e-12);
}

TEST(Motion, IdenticalImages) {
  const Image img = gray_texture(128, 128, 8);
  const MotionReport r = alignment_residual(img, img, 32);
  EXPECT_EQ(r.global_peak_x, 0);
  EXPECT_EQ(r.global_peak_y, 0);
  EXPECT_NEAR(r.global_magnitude, 0.0, 1e-9);
  EXPECT_EQ(r.blocks.size(), 16u);
  EXPECT_NEAR(r.max_block_shift, 0.0, 1e-9);
  EXPECT_THROW(alignment_residual(Image(16, 16, 1), Image(16, 16, 1), 32), InvalidArgument);
}

TEST(Motion, IntegerShiftExact) {
  const Image big = gray_texture(160, 160, 9);
  const Image a = crop(big, {10, 10, 128, 128});
  const Image b = crop(big, {8, 13, 128, 128});  // b(p) = a(p - (2,-3))
  const MotionReport r = alignment_residual(a, b, 32);
  EXPECT_EQ(r.global_peak_x, 2);
  EXPECT_EQ(r.global_peak_y, -3);
  EXPECT_NEAR(r.global_shift.x, 2.0, 0.05);
  EXPECT_NEAR(r.global_shift.y, -3.0, 0.05);
}

TEST(Motion, LocalBumpOnly) {
  const int n = 256;
  const Image moving = gray_texture(n, n, 7);
  const Image fixed =
      warp_displacement(moving, rftest::bump_field(n, n, {{128, 128, 24, 2.8, -2.8}})).image;
  const MotionReport r = alignment_residual(moving, fixed, 32);
  EXPECT_LT(r.global_magnitude, 0.5);
  EXPECT_GT(r.max_block_shift, 1.0);
}
