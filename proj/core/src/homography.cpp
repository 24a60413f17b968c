#include "rainforge/homography.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "rainforge/error.h"
#include "rainforge/random.h"

namespace rainforge {

namespace {

struct Normalizer {
  double cx = 0, cy = 0, s = 1;

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d t;
    t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
    return t;
  }
};

// Translates the centroid to 0 and scales RMS distance to sqrt(2).
Normalizer make_normalizer(std::span<const Vec2> pts) {
  Normalizer n;
  for (const Vec2& p : pts) {
    n.cx += p.x;
    n.cy += p.y;
  }
  n.cx /= static_cast<double>(pts.size());
  n.cy /= static_cast<double>(pts.size());
  double ms = 0.0;
  for (const Vec2& p : pts) ms += (p.x - n.cx) * (p.x - n.cx) + (p.y - n.cy) * (p.y - n.cy);
  ms /= static_cast<double>(pts.size());
  if (ms < 1e-24) throw DegenerateError("coincident points");
  n.s = std::sqrt(2.0 / ms);
  return n;
}

bool has_collinear_triple(std::span<const Vec2> p, const Normalizer& n) {
  auto norm = [&](const Vec2& v) { return Vec2{(v.x - n.cx) * n.s, (v.y - n.cy) * n.s}; };
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j)
      for (std::size_t k = j + 1; k < p.size(); ++k) {
        const Vec2 a = norm(p[i]), b = norm(p[j]), c = norm(p[k]);
        const double area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        if (std::abs(area) < 1e-6) return true;
      }
  return false;
}

}  // namespace

Homography solve_homography_dlt(std::span<const Correspondence> corrs) {
  const std::size_t n = corrs.size();
  if (n < 4) throw InvalidArgument("homography needs at least 4 correspondences");
  std::vector<Vec2> src(n), dst(n);
  for (std::size_t i = 0; i < n; ++i) {
    src[i] = corrs[i].source;
    dst[i] = corrs[i].target;
  }
  const Normalizer ns = make_normalizer(src);
  const Normalizer nd = make_normalizer(dst);
  if (n == 4 && (has_collinear_triple(src, ns) || has_collinear_triple(dst, nd))) {
    throw DegenerateError("collinear points in minimal sample");
  }

  Eigen::MatrixXd a(2 * n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = (src[i].x - ns.cx) * ns.s;
    const double y = (src[i].y - ns.cy) * ns.s;
    const double u = (dst[i].x - nd.cx) * nd.s;
    const double v = (dst[i].y - nd.cy) * nd.s;
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::VectorXd h;
  if (n == 4) {
    // Square up the 8x9 system so the SVD exposes the full null space.
    Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(9, 9);
    sq.topRows(8) = a;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sq, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv(7) < 1e-10 * sv(0)) throw DegenerateError("degenerate correspondence configuration");
    h = svd.matrixV().col(8);
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv(7) < 1e-10 * sv(0)) throw DegenerateError("degenerate correspondence configuration");
    h = svd.matrixV().col(8);
  }
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Eigen::Matrix3d full = nd.matrix().inverse() * hn * ns.matrix();
  Homography::Matrix m{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m[r * 3 + c] = full(r, c);
  return Homography(m);
}

double symmetric_transfer_error(const Homography& h, const Correspondence& c) {
  return std::sqrt([&] {
    Vec2 fwd, bwd;
    const Homography inv = h.inverse();
    if (!h.try_apply(c.source, fwd) || !inv.try_apply(c.target, bwd)) {
      return std::numeric_limits<double>::infinity();
    }
    return (fwd.x - c.target.x) * (fwd.x - c.target.x) + (fwd.y - c.target.y) * (fwd.y - c.target.y) +
           (bwd.x - c.source.x) * (bwd.x - c.source.x) + (bwd.y - c.source.y) * (bwd.y - c.source.y);
  }());
}

std::size_t RansacResult::inlier_count() const {
  return static_cast<std::size_t>(std::count(inlier_flags.begin(), inlier_flags.end(), true));
}

namespace {

struct Score {
  std::size_t inliers = 0;
  double mean_error = std::numeric_limits<double>::infinity();
};

// Symmetric errors computed with a precomputed inverse.
Score score_model(const Homography& h, const Homography& inv,
                  std::span<const Correspondence> corrs, double threshold,
                  std::vector<bool>* flags) {
  Score s;
  double sum = 0.0;
  if (flags) flags->assign(corrs.size(), false);
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    Vec2 fwd, bwd;
    if (!h.try_apply(corrs[i].source, fwd) || !inv.try_apply(corrs[i].target, bwd)) continue;
    const double e = std::sqrt(
        (fwd.x - corrs[i].target.x) * (fwd.x - corrs[i].target.x) +
        (fwd.y - corrs[i].target.y) * (fwd.y - corrs[i].target.y) +
        (bwd.x - corrs[i].source.x) * (bwd.x - corrs[i].source.x) +
        (bwd.y - corrs[i].source.y) * (bwd.y - corrs[i].source.y));
    if (e <= threshold) {
      ++s.inliers;
      sum += e;
      if (flags) (*flags)[i] = true;
    }
  }
  if (s.inliers > 0) s.mean_error = sum / static_cast<double>(s.inliers);
  return s;
}

bool better(const Score& a, const Score& b) {
  if (a.inliers != b.inliers) return a.inliers > b.inliers;
  return a.mean_error < b.mean_error;
}

double forward_error_mean(const Homography& h, std::span<const Correspondence> corrs,
                          const std::vector<bool>& flags) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (!flags[i]) continue;
    const Vec2 p = h.apply(corrs[i].source);
    sum += std::hypot(p.x - corrs[i].target.x, p.y - corrs[i].target.y);
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

int required_iterations(double inlier_ratio, double confidence, int max_iterations) {
  if (inlier_ratio >= 1.0) return 1;
  if (inlier_ratio <= 0.0) return max_iterations;
  const double p_good = std::pow(inlier_ratio, 4);
  const double denom = std::log(1.0 - p_good);
  if (denom >= 0.0 || !std::isfinite(denom)) return max_iterations;
  const double n = std::ceil(std::log(1.0 - confidence) / denom);
  if (!std::isfinite(n) || n > max_iterations) return max_iterations;
  return std::max(1, static_cast<int>(n));
}

}  // namespace

RansacResult estimate_homography_ransac(std::span<const Correspondence> corrs,
                                        const RansacParams& params) {
  const std::size_t n = corrs.size();
  if (n < 4) throw InvalidArgument("RANSAC needs at least 4 correspondences");
  if (!(params.inlier_threshold > 0) || params.max_iterations < 1 ||
      !(params.confidence > 0 && params.confidence < 1)) {
    throw InvalidArgument("invalid RANSAC parameters");
  }

  Rng rng(params.seed);
  Score best;
  Homography best_h;
  bool found = false;
  int bound = params.max_iterations;
  int iter = 0;
  std::array<Correspondence, 4> sample;
  for (; iter < bound && iter < params.max_iterations; ++iter) {
    std::array<std::size_t, 4> idx{};
    for (int k = 0; k < 4; ++k) {
      bool dup;
      do {
        idx[k] = static_cast<std::size_t>(rng.uniform_index(n));
        dup = std::find(idx.begin(), idx.begin() + k, idx[k]) != idx.begin() + k;
      } while (dup);
      sample[k] = corrs[idx[k]];
    }
    Homography h;
    Homography inv;
    try {
      h = solve_homography_dlt(sample);
      inv = h.inverse();
    } catch (const DegenerateError&) {
      continue;
    }
    const Score s = score_model(h, inv, corrs, params.inlier_threshold, nullptr);
    if (s.inliers >= 4 && (!found || better(s, best))) {
      best = s;
      best_h = h;
      found = true;
      bound = required_iterations(static_cast<double>(s.inliers) / static_cast<double>(n),
                                  params.confidence, params.max_iterations);
    }
  }
  if (!found) throw DegenerateError("RANSAC found no model with at least 4 inliers");

  RansacResult result;
  result.iterations_used = iter;
  std::vector<bool> flags;
  score_model(best_h, best_h.inverse(), corrs, params.inlier_threshold, &flags);

  // Refit on the inlier set until it stops changing. A refit that loses
  // inliers is discarded.
  for (int round = 0; round < 5; ++round) {
    std::vector<Correspondence> inliers;
    for (std::size_t i = 0; i < n; ++i)
      if (flags[i]) inliers.push_back(corrs[i]);
    Homography refit;
    try {
      refit = solve_homography_dlt(inliers);
    } catch (const DegenerateError&) {
      break;
    }
    std::vector<bool> refit_flags;
    const Score s = score_model(refit, refit.inverse(), corrs, params.inlier_threshold, &refit_flags);
    if (s.inliers < best.inliers) break;
    const bool same_set = refit_flags == flags;
    best = s;
    best_h = refit;
    flags = std::move(refit_flags);
    if (same_set) break;
  }

  result.homography = best_h;
  result.inlier_flags = flags;
  result.mean_reprojection_error = forward_error_mean(best_h, corrs, flags);
  return result;
}

double corner_error(const Homography& estimated, const Homography& truth, int width, int height) {
  const Vec2 corners[4] = {{0, 0},
                           {static_cast<double>(width - 1), 0},
                           {0, static_cast<double>(height - 1)},
                           {static_cast<double>(width - 1), static_cast<double>(height - 1)}};
  double worst = 0.0;
  for (const Vec2& c : corners) {
    const Vec2 a = estimated.apply(c);
    const Vec2 b = truth.apply(c);
    worst = std::max(worst, std::hypot(a.x - b.x, a.y - b.y));
  }
  return worst;
}

}  // namespace rainforge
