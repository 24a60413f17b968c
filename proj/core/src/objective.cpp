#include "rainforge/objective.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rainforge/error.h"

namespace rainforge {

namespace {

constexpr double kMinNorm = 1e-12;

double dot(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double checked_norm(std::span<const double> u) {
  const double n = std::sqrt(dot(u, u));
  if (!std::isfinite(n)) throw InvalidArgument("feature vector has non-finite values");
  if (n <= kMinNorm) throw InvalidArgument("feature vector has zero norm");
  return n;
}

void require_same_length(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw InvalidArgument("feature vectors differ in length");
}

// Denominator logits; index 0 is the positive when it is included.
struct Logits {
  std::vector<double> values;
  bool has_positive = false;
  double positive = 0.0;
  double lse = 0.0;
};

Logits pair_logits(std::span<const double> anchor, std::span<const double> positive,
                   const std::vector<FeatureVector>& negatives, const RobustLossParams& p) {
  if (!(p.temperature > 0)) throw InvalidArgument("temperature must be positive");
  if (!p.include_positive_in_denominator && negatives.empty()) {
    throw InvalidArgument("negatives-only denominator needs at least one negative");
  }
  Logits l;
  l.positive = cosine_similarity(anchor, positive) / p.temperature;
  if (p.include_positive_in_denominator) {
    l.values.push_back(l.positive);
    l.has_positive = true;
  }
  for (const FeatureVector& k : negatives) {
    l.values.push_back(cosine_similarity(anchor, k) / p.temperature);
  }
  const double m = *std::max_element(l.values.begin(), l.values.end());
  double s = 0.0;
  for (double v : l.values) s += std::exp(v - m);
  l.lse = m + std::log(s);
  return l;
}

void axpy(double a, const FeatureVector& x, FeatureVector& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

}  // namespace

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  require_same_length(u, v);
  const double nu = checked_norm(u);
  const double nv = checked_norm(v);
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

CosineGradient cosine_similarity_gradient(std::span<const double> u, std::span<const double> v) {
  require_same_length(u, v);
  const double nu = checked_norm(u);
  const double nv = checked_norm(v);
  const double cos = dot(u, v) / (nu * nv);
  CosineGradient g{FeatureVector(u.size()), FeatureVector(v.size())};
  for (std::size_t i = 0; i < u.size(); ++i) {
    g.du[i] = v[i] / (nu * nv) - cos * u[i] / (nu * nu);
    g.dv[i] = u[i] / (nu * nv) - cos * v[i] / (nv * nv);
  }
  return g;
}

FeatureVector condense_features(const FeatureMap& map) {
  if (map.channels < 1) throw InvalidArgument("feature map needs at least one channel");
  if (map.height < 2 || map.width < 2) throw InvalidArgument("feature map spatial dims must be >= 2");
  if (map.values.size() != static_cast<std::size_t>(map.channels) * map.height * map.width) {
    throw InvalidArgument("feature map size mismatch");
  }
  const int ys[3] = {0, (map.height + 1) / 2, map.height};
  const int xs[3] = {0, (map.width + 1) / 2, map.width};
  FeatureVector out;
  out.reserve(static_cast<std::size_t>(map.channels) * 4);
  for (int c = 0; c < map.channels; ++c)
    for (int cy = 0; cy < 2; ++cy)
      for (int cx = 0; cx < 2; ++cx) {
        double s = 0.0;
        for (int y = ys[cy]; y < ys[cy + 1]; ++y)
          for (int x = xs[cx]; x < xs[cx + 1]; ++x) s += map.at(c, y, x);
        out.push_back(s / ((ys[cy + 1] - ys[cy]) * (xs[cx + 1] - xs[cx])));
      }
  return out;
}

double rain_robust_pair_loss(std::span<const double> anchor, std::span<const double> positive,
                             const std::vector<FeatureVector>& negatives,
                             const RobustLossParams& params) {
  const Logits l = pair_logits(anchor, positive, negatives, params);
  return l.lse - l.positive;
}

PairLossGradient rain_robust_pair_loss_gradient(std::span<const double> anchor,
                                                std::span<const double> positive,
                                                const std::vector<FeatureVector>& negatives,
                                                const RobustLossParams& params) {
  const Logits l = pair_logits(anchor, positive, negatives, params);
  const double inv_t = 1.0 / params.temperature;
  const std::size_t dim = anchor.size();
  PairLossGradient g{FeatureVector(dim, 0.0), FeatureVector(dim, 0.0), {}};

  const CosineGradient gp = cosine_similarity_gradient(anchor, positive);
  double pos_weight = -1.0;
  std::size_t offset = 0;
  if (l.has_positive) {
    pos_weight += std::exp(l.values[0] - l.lse);
    offset = 1;
  }
  axpy(pos_weight * inv_t, gp.du, g.anchor);
  axpy(pos_weight * inv_t, gp.dv, g.positive);

  for (std::size_t k = 0; k < negatives.size(); ++k) {
    const double prob = std::exp(l.values[k + offset] - l.lse);
    const CosineGradient gk = cosine_similarity_gradient(anchor, negatives[k]);
    axpy(prob * inv_t, gk.du, g.anchor);
    FeatureVector dn(dim, 0.0);
    axpy(prob * inv_t, gk.dv, dn);
    g.negatives.push_back(std::move(dn));
  }
  return g;
}

namespace {

void check_batch(const std::vector<FeaturePair>& batch, const RobustLossParams& params) {
  if (batch.empty()) throw InvalidArgument("batch is empty");
  if (batch.size() < 2 && !params.include_positive_in_denominator) {
    throw InvalidArgument("negatives-only denominator needs a batch of at least 2 pairs");
  }
}

// Negatives for pair i, ordered (rainy_j, clean_j) for j != i.
std::vector<FeatureVector> batch_negatives(const std::vector<FeaturePair>& batch, std::size_t i) {
  std::vector<FeatureVector> out;
  out.reserve(2 * (batch.size() - 1));
  for (std::size_t j = 0; j < batch.size(); ++j) {
    if (j == i) continue;
    out.push_back(batch[j].rainy);
    out.push_back(batch[j].clean);
  }
  return out;
}

}  // namespace

double rain_robust_batch_loss(const std::vector<FeaturePair>& batch,
                              const RobustLossParams& params) {
  check_batch(batch, params);
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto negatives = batch_negatives(batch, i);
    sum += rain_robust_pair_loss(batch[i].clean, batch[i].rainy, negatives, params);
    sum += rain_robust_pair_loss(batch[i].rainy, batch[i].clean, negatives, params);
  }
  return sum / (2.0 * static_cast<double>(batch.size()));
}

std::vector<FeaturePair> rain_robust_batch_loss_gradient(const std::vector<FeaturePair>& batch,
                                                         const RobustLossParams& params) {
  check_batch(batch, params);
  std::vector<FeaturePair> grad(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    grad[i].rainy.assign(batch[i].rainy.size(), 0.0);
    grad[i].clean.assign(batch[i].clean.size(), 0.0);
  }
  const double scale = 1.0 / (2.0 * static_cast<double>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto negatives = batch_negatives(batch, i);
    for (int direction = 0; direction < 2; ++direction) {
      const bool clean_anchor = direction == 0;
      const FeatureVector& anchor = clean_anchor ? batch[i].clean : batch[i].rainy;
      const FeatureVector& positive = clean_anchor ? batch[i].rainy : batch[i].clean;
      const PairLossGradient g = rain_robust_pair_loss_gradient(anchor, positive, negatives, params);
      axpy(scale, g.anchor, clean_anchor ? grad[i].clean : grad[i].rainy);
      axpy(scale, g.positive, clean_anchor ? grad[i].rainy : grad[i].clean);
      std::size_t k = 0;
      for (std::size_t j = 0; j < batch.size(); ++j) {
        if (j == i) continue;
        axpy(scale, g.negatives[k++], grad[j].rainy);
        axpy(scale, g.negatives[k++], grad[j].clean);
      }
    }
  }
  return grad;
}

ObjectiveBreakdown full_objective(const Image& restored, const Image& truth,
                                  std::span<const double> z_clean,
                                  std::span<const double> z_rainy,
                                  const std::vector<FeatureVector>& negatives,
                                  const ObjectiveWeights& weights,
                                  const RobustLossParams& robust,
                                  const MsSsimParams& ms_ssim_params) {
  if (!(weights.l1 >= 0) || !(weights.robust >= 0)) {
    throw InvalidArgument("objective weights must be non-negative");
  }
  ObjectiveBreakdown b;
  b.ms_ssim_term = 1.0 - ms_ssim(restored, truth, ms_ssim_params);
  b.l1_term = mean_absolute_error(restored, truth);
  b.robust_term = rain_robust_pair_loss(z_clean, z_rainy, negatives, robust);
  b.total = b.ms_ssim_term + weights.l1 * b.l1_term + weights.robust * b.robust_term;
  return b;
}

double gradient_check(const VectorLoss& loss, const VectorLossGradient& gradient,
                      const std::vector<FeatureVector>& point, double epsilon) {
  if (!(epsilon > 0)) throw InvalidArgument("epsilon must be positive");
  const std::vector<FeatureVector> analytic = gradient(point);
  if (analytic.size() != point.size()) throw InvalidArgument("gradient arity mismatch");
  std::vector<FeatureVector> probe = point;
  double worst = 0.0;
  for (std::size_t v = 0; v < point.size(); ++v) {
    if (analytic[v].size() != point[v].size()) throw InvalidArgument("gradient shape mismatch");
    for (std::size_t i = 0; i < point[v].size(); ++i) {
      const double orig = probe[v][i];
      probe[v][i] = orig + epsilon;
      const double up = loss(probe);
      probe[v][i] = orig - epsilon;
      const double down = loss(probe);
      probe[v][i] = orig;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = analytic[v][i];
      if (!std::isfinite(numeric) || !std::isfinite(a)) {
        throw Error("gradient check encountered a non-finite value");
      }
      worst = std::max(worst, std::abs(a - numeric) / std::max(std::abs(numeric), 1e-8));
    }
  }
  return worst;
}

}  // namespace rainforge
