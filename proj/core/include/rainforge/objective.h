#pragma once

#include <functional>
#include <span>
#include <vector>

#include "rainforge/image.h"
#include "rainforge/metrics.h"

namespace rainforge {

using FeatureVector = std::vector<double>;

// channels x height x width, channel-major.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;

  double at(int c, int y, int x) const {
    return values[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

struct RobustLossParams {
  double temperature = 0.25;
  // Standard InfoNCE includes the positive in the denominator; false gives
  // the literal negatives-only form, which can go below zero.
  bool include_positive_in_denominator = true;
};

struct ObjectiveWeights {
  double l1 = 0.1;
  double robust = 0.1;
};

struct FeaturePair {
  FeatureVector rainy;  // z_I
  FeatureVector clean;  // z_J
};

double cosine_similarity(std::span<const double> u, std::span<const double> v);

// Mean over each channel's 2x2 grid of cells (row split at ceil(h/2), column
// split at ceil(w/2)), flattened channel-major: [c][cell_row][cell_col].
FeatureVector condense_features(const FeatureMap& map);

// -log(exp(sim(a,p)/t) / D) with D summing exp(sim(a,k)/t) over negatives
// and, when enabled, the positive. Evaluated with a max-shifted log-sum-exp.
double rain_robust_pair_loss(std::span<const double> anchor, std::span<const double> positive,
                             const std::vector<FeatureVector>& negatives,
                             const RobustLossParams& params = {});

// Mean of the 2N directed losses (z_J anchor with z_I positive and the
// reverse), each against the other 2(N-1) batch features.
double rain_robust_batch_loss(const std::vector<FeaturePair>& batch,
                              const RobustLossParams& params = {});

struct ObjectiveBreakdown {
  double ms_ssim_term = 0.0;  // 1 - MS-SSIM
  double l1_term = 0.0;       // mean |restored - truth|
  double robust_term = 0.0;
  double total = 0.0;
};

ObjectiveBreakdown full_objective(const Image& restored, const Image& truth,
                                  std::span<const double> z_clean,
                                  std::span<const double> z_rainy,
                                  const std::vector<FeatureVector>& negatives,
                                  const ObjectiveWeights& weights = {},
                                  const RobustLossParams& robust = {},
                                  const MsSsimParams& ms_ssim_params = {});

// Analytic gradients.
struct CosineGradient {
  FeatureVector du;
  FeatureVector dv;
};
CosineGradient cosine_similarity_gradient(std::span<const double> u, std::span<const double> v);

struct PairLossGradient {
  FeatureVector anchor;
  FeatureVector positive;
  std::vector<FeatureVector> negatives;
};
PairLossGradient rain_robust_pair_loss_gradient(std::span<const double> anchor,
                                                std::span<const double> positive,
                                                const std::vector<FeatureVector>& negatives,
                                                const RobustLossParams& params = {});

// Gradient with respect to every rainy and clean feature of the batch.
std::vector<FeaturePair> rain_robust_batch_loss_gradient(const std::vector<FeaturePair>& batch,
                                                         const RobustLossParams& params = {});

// Scalar function of a list of vectors, with its analytic gradient.
using VectorLoss = std::function<double(const std::vector<FeatureVector>&)>;
using VectorLossGradient =
    std::function<std::vector<FeatureVector>(const std::vector<FeatureVector>&)>;

// Central differences per coordinate; returns
// max |analytic - numeric| / max(|numeric|, 1e-8). Throws on non-finite
// values.
double gradient_check(const VectorLoss& loss, const VectorLossGradient& gradient,
                      const std::vector<FeatureVector>& point, double epsilon = 1e-5);

}  // namespace rainforge
