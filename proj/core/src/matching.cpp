#include "rainforge/matching.h"

#include <cmath>
#include <limits>

#include "rainforge/error.h"

namespace rainforge {

namespace {

double squared_distance(const Keypoint& a, const Keypoint& b) {
  double s = 0.0;
  for (int i = 0; i < kDescriptorSize; ++i) {
    const double d = static_cast<double>(a.descriptor[i]) - b.descriptor[i];
    s += d * d;
  }
  return s;
}

}  // namespace

std::vector<Correspondence> match_descriptors(const std::vector<Keypoint>& a,
                                              const std::vector<Keypoint>& b, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidArgument("ratio must lie in (0, 1)");
  if (a.empty() || b.empty()) return {};

  // Best claim per target: index into a, or -1.
  std::vector<int> claim(b.size(), -1);
  std::vector<double> claim_score(b.size(), std::numeric_limits<double>::infinity());
  std::vector<double> scores(a.size(), 0.0);
  std::vector<int> nearest_of(a.size(), -1);

  for (std::size_t i = 0; i < a.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    double second = std::numeric_limits<double>::infinity();
    int best_j = -1;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d = squared_distance(a[i], b[j]);
      if (d < best) {
        second = best;
        best = d;
        best_j = static_cast<int>(j);
      } else if (d < second) {
        second = d;
      }
    }
    double score;
    if (b.size() == 1) {
      score = 0.0;
    } else if (second == 0.0) {
      score = 1.0;
    } else {
      score = std::sqrt(best) / std::sqrt(second);
    }
    if (!(score < ratio)) continue;
    scores[i] = score;
    nearest_of[i] = best_j;
    // Strictly lower wins, so earlier a-indices keep ties.
    if (score < claim_score[best_j]) {
      claim_score[best_j] = score;
      claim[best_j] = static_cast<int>(i);
    }
  }

  std::vector<Correspondence> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int j = nearest_of[i];
    if (j < 0 || claim[j] != static_cast<int>(i)) continue;
    out.push_back({{a[i].x, a[i].y}, {b[j].x, b[j].y}, scores[i], static_cast<int>(i), j});
  }
  return out;
}

}  // namespace rainforge
