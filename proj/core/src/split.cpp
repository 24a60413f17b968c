#include "rainforge/split.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rainforge/error.h"
#include "rainforge/random.h"

namespace rainforge {

namespace {

constexpr std::array<const char*, 3> kSplitNames{"train", "val", "test"};

void validate_ratios(const SplitRatios& ratios) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!std::isfinite(r) || r <= 0.0) throw InvalidArgument("split ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("split ratios must sum to 1");
}

}  // namespace

std::string to_string(Split s) { return kSplitNames[static_cast<int>(s)]; }

Split split_from_string(const std::string& s) {
  for (int i = 0; i < 3; ++i) {
    if (s == kSplitNames[i]) return static_cast<Split>(i);
  }
  throw InvalidArgument("unknown split '" + s + "'");
}

std::array<std::size_t, 3> SplitAssignment::pair_counts() const {
  std::array<std::size_t, 3> n{};
  for (const auto& [id, s] : pairs) ++n[static_cast<int>(s)];
  return n;
}

std::array<std::size_t, 3> SplitAssignment::scene_counts() const {
  std::array<std::size_t, 3> n{};
  for (const auto& [id, s] : scenes) ++n[static_cast<int>(s)];
  return n;
}

nlohmann::json to_json(const SplitAssignment& a) {
  nlohmann::json pairs = nlohmann::json::object();
  for (const auto& [id, s] : a.pairs) pairs[id] = to_string(s);
  nlohmann::json scenes = nlohmann::json::object();
  for (const auto& [id, s] : a.scenes) scenes[id] = to_string(s);
  const auto pc = a.pair_counts();
  return {{"seed", a.seed},
          {"ratios", a.ratios},
          {"pairs", pairs},
          {"scenes", scenes},
          {"counts", {{"train", pc[0]}, {"val", pc[1]}, {"test", pc[2]}}},
          {"warnings", a.warnings}};
}

SplitAssignment split_from_json(const nlohmann::json& j) {
  SplitAssignment a;
  a.seed = j.at("seed").get<std::uint64_t>();
  a.ratios = j.at("ratios").get<SplitRatios>();
  for (const auto& [id, s] : j.at("pairs").items()) a.pairs[id] = split_from_string(s.get<std::string>());
  for (const auto& [id, s] : j.at("scenes").items()) {
    a.scenes[id] = split_from_string(s.get<std::string>());
  }
  if (j.contains("warnings")) a.warnings = j.at("warnings").get<std::vector<std::string>>();
  return a;
}

std::array<std::size_t, 3> largest_remainder(std::size_t total, const SplitRatios& ratios) {
  validate_ratios(ratios);
  std::array<std::size_t, 3> out{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double quota = ratios[i] * static_cast<double>(total);
    out[i] = static_cast<std::size_t>(std::floor(quota + 1e-9));
    rem[i] = quota - static_cast<double>(out[i]);
    assigned += out[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
  for (int k = 0; assigned < total; k = (k + 1) % 3, ++assigned) ++out[order[k]];
  return out;
}

SplitAssignment split_scenes(const std::map<std::string, std::size_t>& scene_frames,
                             const SplitRatios& ratios, std::uint64_t seed) {
  validate_ratios(ratios);
  if (scene_frames.empty()) throw InvalidArgument("no scenes to split");

  SplitAssignment out;
  out.seed = seed;
  out.ratios = ratios;
  if (scene_frames.size() < 3) {
    out.warnings.push_back("only " + std::to_string(scene_frames.size()) +
                           " scene(s) for 3 splits; some splits stay empty");
  }

  std::vector<std::pair<std::string, std::size_t>> scenes(scene_frames.begin(), scene_frames.end());
  Rng rng(seed);
  for (std::size_t i = scenes.size(); i > 1; --i) {
    std::swap(scenes[i - 1], scenes[rng.uniform_index(i)]);
  }
  std::stable_sort(scenes.begin(), scenes.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::size_t total = 0;
  for (const auto& s : scenes) total += s.second;
  const auto target = largest_remainder(total, ratios);
  std::array<long long, 3> filled{};
  for (const auto& [id, frames] : scenes) {
    int best = 0;
    for (int k = 1; k < 3; ++k) {
      if (static_cast<long long>(target[k]) - filled[k] >
          static_cast<long long>(target[best]) - filled[best]) {
        best = k;
      }
    }
    filled[best] += static_cast<long long>(frames);
    out.scenes[id] = static_cast<Split>(best);
  }
  return out;
}

SplitAssignment split_dataset(const ManifestState& manifest, const SplitRatios& ratios,
                              std::uint64_t seed) {
  std::map<std::string, std::size_t> frames;
  for (const CurationRecord& r : manifest.records) {
    if (r.status == PairStatus::kAccepted) ++frames[r.scene_id];
  }
  if (frames.empty()) throw InvalidArgument("manifest has no accepted pairs to split");
  SplitAssignment out = split_scenes(frames, ratios, seed);
  for (const CurationRecord& r : manifest.records) {
    if (r.status == PairStatus::kAccepted) out.pairs[r.pair_id] = out.scenes.at(r.scene_id);
  }
  return out;
}

}  // namespace rainforge
