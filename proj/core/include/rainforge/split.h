#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rainforge/manifest.h"

namespace rainforge {

enum class Split { kTrain, kVal, kTest };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

using SplitRatios = std::array<double, 3>;  // train, val, test

// Frame proportions of the published dataset (26,124 / 3,300 / 2,100).
inline constexpr SplitRatios kPaperSplitRatios{0.829, 0.105, 0.066};

struct SplitAssignment {
  std::map<std::string, Split> pairs;   // pair_id -> split
  std::map<std::string, Split> scenes;  // scene_id -> split
  std::uint64_t seed = 0;
  SplitRatios ratios{};
  std::vector<std::string> warnings;

  std::array<std::size_t, 3> pair_counts() const;
  std::array<std::size_t, 3> scene_counts() const;
};

nlohmann::json to_json(const SplitAssignment& a);
SplitAssignment split_from_json(const nlohmann::json& j);

// Largest-remainder integer targets summing to total.
std::array<std::size_t, 3> largest_remainder(std::size_t total, const SplitRatios& ratios);

// Scene-level assignment. Frame targets come from largest_remainder over the
// total frame count; scenes are shuffled with the seed, ordered by size
// (largest first) and each goes to the split furthest below its target.
// Throws InvalidArgument for bad ratios or no scenes; fewer scenes than
// splits only warns.
SplitAssignment split_scenes(const std::map<std::string, std::size_t>& scene_frames,
                             const SplitRatios& ratios, std::uint64_t seed);

// Splits the accepted pairs of a manifest by scene.
SplitAssignment split_dataset(const ManifestState& manifest, const SplitRatios& ratios,
                              std::uint64_t seed);

}  // namespace rainforge
