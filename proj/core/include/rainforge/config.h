#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "rainforge/demons.h"
#include "rainforge/homography.h"
#include "rainforge/image.h"
#include "rainforge/keypoints.h"

namespace rainforge {

// Key/value configuration file.
//
//   # comment                      (also after values)
//   [section]                      prefixes following keys: section.key
//   key = 1.5                      number
//   key = true | false             boolean
//   key = "text"                   string with \" and \\ escapes
//   key = [1, 2, 3]                array of numbers
//
// Keys match [A-Za-z0-9_.-]+. Duplicate keys are errors. Errors carry the
// file name and 1-based line.
using ConfigValue = std::variant<double, bool, std::string, std::vector<double>>;

struct ConfigEntry {
  ConfigValue value;
  int line = 0;
};

using ConfigMap = std::map<std::string, ConfigEntry>;

ConfigMap parse_config(const std::string& text, const std::string& source = "<config>");

struct CriteriaThresholds {
  double t_global = 1.0;             // px
  double t_local = 0.75;             // px
  double illumination_shift = 0.05;  // mean luminance
  double max_time_delta_minutes = 40.0;
  double exposure_p1_max = 0.5;    // reject when 1st percentile is above
  double exposure_p99_min = 0.1;   // reject when 99th percentile is below
  double noise_max = 0.3;          // high-frequency energy ratio
  int block_size = 48;
};

struct AlignmentSettings {
  KeypointParams keypoints;
  double match_ratio = 0.75;
  RansacParams ransac{.inlier_threshold = 1.5};
  DemonsParams demons;
};

struct PipelineConfig {
  std::filesystem::path rainy_dir;
  std::filesystem::path clean_dir;
  std::filesystem::path pair_map;  // optional CSV
  std::filesystem::path output_root;
  std::filesystem::path manifest;  // defaults to output_root/manifest.jsonl
  std::uint64_t seed = 0;
  int threads = 1;
  CriteriaThresholds thresholds;
  AlignmentSettings alignment;
  std::map<std::string, std::filesystem::path> masks;       // scene -> PNG, nonzero kept
  std::map<std::string, std::vector<Rect>> excluded_rects;  // scene -> removed rectangles

  // Relative paths are resolved against base_dir.
  static PipelineConfig from_map(const ConfigMap& map, const std::string& source,
                                 const std::filesystem::path& base_dir);
  static PipelineConfig load(const std::filesystem::path& path);

  // Thresholds and alignment settings, recorded in every manifest record.
  nlohmann::json settings_json() const;
};

}  // namespace rainforge
