#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rainforge/criteria.h"

namespace rainforge {

struct PairCandidate {
  std::string pair_id;   // rainy file stem
  std::string scene_id;  // stem without timestamp, or the CSV scene column
  std::filesystem::path rainy_path;
  std::filesystem::path clean_path;
  CaptureTimes times;
};

struct IngestResult {
  std::vector<PairCandidate> candidates;  // sorted by pair_id
  std::vector<std::string> errors;        // unmatched files, bad CSV rows
};

// Pairing by shared stem: files are keyed by their stem minus any
// `_YYYYMMDDThhmmss` suffix. Each rainy frame pairs with the clean frame of
// the same key that is closest in capture time. With a CSV map, each row is
// `rainy,clean[,scene]` relative to the two directories; a header row whose
// first field is "rainy" is skipped.
IngestResult ingest_pairs(const std::filesystem::path& rainy_dir,
                          const std::filesystem::path& clean_dir,
                          const std::optional<std::filesystem::path>& csv_map = std::nullopt);

}  // namespace rainforge
