#pragma once

#include <array>
#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "rainforge/image.h"
#include "rainforge/manifest.h"
#include "rainforge/split.h"

namespace rainforge {

struct PairImages {
  Image rainy;    // cropped rainy frame
  Image clean;    // cropped clean frame, unaligned
  Image aligned;  // clean frame after correction (clean when uncorrected)
};

// Reads a record's artifacts from root (the pipeline output root). Falls
// back to cropping the source frames when artifacts are missing.
PairImages load_pair_images(const CurationRecord& record, const std::filesystem::path& root);

struct ExportSummary {
  std::array<std::size_t, 3> counts{};  // pairs per split
  nlohmann::json indices;               // split name -> index document
};

// Writes out/{train,val,test}/{scene}/{pair_id}_{rainy,clean}.png plus
// out/{split}/index.json for every accepted pair. The exported clean frame is
// the aligned one. Throws InvalidArgument when an accepted pair has no split.
ExportSummary export_dataset(const ManifestState& manifest, const SplitAssignment& split,
                             const std::filesystem::path& artifact_root,
                             const std::filesystem::path& out_dir);

}  // namespace rainforge
