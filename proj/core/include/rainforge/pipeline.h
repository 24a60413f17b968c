#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rainforge/config.h"
#include "rainforge/criteria.h"
#include "rainforge/ingest.h"
#include "rainforge/manifest.h"
#include "rainforge/metrics.h"

namespace rainforge {

struct AlignmentResult {
  CorrectionMode mode = CorrectionMode::kNone;
  std::optional<Homography> homography;  // clean -> rainy coordinates
  std::optional<DisplacementField> field;
  Image aligned;      // clean frame resampled onto the rainy geometry
  RegionMask valid;   // pixels of `aligned` sampled inside the clean frame
  MotionReport motion_before;
  std::optional<MotionReport> motion_after_homography;
  std::size_t matches = 0;
  std::size_t inliers = 0;
  bool failed = false;
  std::vector<std::string> diagnostics;
};

// Aligns clean onto rainy. With no forced mode the mode is selected from the
// measured motion, re-measured after the homography step.
AlignmentResult align_pair(const Image& rainy, const Image& clean,
                           std::optional<CorrectionMode> forced,
                           const CriteriaThresholds& thresholds,
                           const AlignmentSettings& settings, std::uint64_t seed);

// PSNR, SSIM and (when the region is large enough) MS-SSIM over a region.
MetricsReport measure_region(const Image& a, const Image& b, const Rect& region);

// Per-pair seed derived from the run seed and the pair id.
std::uint64_t pair_seed(std::uint64_t seed, const std::string& pair_id);

// Artifacts of a pair live under output_root/artifacts/<pair_id>/.
std::filesystem::path artifact_dir(const std::filesystem::path& output_root,
                                   const std::string& pair_id);

// Runs one pair through assessment, cropping, correction and metrics, and
// writes its artifacts. Never touches the input files.
CurationRecord run_pair(const PairCandidate& pair, const PipelineConfig& config);

struct PipelineSummary {
  std::vector<CurationRecord> records;  // newly processed, sorted by pair_id
  std::vector<std::string> ingest_errors;
  std::size_t skipped = 0;  // already present in the manifest
};

// Ingests the corpus, processes pairs on config.threads workers and appends
// records to the manifest in pair_id order. Pairs already in the manifest are
// skipped.
PipelineSummary run_pipeline(const PipelineConfig& config);

}  // namespace rainforge
