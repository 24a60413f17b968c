#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rainforge/criteria.h"
#include "rainforge/image.h"

namespace rainforge {

inline constexpr int kManifestVersion = 1;

enum class PairStatus { kPending, kAutoRejected, kNeedsReview, kAccepted, kRejected };

std::string to_string(PairStatus s);
PairStatus status_from_string(const std::string& s);

struct MetricsReport {
  double psnr_db = 0.0;  // kInfinitePsnr for identical regions
  double ssim = 0.0;
  std::optional<double> ms_ssim;  // absent when the region is too small
  Rect region;
};

// {psnr_db, ssim, ms_ssim, region:{x,y,w,h}}; infinite PSNR is written as
// the string "inf".
nlohmann::json to_json(const MetricsReport& m);
MetricsReport metrics_from_json(const nlohmann::json& j);

enum class Decision { kAccept, kReject };

std::string to_string(Decision d);
// Throws InvalidArgument for anything but "accept" / "reject".
Decision decision_from_string(const std::string& s);

struct ReviewDecision {
  Decision decision = Decision::kAccept;
  std::string note;
  std::string decided_at;  // ISO-8601 UTC with milliseconds

  friend bool operator==(const ReviewDecision&, const ReviewDecision&) = default;
};

struct CurationRecord {
  std::string pair_id;
  std::string scene_id;
  std::string rainy_path;
  std::string clean_path;
  std::optional<std::string> rainy_time;
  std::optional<std::string> clean_time;
  Rect crop;
  std::optional<std::string> mask_ref;
  std::optional<CriteriaReport> criteria;
  CorrectionMode correction_mode = CorrectionMode::kNone;
  std::optional<Homography> homography;  // maps clean to rainy coordinates
  std::optional<std::string> field_ref;
  std::optional<std::string> aligned_ref;
  std::optional<MetricsReport> metrics_pre;
  std::optional<MetricsReport> metrics_post;
  PairStatus status = PairStatus::kPending;
  std::optional<ReviewDecision> review;
  std::vector<std::string> diagnostics;
  nlohmann::json settings = nlohmann::json::object();
  std::optional<std::string> updated_at;

  // Throws InvalidArgument when the record breaks its invariants.
  void validate() const;
};

nlohmann::json to_json(const CurationRecord& r);
CurationRecord record_from_json(const nlohmann::json& j);
// One manifest line, without the trailing newline.
std::string serialize_record(const CurationRecord& r);

// Latest state per pair id, in order of first appearance.
struct ManifestState {
  std::vector<CurationRecord> records;
  std::map<std::string, std::size_t> index;

  const CurationRecord* find(const std::string& pair_id) const;
};

// Parses JSON lines; blank lines are skipped; a malformed line raises
// ParseError with its line number; later records supersede earlier ones.
ManifestState parse_manifest(const std::string& text, const std::string& source = "<manifest>");
ManifestState load_manifest(const std::filesystem::path& path);

// Serialized latest states, one per line.
std::string serialize_state(const ManifestState& state);

// Append-only writer; one instance per manifest file serializes all writes
// made through it.
class ManifestWriter {
 public:
  explicit ManifestWriter(std::filesystem::path path);

  const std::filesystem::path& path() const { return path_; }

  void append(const CurationRecord& record);

  // Applies a review to the latest state of pair_id and appends the updated
  // record. Identical repeat decisions leave the manifest unchanged.
  // Throws NotFoundError for unknown ids and ConflictError for auto-rejected
  // pairs. decided_at is forced to be later than the record's previous
  // update.
  CurationRecord apply_review(const std::string& pair_id, Decision decision,
                              const std::string& note, const std::string& decided_at);

  ManifestState load() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
};

// Current UTC time as YYYY-MM-DDThh:mm:ss.mmmZ.
std::string utc_now_iso();

}  // namespace rainforge
