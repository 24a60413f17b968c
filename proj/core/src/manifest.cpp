#include "rainforge/manifest.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rainforge/error.h"
#include "rainforge/metrics.h"

namespace rainforge {

namespace {

using Json = nlohmann::json;

template <typename T, typename F>
Json optional_json(const std::optional<T>& v, F&& convert) {
  return v ? convert(*v) : Json(nullptr);
}

std::optional<std::string> optional_string(const Json& j, const char* key) {
  const Json& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<std::string>();
}

Json rect_json(const Rect& r) { return {{"x", r.x}, {"y", r.y}, {"w", r.width}, {"h", r.height}}; }

Rect rect_from_json(const Json& j) {
  return {j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(), j.at("h").get<int>()};
}

// Milliseconds since epoch <-> YYYY-MM-DDThh:mm:ss.mmmZ
std::string format_ms(std::int64_t ms) {
  const std::int64_t secs = ms >= 0 ? ms / 1000 : -((-ms + 999) / 1000);
  const int frac = static_cast<int>(ms - secs * 1000);
  std::string base = format_timestamp(secs);  // ends in 'Z'
  base.pop_back();
  char buf[8];
  std::snprintf(buf, sizeof buf, ".%03dZ", frac);
  return base + buf;
}

std::optional<std::int64_t> parse_ms(const std::string& text) {
  // Accepts both the millisecond and the whole-second form.
  if (text.size() == 24 && text[19] == '.' && text[23] == 'Z') {
    const auto secs = parse_iso_timestamp(text.substr(0, 19) + "Z");
    if (!secs) return std::nullopt;
    int frac = 0;
    for (int i = 20; i < 23; ++i) {
      if (!std::isdigit(static_cast<unsigned char>(text[i]))) return std::nullopt;
      frac = frac * 10 + (text[i] - '0');
    }
    return *secs * 1000 + frac;
  }
  const auto secs = parse_iso_timestamp(text);
  if (!secs) return std::nullopt;
  return *secs * 1000;
}

}  // namespace

std::string to_string(PairStatus s) {
  switch (s) {
    case PairStatus::kPending: return "pending";
    case PairStatus::kAutoRejected: return "auto_rejected";
    case PairStatus::kNeedsReview: return "needs_review";
    case PairStatus::kAccepted: return "accepted";
    case PairStatus::kRejected: return "rejected";
  }
  return "pending";
}

PairStatus status_from_string(const std::string& s) {
  if (s == "pending") return PairStatus::kPending;
  if (s == "auto_rejected") return PairStatus::kAutoRejected;
  if (s == "needs_review") return PairStatus::kNeedsReview;
  if (s == "accepted") return PairStatus::kAccepted;
  if (s == "rejected") return PairStatus::kRejected;
  throw InvalidArgument("unknown status '" + s + "'");
}

std::string to_string(Decision d) { return d == Decision::kAccept ? "accept" : "reject"; }

Decision decision_from_string(const std::string& s) {
  if (s == "accept") return Decision::kAccept;
  if (s == "reject") return Decision::kReject;
  throw InvalidArgument("decision must be 'accept' or 'reject'");
}

Json to_json(const MetricsReport& m) {
  return {{"psnr_db", std::isinf(m.psnr_db) ? Json("inf") : Json(m.psnr_db)},
          {"ssim", m.ssim},
          {"ms_ssim", m.ms_ssim ? Json(*m.ms_ssim) : Json(nullptr)},
          {"region", rect_json(m.region)}};
}

MetricsReport metrics_from_json(const Json& j) {
  MetricsReport m;
  const Json& p = j.at("psnr_db");
  m.psnr_db = p.is_string() ? (p.get<std::string>() == "inf" ? kInfinitePsnr
                                                             : throw InvalidArgument("bad psnr_db"))
                            : p.get<double>();
  m.ssim = j.at("ssim").get<double>();
  if (!j.at("ms_ssim").is_null()) m.ms_ssim = j.at("ms_ssim").get<double>();
  m.region = rect_from_json(j.at("region"));
  return m;
}

void CurationRecord::validate() const {
  if (pair_id.empty()) throw InvalidArgument("record has an empty pair_id");
  if ((status == PairStatus::kAccepted || status == PairStatus::kRejected) && !review) {
    throw InvalidArgument("record " + pair_id + " is " + to_string(status) + " without a review");
  }
  if ((correction_mode == CorrectionMode::kElastic ||
       correction_mode == CorrectionMode::kHomographyElastic) &&
      !field_ref) {
    throw InvalidArgument("record " + pair_id + " uses elastic correction without a field");
  }
  if ((correction_mode == CorrectionMode::kHomography ||
       correction_mode == CorrectionMode::kHomographyElastic) &&
      !homography) {
    throw InvalidArgument("record " + pair_id + " uses homography correction without a matrix");
  }
}

Json to_json(const CurationRecord& r) {
  Json j;
  j["v"] = kManifestVersion;
  j["pair_id"] = r.pair_id;
  j["scene_id"] = r.scene_id;
  j["rainy_path"] = r.rainy_path;
  j["clean_path"] = r.clean_path;
  j["rainy_time"] = optional_json(r.rainy_time, [](const auto& s) { return Json(s); });
  j["clean_time"] = optional_json(r.clean_time, [](const auto& s) { return Json(s); });
  j["crop"] = rect_json(r.crop);
  j["mask_ref"] = optional_json(r.mask_ref, [](const auto& s) { return Json(s); });
  j["criteria"] = optional_json(r.criteria, [](const auto& c) { return to_json(c); });
  j["correction_mode"] = to_string(r.correction_mode);
  j["homography"] = optional_json(r.homography, [](const Homography& h) { return Json(h.matrix()); });
  j["field_ref"] = optional_json(r.field_ref, [](const auto& s) { return Json(s); });
  j["aligned_ref"] = optional_json(r.aligned_ref, [](const auto& s) { return Json(s); });
  j["metrics_pre"] = optional_json(r.metrics_pre, [](const auto& m) { return to_json(m); });
  j["metrics_post"] = optional_json(r.metrics_post, [](const auto& m) { return to_json(m); });
  j["status"] = to_string(r.status);
  j["review"] = optional_json(r.review, [](const ReviewDecision& d) {
    return Json{{"decision", to_string(d.decision)}, {"note", d.note}, {"decided_at", d.decided_at}};
  });
  j["diagnostics"] = r.diagnostics;
  j["settings"] = r.settings;
  j["updated_at"] = optional_json(r.updated_at, [](const auto& s) { return Json(s); });
  return j;
}

CurationRecord record_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidArgument("record must be a JSON object");
  if (j.at("v").get<int>() != kManifestVersion) {
    throw InvalidArgument("unsupported manifest schema version");
  }
  CurationRecord r;
  r.pair_id = j.at("pair_id").get<std::string>();
  r.scene_id = j.at("scene_id").get<std::string>();
  r.rainy_path = j.at("rainy_path").get<std::string>();
  r.clean_path = j.at("clean_path").get<std::string>();
  r.rainy_time = optional_string(j, "rainy_time");
  r.clean_time = optional_string(j, "clean_time");
  r.crop = rect_from_json(j.at("crop"));
  r.mask_ref = optional_string(j, "mask_ref");
  if (!j.at("criteria").is_null()) r.criteria = criteria_from_json(j.at("criteria"));
  r.correction_mode = correction_mode_from_string(j.at("correction_mode").get<std::string>());
  if (!j.at("homography").is_null()) {
    r.homography = Homography(j.at("homography").get<Homography::Matrix>());
  }
  r.field_ref = optional_string(j, "field_ref");
  r.aligned_ref = optional_string(j, "aligned_ref");
  if (!j.at("metrics_pre").is_null()) r.metrics_pre = metrics_from_json(j.at("metrics_pre"));
  if (!j.at("metrics_post").is_null()) r.metrics_post = metrics_from_json(j.at("metrics_post"));
  r.status = status_from_string(j.at("status").get<std::string>());
  if (!j.at("review").is_null()) {
    const Json& rv = j.at("review");
    r.review = ReviewDecision{decision_from_string(rv.at("decision").get<std::string>()),
                              rv.at("note").get<std::string>(),
                              rv.at("decided_at").get<std::string>()};
  }
  r.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
  r.settings = j.at("settings");
  r.updated_at = optional_string(j, "updated_at");
  r.validate();
  return r;
}

std::string serialize_record(const CurationRecord& r) { return to_json(r).dump(); }

const CurationRecord* ManifestState::find(const std::string& pair_id) const {
  const auto it = index.find(pair_id);
  return it == index.end() ? nullptr : &records[it->second];
}

ManifestState parse_manifest(const std::string& text, const std::string& source) {
  ManifestState state;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    CurationRecord r;
    try {
      r = record_from_json(Json::parse(line));
    } catch (const Json::exception& e) {
      throw ParseError(source, lineno, e.what());
    } catch (const InvalidArgument& e) {
      throw ParseError(source, lineno, e.what());
    } catch (const DegenerateError& e) {
      throw ParseError(source, lineno, e.what());
    }
    const auto it = state.index.find(r.pair_id);
    if (it == state.index.end()) {
      state.index.emplace(r.pair_id, state.records.size());
      state.records.push_back(std::move(r));
    } else {
      state.records[it->second] = std::move(r);
    }
  }
  return state;
}

ManifestState load_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.string());
}

std::string serialize_state(const ManifestState& state) {
  std::string out;
  for (const CurationRecord& r : state.records) {
    out += serialize_record(r);
    out += '\n';
  }
  return out;
}

ManifestWriter::ManifestWriter(std::filesystem::path path) : path_(std::move(path)) {}

void ManifestWriter::append(const CurationRecord& record) {
  record.validate();
  const std::string line = serialize_record(record) + "\n";
  std::lock_guard lock(mutex_);
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to manifest " + path_.string());
  out << line;
  out.flush();
  if (!out) throw IoError("short write to manifest " + path_.string());
}

ManifestState ManifestWriter::load() const {
  std::lock_guard lock(mutex_);
  return load_manifest(path_);
}

CurationRecord ManifestWriter::apply_review(const std::string& pair_id, Decision decision,
                                            const std::string& note,
                                            const std::string& decided_at) {
  std::unique_lock lock(mutex_);
  const ManifestState state = load_manifest(path_);
  const CurationRecord* current = state.find(pair_id);
  if (!current) throw NotFoundError("unknown pair " + pair_id);
  if (current->status == PairStatus::kAutoRejected) {
    throw ConflictError("pair " + pair_id + " was auto-rejected and cannot be reviewed");
  }
  if (current->review && current->review->decision == decision && current->review->note == note) {
    return *current;
  }
  CurationRecord next = *current;
  std::string stamp = decided_at;
  const auto now_ms = parse_ms(decided_at);
  if (!now_ms) throw InvalidArgument("decided_at must be an ISO-8601 UTC timestamp");
  if (current->updated_at) {
    const auto prev = parse_ms(*current->updated_at);
    if (prev && *now_ms <= *prev) stamp = format_ms(*prev + 1);
  }
  next.review = ReviewDecision{decision, note, stamp};
  next.status = decision == Decision::kAccept ? PairStatus::kAccepted : PairStatus::kRejected;
  next.updated_at = stamp;
  lock.unlock();
  append(next);
  return next;
}

std::string utc_now_iso() {
  using namespace std::chrono;
  const auto ms = duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
  return format_ms(static_cast<std::int64_t>(ms));
}

}  // namespace rainforge
