#include "rainforge/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <set>
#include <thread>

#include "rainforge/demons.h"
#include "rainforge/error.h"
#include "rainforge/homography.h"
#include "rainforge/image_io.h"
#include "rainforge/imgproc.h"
#include "rainforge/keypoints.h"
#include "rainforge/matching.h"
#include "rainforge/motion.h"

namespace rainforge {

namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

Image mask_image(const RegionMask& m) {
  Image out(m.width(), m.height(), 1);
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) out.at(x, y) = m.at(x, y) ? 1.0 : 0.0;
  }
  return out;
}

// Validity after a second warp: the sample must land inside the image and
// only on pixels that were valid after the first warp.
RegionMask chain_valid(const RegionMask& first, const WarpResult& second_of_first) {
  RegionMask out(first.width(), first.height(), false);
  for (int y = 0; y < first.height(); ++y) {
    for (int x = 0; x < first.width(); ++x) {
      out.set(x, y, second_of_first.valid.at(x, y) && second_of_first.image.at(x, y) >= 1.0 - 1e-9);
    }
  }
  return out;
}

bool estimate_homography(const Image& rainy_l, const Image& clean_l,
                         const AlignmentSettings& settings, std::uint64_t seed,
                         AlignmentResult& out) {
  const auto kp_clean = detect_keypoints(clean_l, settings.keypoints);
  const auto kp_rainy = detect_keypoints(rainy_l, settings.keypoints);
  const auto matches = match_descriptors(kp_clean, kp_rainy, settings.match_ratio);
  out.matches = matches.size();
  if (matches.size() < 4) {
    out.diagnostics.push_back("homography: only " + std::to_string(matches.size()) +
                              " descriptor matches");
    return false;
  }
  RansacParams rp = settings.ransac;
  rp.seed = seed;
  try {
    const RansacResult r = estimate_homography_ransac(matches, rp);
    out.homography = r.homography;
    out.inliers = r.inlier_count();
  } catch (const DegenerateError& e) {
    out.diagnostics.push_back(std::string("homography: ") + e.what());
    return false;
  }
  return true;
}

}  // namespace

AlignmentResult align_pair(const Image& rainy, const Image& clean,
                           std::optional<CorrectionMode> forced,
                           const CriteriaThresholds& thresholds,
                           const AlignmentSettings& settings, std::uint64_t seed) {
  if (!rainy.same_shape(clean)) throw InvalidArgument("rainy and clean frames differ in shape");
  AlignmentResult out;
  const Image rainy_l = luminance(rainy);
  Image current = clean;
  RegionMask valid(clean.width(), clean.height(), true);

  const Image rainy_m = motion_view(rainy);
  const Image clean_m = motion_view(clean);
  out.motion_before = alignment_residual(rainy_m, clean_m, thresholds.block_size);
  CriteriaReport probe;
  probe.motion = out.motion_before;
  CorrectionMode mode = forced.value_or(select_correction(probe, thresholds));

  const bool want_h = mode == CorrectionMode::kHomography ||
                      mode == CorrectionMode::kHomographyElastic;
  bool have_h = false;
  if (want_h) {
    // Keypoints on the opened views: thin streaks otherwise swamp the matches.
    have_h = estimate_homography(rainy_m, clean_m, settings, seed, out);
    if (have_h) {
      WarpResult w = warp_homography(clean, *out.homography);
      current = std::move(w.image);
      valid = std::move(w.valid);
      out.motion_after_homography =
          alignment_residual(rainy_m, motion_view(current), thresholds.block_size, &valid);
      if (!forced) mode = select_correction(probe, thresholds, &*out.motion_after_homography);
    } else {
      out.failed = true;
      // Without a model only the elastic stage can still run.
      mode = mode == CorrectionMode::kHomographyElastic ? CorrectionMode::kElastic
                                                        : CorrectionMode::kNone;
    }
  }

  if (mode == CorrectionMode::kElastic || mode == CorrectionMode::kHomographyElastic) {
    DisplacementField field = register_elastic(luminance(current), rainy_l, settings.demons);
    WarpResult w = warp_displacement(current, field);
    const WarpResult vw = warp_displacement(mask_image(valid), field);
    valid = chain_valid(valid, vw).intersect(w.valid);
    current = std::move(w.image);
    out.field = std::move(field);
  }

  out.mode = mode;
  out.aligned = std::move(current);
  out.valid = std::move(valid);
  return out;
}

MetricsReport measure_region(const Image& a, const Image& b, const Rect& region) {
  const Image ca = crop(a, region);
  const Image cb = crop(b, region);
  MetricsReport m;
  m.region = region;
  m.psnr_db = psnr(ca, cb);
  m.ssim = ssim(ca, cb).mean;
  const MsSsimParams ms;
  if (std::min(region.width, region.height) >= ms_ssim_min_size(ms)) m.ms_ssim = ms_ssim(ca, cb, ms);
  return m;
}

std::uint64_t pair_seed(std::uint64_t seed, const std::string& pair_id) {
  std::uint64_t h = 1469598103934665603ULL ^ seed;  // FNV-1a
  for (unsigned char c : pair_id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::filesystem::path artifact_dir(const std::filesystem::path& output_root,
                                   const std::string& pair_id) {
  return output_root / "artifacts" / pair_id;
}

CurationRecord run_pair(const PairCandidate& pair, const PipelineConfig& config) {
  CurationRecord rec;
  rec.pair_id = pair.pair_id;
  rec.scene_id = pair.scene_id;
  rec.rainy_path = pair.rainy_path.generic_string();
  rec.clean_path = pair.clean_path.generic_string();
  if (pair.times.rainy) rec.rainy_time = format_timestamp(*pair.times.rainy);
  if (pair.times.clean) rec.clean_time = format_timestamp(*pair.times.clean);
  rec.settings = config.settings_json();
  const CriteriaThresholds& t = config.thresholds;

  auto reject = [&](std::string why) {
    rec.status = PairStatus::kAutoRejected;
    rec.diagnostics.push_back(std::move(why));
    return rec;
  };

  Image rainy, clean;
  try {
    rainy = load_image(pair.rainy_path);
    clean = load_image(pair.clean_path);
  } catch (const Error& e) {
    return reject(std::string("load failed: ") + e.what());
  }
  if (!rainy.same_shape(clean)) return reject("rainy and clean frames differ in shape");

  // Scene mask: PNG mask and excluded rectangles.
  RegionMask keep(rainy.width(), rainy.height(), true);
  if (const auto it = config.masks.find(pair.scene_id); it != config.masks.end()) {
    try {
      const RegionMask m = load_mask(it->second);
      if (m.width() != keep.width() || m.height() != keep.height()) {
        return reject("mask " + it->second.generic_string() + " does not match the frame size");
      }
      keep = keep.intersect(m);
    } catch (const Error& e) {
      return reject(std::string("mask load failed: ") + e.what());
    }
    rec.mask_ref = it->second.generic_string();
  }
  if (const auto it = config.excluded_rects.find(pair.scene_id); it != config.excluded_rects.end()) {
    for (const Rect& r : it->second) {
      for (int y = std::max(0, r.y); y < std::min(keep.height(), r.y + r.height); ++y) {
        for (int x = std::max(0, r.x); x < std::min(keep.width(), r.x + r.width); ++x) {
          keep.set(x, y, false);
        }
      }
    }
    if (!rec.mask_ref) rec.mask_ref = "exclude:" + pair.scene_id;
  }
  if (keep.none()) return reject("mask excludes the whole frame");

  const CropResult rc = apply_mask_crop(rainy, keep);
  const CropResult cc = apply_mask_crop(clean, keep);
  rec.crop = rc.region;
  const Image& r_img = rc.image;
  const Image& c_img = cc.image;

  CriteriaReport report;
  try {
    report = assess_criteria(r_img, c_img, pair.times, t);
  } catch (const InvalidArgument& e) {
    return reject(std::string("assessment failed: ") + e.what());
  }
  rec.criteria = report;
  if (!report.exposure_ok) {
    rec.diagnostics.push_back("exposure: rainy p1 " + fmt("%.3f", report.rainy_exposure.p1) +
                              " p99 " + fmt("%.3f", report.rainy_exposure.p99) + ", clean p1 " +
                              fmt("%.3f", report.clean_exposure.p1) + " p99 " +
                              fmt("%.3f", report.clean_exposure.p99));
  }
  if (!report.noise_ok) {
    rec.diagnostics.push_back("noise: rainy " + fmt("%.3f", report.rainy_noise) + ", clean " +
                              fmt("%.3f", report.clean_noise));
  }
  if (!report.time_ok) {
    rec.diagnostics.push_back("time delta " + fmt("%.1f", report.time_delta_minutes) + " min");
  }
  if (!report.exposure_ok || !report.noise_ok || !report.time_ok) {
    rec.status = PairStatus::kAutoRejected;
    return rec;
  }

  const auto dir = artifact_dir(config.output_root, pair.pair_id);
  const std::string rel = "artifacts/" + pair.pair_id + "/";
  save_image(r_img, dir / "rainy.png");
  save_image(c_img, dir / "clean.png");

  AlignmentResult al = align_pair(r_img, c_img, std::nullopt, t, config.alignment,
                                  pair_seed(config.seed, pair.pair_id));
  rec.correction_mode = al.mode;
  rec.homography = al.homography;
  if (al.mode == CorrectionMode::kElastic) rec.homography.reset();
  for (auto& d : al.diagnostics) rec.diagnostics.push_back(std::move(d));
  if (al.failed) rec.diagnostics.push_back("alignment failed; review required");

  const bool corrected = al.mode != CorrectionMode::kNone;
  if (corrected) {
    save_image(al.aligned, dir / "aligned.png");
    rec.aligned_ref = rel + "aligned.png";
  }
  if (al.field) {
    save_field(*al.field, dir / "field.dfield");
    rec.field_ref = rel + "field.dfield";
  }

  // Both metric sets share one region: valid after alignment and unmasked.
  const RegionMask region_mask = al.valid.intersect(rc.mask);
  Rect region = region_mask.inscribed_rect();
  if (region.empty()) {
    region = {0, 0, r_img.width(), r_img.height()};
    rec.diagnostics.push_back("no clean inscribed region; metrics use the full crop");
  }
  rec.metrics_pre = measure_region(r_img, c_img, region);
  rec.metrics_post = measure_region(r_img, al.aligned, region);
  if (corrected) {
    const double pre = mean_squared_error(r_img, c_img, region);
    const double post = mean_squared_error(r_img, al.aligned, region);
    if (post > pre) {
      rec.diagnostics.push_back("post-alignment MSE " + fmt("%.6g", post) + " exceeds pre " +
                                fmt("%.6g", pre));
    }
  }

  if (!report.illumination_ok) {
    rec.diagnostics.push_back("illumination shift " + fmt("%.3f", report.illumination_shift));
  }
  rec.status = corrected || al.failed || !report.illumination_ok ? PairStatus::kNeedsReview
                                                                 : PairStatus::kPending;
  return rec;
}

PipelineSummary run_pipeline(const PipelineConfig& config) {
  std::optional<std::filesystem::path> csv;
  if (!config.pair_map.empty()) csv = config.pair_map;
  IngestResult ingest = ingest_pairs(config.rainy_dir, config.clean_dir, csv);

  ManifestWriter writer(config.manifest);
  const ManifestState existing = writer.load();

  PipelineSummary summary;
  summary.ingest_errors = std::move(ingest.errors);
  std::vector<const PairCandidate*> todo;
  for (const PairCandidate& c : ingest.candidates) {
    if (existing.find(c.pair_id)) {
      ++summary.skipped;
    } else {
      todo.push_back(&c);
    }
  }

  std::vector<CurationRecord> records(todo.size());
  std::vector<std::exception_ptr> failures(todo.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < todo.size();) {
      try {
        records[i] = run_pair(*todo[i], config);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(config.threads, static_cast<int>(todo.size())));
  {
    std::vector<std::jthread> pool;
    for (int k = 1; k < n; ++k) pool.emplace_back(worker);
    worker();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  for (const CurationRecord& r : records) writer.append(r);
  summary.records = std::move(records);
  return summary;
}

}  // namespace rainforge
