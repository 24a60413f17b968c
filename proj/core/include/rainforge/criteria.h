#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "rainforge/config.h"
#include "rainforge/image.h"
#include "rainforge/motion.h"

namespace rainforge {

// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

// Parses a trailing `_YYYYMMDDThhmmss` from a file stem.
std::optional<Timestamp> parse_stem_timestamp(const std::string& stem);
// Stem with the timestamp suffix removed (unchanged when absent).
std::string strip_stem_timestamp(const std::string& stem);
std::string format_timestamp(Timestamp t);  // YYYY-MM-DDThh:mm:ssZ
std::optional<Timestamp> parse_iso_timestamp(const std::string& text);

struct ExposureStats {
  double mean = 0.0;
  double p1 = 0.0;
  double p99 = 0.0;
  bool ok = true;
};

struct CriteriaReport {
  ExposureStats rainy_exposure;
  ExposureStats clean_exposure;
  bool exposure_ok = true;
  double rainy_noise = 0.0;  // energy above 3/4 Nyquist over total
  double clean_noise = 0.0;
  bool noise_ok = true;
  double illumination_shift = 0.0;  // |mean luminance delta|
  std::array<double, 3> channel_shift{};  // rainy - clean, per channel
  bool illumination_ok = true;
  double time_delta_minutes = 0.0;
  bool time_known = false;
  bool time_ok = true;
  MotionReport motion;
};

struct CaptureTimes {
  std::optional<Timestamp> rainy;
  std::optional<Timestamp> clean;
};

ExposureStats exposure_stats(const Image& img, const CriteriaThresholds& t);

// Fraction of spectral energy (DC excluded) at radial frequency above
// 3/4 of Nyquist.
double noise_proxy(const Image& img);

CriteriaReport assess_criteria(const Image& rainy, const Image& clean, const CaptureTimes& times,
                               const CriteriaThresholds& thresholds);

enum class CorrectionMode { kNone, kHomography, kElastic, kHomographyElastic };

std::string to_string(CorrectionMode mode);
CorrectionMode correction_mode_from_string(const std::string& s);

// none below both thresholds; homography when the global shift reaches
// t_global; elastic when the block residual reaches t_local, measured on the
// homography-corrected pair when one is given.
CorrectionMode select_correction(const CriteriaReport& report, const CriteriaThresholds& thresholds,
                                 const MotionReport* after_homography = nullptr);

nlohmann::json to_json(const MotionReport& m);
MotionReport motion_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CriteriaReport& r);
CriteriaReport criteria_from_json(const nlohmann::json& j);

}  // namespace rainforge
