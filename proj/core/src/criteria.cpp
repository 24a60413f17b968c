#include "rainforge/criteria.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <regex>

#include "fft.h"
#include "rainforge/error.h"
#include "rainforge/imgproc.h"

namespace rainforge {

namespace {

std::optional<Timestamp> make_timestamp(int y, int mo, int d, int h, int mi, int s) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) return std::nullopt;
  const sys_days days{ymd};
  return static_cast<Timestamp>(days.time_since_epoch().count()) * 86400 + h * 3600 + mi * 60 + s;
}

double percentile(std::vector<double> sorted_copy, double p) {
  std::sort(sorted_copy.begin(), sorted_copy.end());
  const double pos = p * static_cast<double>(sorted_copy.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted_copy.size() - 1);
  const double f = pos - static_cast<double>(lo);
  return sorted_copy[lo] * (1 - f) + sorted_copy[hi] * f;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::optional<Timestamp> parse_stem_timestamp(const std::string& stem) {
  static const std::regex re(R"(_(\d{4})(\d{2})(\d{2})T(\d{2})(\d{2})(\d{2})$)");
  std::smatch m;
  if (!std::regex_search(stem, m, re)) return std::nullopt;
  return make_timestamp(std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3]), std::stoi(m[4]),
                        std::stoi(m[5]), std::stoi(m[6]));
}

std::string strip_stem_timestamp(const std::string& stem) {
  if (!parse_stem_timestamp(stem)) return stem;
  return stem.substr(0, stem.size() - 16);
}

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto days = static_cast<long>(std::floor(static_cast<double>(t) / 86400.0));
  const long secs = static_cast<long>(t - static_cast<Timestamp>(days) * 86400);
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), secs / 3600,
                (secs / 60) % 60, secs % 60);
  return buf;
}

std::optional<Timestamp> parse_iso_timestamp(const std::string& text) {
  int y, mo, d, h, mi, s;
  char z = 0;
  if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo, &d, &h, &mi, &s, &z) != 7 ||
      z != 'Z') {
    return std::nullopt;
  }
  return make_timestamp(y, mo, d, h, mi, s);
}

ExposureStats exposure_stats(const Image& img, const CriteriaThresholds& t) {
  const Image lum = luminance(img);
  ExposureStats s;
  s.mean = mean_of(lum.values());
  s.p1 = percentile(lum.values(), 0.01);
  s.p99 = percentile(lum.values(), 0.99);
  s.ok = !(s.p1 > t.exposure_p1_max) && !(s.p99 < t.exposure_p99_min);
  return s;
}

double noise_proxy(const Image& img) {
  const Image lum = luminance(img);
  const int w = lum.width();
  const int h = lum.height();
  const double mean = mean_of(lum.values());
  std::vector<std::complex<double>> buf(lum.pixel_count());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = lum.values()[i] - mean;
  const auto spec = detail::dft2(buf, w, h, false);
  double total = 0.0;
  double high = 0.0;
  constexpr double kCutoff = 0.75 * 0.5;  // cycles per pixel
  for (int y = 0; y < h; ++y) {
    const double fy = static_cast<double>(y <= h / 2 ? y : y - h) / h;
    for (int x = 0; x < w; ++x) {
      if (x == 0 && y == 0) continue;
      const double fx = static_cast<double>(x <= w / 2 ? x : x - w) / w;
      const double e = std::norm(spec[static_cast<std::size_t>(y) * w + x]);
      total += e;
      if (std::hypot(fx, fy) > kCutoff) high += e;
    }
  }
  return total > 0 ? high / total : 0.0;
}

CriteriaReport assess_criteria(const Image& rainy, const Image& clean, const CaptureTimes& times,
                               const CriteriaThresholds& thresholds) {
  if (rainy.width() != clean.width() || rainy.height() != clean.height()) {
    throw InvalidArgument("rainy and clean frames differ in size");
  }
  if (rainy.channels() != clean.channels()) {
    throw InvalidArgument("rainy and clean frames differ in channel count");
  }
  CriteriaReport r;
  r.rainy_exposure = exposure_stats(rainy, thresholds);
  r.clean_exposure = exposure_stats(clean, thresholds);
  r.exposure_ok = r.rainy_exposure.ok && r.clean_exposure.ok;

  r.rainy_noise = noise_proxy(rainy);
  r.clean_noise = noise_proxy(clean);
  r.noise_ok = !(r.rainy_noise > thresholds.noise_max) && !(r.clean_noise > thresholds.noise_max);

  r.illumination_shift = std::abs(r.rainy_exposure.mean - r.clean_exposure.mean);
  for (int c = 0; c < rainy.channels(); ++c) {
    r.channel_shift[c] = mean_of(rainy.channel(c).values()) - mean_of(clean.channel(c).values());
  }
  if (rainy.channels() == 1) r.channel_shift = {r.channel_shift[0], r.channel_shift[0], r.channel_shift[0]};
  r.illumination_ok = !(r.illumination_shift > thresholds.illumination_shift);

  if (times.rainy && times.clean) {
    r.time_known = true;
    r.time_delta_minutes = std::abs(static_cast<double>(*times.rainy - *times.clean)) / 60.0;
  }
  r.time_ok = !(r.time_delta_minutes > thresholds.max_time_delta_minutes);
  r.motion = alignment_residual(motion_view(rainy), motion_view(clean), thresholds.block_size);
  return r;
}

std::string to_string(CorrectionMode mode) {
  switch (mode) {
    case CorrectionMode::kNone: return "none";
    case CorrectionMode::kHomography: return "homography";
    case CorrectionMode::kElastic: return "elastic";
    case CorrectionMode::kHomographyElastic: return "homography+elastic";
  }
  return "none";
}

CorrectionMode correction_mode_from_string(const std::string& s) {
  if (s == "none") return CorrectionMode::kNone;
  if (s == "homography") return CorrectionMode::kHomography;
  if (s == "elastic") return CorrectionMode::kElastic;
  if (s == "homography+elastic") return CorrectionMode::kHomographyElastic;
  throw InvalidArgument("unknown correction mode '" + s + "'");
}

CorrectionMode select_correction(const CriteriaReport& report, const CriteriaThresholds& t,
                                 const MotionReport* after_homography) {
  const MotionReport& m = report.motion;
  if (m.global_magnitude >= t.t_global) {
    if (after_homography && after_homography->max_block_shift >= t.t_local) {
      return CorrectionMode::kHomographyElastic;
    }
    return CorrectionMode::kHomography;
  }
  if (m.max_block_shift >= t.t_local) return CorrectionMode::kElastic;
  return CorrectionMode::kNone;
}

nlohmann::json to_json(const MotionReport& m) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const BlockShift& b : m.blocks) {
    blocks.push_back({b.block.x, b.block.y, b.shift.x, b.shift.y});
  }
  return {{"global_shift", {m.global_shift.x, m.global_shift.y}},
          {"global_peak", {m.global_peak_x, m.global_peak_y}},
          {"global_magnitude", m.global_magnitude},
          {"max_block_shift", m.max_block_shift},
          {"mean_block_shift", m.mean_block_shift},
          {"block_size", m.block_size},
          {"blocks", blocks}};
}

MotionReport motion_from_json(const nlohmann::json& j) {
  MotionReport m;
  m.global_shift = {j.at("global_shift").at(0).get<double>(), j.at("global_shift").at(1).get<double>()};
  m.global_peak_x = j.at("global_peak").at(0).get<int>();
  m.global_peak_y = j.at("global_peak").at(1).get<int>();
  m.global_magnitude = j.at("global_magnitude").get<double>();
  m.max_block_shift = j.at("max_block_shift").get<double>();
  m.mean_block_shift = j.at("mean_block_shift").get<double>();
  m.block_size = j.at("block_size").get<int>();
  for (const auto& b : j.at("blocks")) {
    BlockShift bs;
    bs.block = {b.at(0).get<int>(), b.at(1).get<int>(), m.block_size, m.block_size};
    bs.shift = {b.at(2).get<double>(), b.at(3).get<double>()};
    bs.magnitude = std::hypot(bs.shift.x, bs.shift.y);
    m.blocks.push_back(bs);
  }
  return m;
}

namespace {

nlohmann::json exposure_json(const ExposureStats& e) {
  return {{"mean", e.mean}, {"p1", e.p1}, {"p99", e.p99}, {"ok", e.ok}};
}

ExposureStats exposure_from_json(const nlohmann::json& j) {
  return {j.at("mean").get<double>(), j.at("p1").get<double>(), j.at("p99").get<double>(),
          j.at("ok").get<bool>()};
}

}  // namespace

nlohmann::json to_json(const CriteriaReport& r) {
  return {{"rainy_exposure", exposure_json(r.rainy_exposure)},
          {"clean_exposure", exposure_json(r.clean_exposure)},
          {"exposure_ok", r.exposure_ok},
          {"rainy_noise", r.rainy_noise},
          {"clean_noise", r.clean_noise},
          {"noise_ok", r.noise_ok},
          {"illumination_shift", r.illumination_shift},
          {"channel_shift", r.channel_shift},
          {"illumination_ok", r.illumination_ok},
          {"time_delta_minutes", r.time_delta_minutes},
          {"time_known", r.time_known},
          {"time_ok", r.time_ok},
          {"motion", to_json(r.motion)}};
}

CriteriaReport criteria_from_json(const nlohmann::json& j) {
  CriteriaReport r;
  r.rainy_exposure = exposure_from_json(j.at("rainy_exposure"));
  r.clean_exposure = exposure_from_json(j.at("clean_exposure"));
  r.exposure_ok = j.at("exposure_ok").get<bool>();
  r.rainy_noise = j.at("rainy_noise").get<double>();
  r.clean_noise = j.at("clean_noise").get<double>();
  r.noise_ok = j.at("noise_ok").get<bool>();
  r.illumination_shift = j.at("illumination_shift").get<double>();
  r.channel_shift = j.at("channel_shift").get<std::array<double, 3>>();
  r.illumination_ok = j.at("illumination_ok").get<bool>();
  r.time_delta_minutes = j.at("time_delta_minutes").get<double>();
  r.time_known = j.at("time_known").get<bool>();
  r.time_ok = j.at("time_ok").get<bool>();
  r.motion = motion_from_json(j.at("motion"));
  return r;
}

}  // namespace rainforge
