#include "rainforge/config.h"

#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "rainforge/error.h"

namespace rainforge {

namespace {

bool is_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
}

class LineParser {
 public:
  LineParser(const std::string& line, const std::string& source, int lineno)
      : s_(line), source_(source), line_(lineno) {}

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(source_, line_, msg); }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
  }
  bool at_end_or_comment() {
    skip_ws();
    return pos_ >= s_.size() || s_[pos_] == '#';
  }
  bool peek(char c) {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }
  void expect(char c) {
    if (!peek(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string key() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && is_key_char(s_[pos_])) ++pos_;
    if (pos_ == start) fail("expected a key");
    return s_.substr(start, pos_ - start);
  }

  double number() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                                s_[pos_] == '.' || s_[pos_] == '-' || s_[pos_] == '+')) {
      ++pos_;
    }
    const std::string tok = s_.substr(start, pos_ - start);
    if (tok.empty()) fail("expected a value");
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      fail("invalid number '" + tok + "'");
    }
    return v;
  }

  ConfigValue value() {
    skip_ws();
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    if (c == '"') {
      ++pos_;
      std::string out;
      while (true) {
        if (pos_ >= s_.size()) fail("unterminated string");
        const char ch = s_[pos_++];
        if (ch == '"') break;
        if (ch == '\\') {
          if (pos_ >= s_.size()) fail("unterminated escape");
          const char e = s_[pos_++];
          if (e != '"' && e != '\\') fail(std::string("unknown escape \\") + e);
          out.push_back(e);
        } else {
          out.push_back(ch);
        }
      }
      return out;
    }
    if (c == '[') {
      ++pos_;
      std::vector<double> items;
      if (peek(']')) {
        ++pos_;
        return items;
      }
      while (true) {
        items.push_back(number());
        if (peek(',')) {
          ++pos_;
          continue;
        }
        expect(']');
        break;
      }
      return items;
    }
    if (s_.compare(pos_, 4, "true") == 0 && (pos_ + 4 >= s_.size() || !is_key_char(s_[pos_ + 4]))) {
      pos_ += 4;
      return true;
    }
    if (s_.compare(pos_, 5, "false") == 0 && (pos_ + 5 >= s_.size() || !is_key_char(s_[pos_ + 5]))) {
      pos_ += 5;
      return false;
    }
    return number();
  }

 private:
  const std::string& s_;
  const std::string& source_;
  int line_;
  std::size_t pos_ = 0;
};

}  // namespace

ConfigMap parse_config(const std::string& text, const std::string& source) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    LineParser p(line, source, lineno);
    if (p.at_end_or_comment()) continue;
    if (p.peek('[')) {
      p.expect('[');
      section = p.key();
      p.expect(']');
      if (!p.at_end_or_comment()) p.fail("unexpected text after section header");
      continue;
    }
    const std::string key = section.empty() ? p.key() : section + "." + p.key();
    p.expect('=');
    ConfigValue v = p.value();
    if (!p.at_end_or_comment()) p.fail("unexpected text after value");
    if (out.count(key)) p.fail("duplicate key '" + key + "'");
    out.emplace(key, ConfigEntry{std::move(v), lineno});
  }
  return out;
}

namespace {

class Binder {
 public:
  Binder(const ConfigMap& map, const std::string& source) : map_(map), source_(source) {}

  [[noreturn]] void fail(const ConfigEntry& e, const std::string& msg) const {
    throw ParseError(source_, e.line, msg);
  }

  template <typename T>
  const T& get(const std::string& key, const ConfigEntry& e, const char* type) const {
    const T* v = std::get_if<T>(&e.value);
    if (!v) fail(e, "'" + key + "' must be a " + type);
    return *v;
  }

  double number(const std::string& key, const ConfigEntry& e) const {
    return get<double>(key, e, "number");
  }
  double positive(const std::string& key, const ConfigEntry& e) const {
    const double v = number(key, e);
    if (!(v > 0)) fail(e, "'" + key + "' must be positive");
    return v;
  }
  double non_negative(const std::string& key, const ConfigEntry& e) const {
    const double v = number(key, e);
    if (!(v >= 0)) fail(e, "'" + key + "' must be non-negative");
    return v;
  }
  int integer(const std::string& key, const ConfigEntry& e) const {
    const double v = number(key, e);
    if (v != static_cast<double>(static_cast<long long>(v)) || v < 0 || v > 1e9) {
      fail(e, "'" + key + "' must be a non-negative integer");
    }
    return static_cast<int>(v);
  }
  std::string string(const std::string& key, const ConfigEntry& e) const {
    return get<std::string>(key, e, "string");
  }

 private:
  const ConfigMap& map_;
  const std::string& source_;
};

}  // namespace

PipelineConfig PipelineConfig::from_map(const ConfigMap& map, const std::string& source,
                                        const std::filesystem::path& base_dir) {
  PipelineConfig cfg;
  Binder b(map, source);
  auto path_of = [&](const std::string& key, const ConfigEntry& e) {
    std::filesystem::path p = b.string(key, e);
    if (p.empty()) b.fail(e, "'" + key + "' must not be empty");
    return p.is_absolute() ? p : base_dir / p;
  };

  using Setter = std::function<void(const std::string&, const ConfigEntry&)>;
  const std::map<std::string, Setter> setters{
      {"rainy_dir", [&](auto& k, auto& e) { cfg.rainy_dir = path_of(k, e); }},
      {"clean_dir", [&](auto& k, auto& e) { cfg.clean_dir = path_of(k, e); }},
      {"pair_map", [&](auto& k, auto& e) { cfg.pair_map = path_of(k, e); }},
      {"output_root", [&](auto& k, auto& e) { cfg.output_root = path_of(k, e); }},
      {"manifest", [&](auto& k, auto& e) { cfg.manifest = path_of(k, e); }},
      {"seed", [&](auto& k, auto& e) { cfg.seed = static_cast<std::uint64_t>(b.integer(k, e)); }},
      {"threads",
       [&](auto& k, auto& e) {
         cfg.threads = b.integer(k, e);
         if (cfg.threads < 1) b.fail(e, "'threads' must be at least 1");
       }},
      {"thresholds.t_global", [&](auto& k, auto& e) { cfg.thresholds.t_global = b.positive(k, e); }},
      {"thresholds.t_local", [&](auto& k, auto& e) { cfg.thresholds.t_local = b.positive(k, e); }},
      {"thresholds.illumination_shift",
       [&](auto& k, auto& e) { cfg.thresholds.illumination_shift = b.non_negative(k, e); }},
      {"thresholds.max_time_delta_minutes",
       [&](auto& k, auto& e) { cfg.thresholds.max_time_delta_minutes = b.non_negative(k, e); }},
      {"thresholds.exposure_p1_max",
       [&](auto& k, auto& e) { cfg.thresholds.exposure_p1_max = b.non_negative(k, e); }},
      {"thresholds.exposure_p99_min",
       [&](auto& k, auto& e) { cfg.thresholds.exposure_p99_min = b.non_negative(k, e); }},
      {"thresholds.noise_max", [&](auto& k, auto& e) { cfg.thresholds.noise_max = b.non_negative(k, e); }},
      {"thresholds.block_size",
       [&](auto& k, auto& e) {
         cfg.thresholds.block_size = b.integer(k, e);
         if (cfg.thresholds.block_size < 8) b.fail(e, "'thresholds.block_size' must be at least 8");
       }},
      {"keypoints.octaves", [&](auto& k, auto& e) { cfg.alignment.keypoints.octaves = b.integer(k, e); }},
      {"keypoints.scales_per_octave",
       [&](auto& k, auto& e) { cfg.alignment.keypoints.scales_per_octave = b.integer(k, e); }},
      {"keypoints.initial_sigma",
       [&](auto& k, auto& e) { cfg.alignment.keypoints.initial_sigma = b.positive(k, e); }},
      {"keypoints.contrast_threshold",
       [&](auto& k, auto& e) { cfg.alignment.keypoints.contrast_threshold = b.non_negative(k, e); }},
      {"keypoints.edge_ratio",
       [&](auto& k, auto& e) { cfg.alignment.keypoints.edge_ratio = b.positive(k, e); }},
      {"keypoints.match_ratio",
       [&](auto& k, auto& e) {
         cfg.alignment.match_ratio = b.positive(k, e);
         if (cfg.alignment.match_ratio >= 1) b.fail(e, "'keypoints.match_ratio' must be below 1");
       }},
      {"ransac.inlier_threshold",
       [&](auto& k, auto& e) { cfg.alignment.ransac.inlier_threshold = b.positive(k, e); }},
      {"ransac.max_iterations",
       [&](auto& k, auto& e) { cfg.alignment.ransac.max_iterations = b.integer(k, e); }},
      {"ransac.confidence",
       [&](auto& k, auto& e) {
         cfg.alignment.ransac.confidence = b.positive(k, e);
         if (cfg.alignment.ransac.confidence >= 1) b.fail(e, "'ransac.confidence' must be below 1");
       }},
      {"demons.iterations", [&](auto& k, auto& e) { cfg.alignment.demons.iterations = b.integer(k, e); }},
      {"demons.field_smoothing_sigma",
       [&](auto& k, auto& e) { cfg.alignment.demons.field_smoothing_sigma = b.positive(k, e); }},
      {"demons.update_smoothing_sigma",
       [&](auto& k, auto& e) { cfg.alignment.demons.update_smoothing_sigma = b.positive(k, e); }},
      {"demons.max_step", [&](auto& k, auto& e) { cfg.alignment.demons.max_step = b.positive(k, e); }},
      {"demons.stop_tolerance",
       [&](auto& k, auto& e) { cfg.alignment.demons.stop_tolerance = b.positive(k, e); }},
      {"demons.levels", [&](auto& k, auto& e) { cfg.alignment.demons.levels = b.integer(k, e); }},
  };

  for (const auto& [key, entry] : map) {
    if (key.rfind("masks.", 0) == 0) {
      cfg.masks[key.substr(6)] = path_of(key, entry);
      continue;
    }
    if (key.rfind("exclude.", 0) == 0) {
      const auto& nums = b.get<std::vector<double>>(key, entry, "list of numbers");
      if (nums.size() % 4 != 0) b.fail(entry, "'" + key + "' needs x, y, w, h groups of four");
      std::vector<Rect> rects;
      for (std::size_t i = 0; i < nums.size(); i += 4) {
        Rect r{static_cast<int>(nums[i]), static_cast<int>(nums[i + 1]),
               static_cast<int>(nums[i + 2]), static_cast<int>(nums[i + 3])};
        if (r.empty() || r.x < 0 || r.y < 0) b.fail(entry, "'" + key + "' has an invalid rectangle");
        rects.push_back(r);
      }
      cfg.excluded_rects[key.substr(8)] = std::move(rects);
      continue;
    }
    const auto it = setters.find(key);
    if (it == setters.end()) b.fail(entry, "unknown key '" + key + "'");
    it->second(key, entry);
  }

  if (cfg.rainy_dir.empty() || cfg.clean_dir.empty() || cfg.output_root.empty()) {
    throw ParseError(source, 0, "rainy_dir, clean_dir and output_root are required");
  }
  if (cfg.manifest.empty()) cfg.manifest = cfg.output_root / "manifest.jsonl";
  try {
    cfg.alignment.demons.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(source, 0, e.what());
  }
  return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string source = path.string();
  return from_map(parse_config(ss.str(), source), source, path.parent_path());
}

nlohmann::json PipelineConfig::settings_json() const {
  const auto& t = thresholds;
  const auto& a = alignment;
  return {{"t_global", t.t_global},
          {"t_local", t.t_local},
          {"illumination_shift", t.illumination_shift},
          {"max_time_delta_minutes", t.max_time_delta_minutes},
          {"exposure_p1_max", t.exposure_p1_max},
          {"exposure_p99_min", t.exposure_p99_min},
          {"noise_max", t.noise_max},
          {"block_size", t.block_size},
          {"match_ratio", a.match_ratio},
          {"ransac_threshold", a.ransac.inlier_threshold},
          {"ransac_confidence", a.ransac.confidence},
          {"ransac_max_iterations", a.ransac.max_iterations},
          {"demons_iterations", a.demons.iterations},
          {"demons_field_sigma", a.demons.field_smoothing_sigma},
          {"demons_update_sigma", a.demons.update_smoothing_sigma},
          {"demons_max_step", a.demons.max_step},
          {"demons_stop_tolerance", a.demons.stop_tolerance},
          {"seed", seed},
          {"metric_channels", "per-channel mean"}};
}

}  // namespace rainforge
