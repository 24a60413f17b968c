#include "rainforge/ingest.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "rainforge/error.h"

namespace rainforge {

namespace fs = std::filesystem;

namespace {

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".ppm";
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  for (std::string& f : fields) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? "" : f.substr(b, e - b + 1);
  }
  return fields;
}

IngestResult ingest_by_stem(const fs::path& rainy_dir, const fs::path& clean_dir) {
  IngestResult result;
  std::map<std::string, std::vector<fs::path>> clean_by_key;
  for (const fs::path& p : list_images(clean_dir)) {
    clean_by_key[strip_stem_timestamp(p.stem().string())].push_back(p);
  }
  std::map<std::string, bool> key_used;
  for (const fs::path& rp : list_images(rainy_dir)) {
    const std::string stem = rp.stem().string();
    const std::string key = strip_stem_timestamp(stem);
    const auto it = clean_by_key.find(key);
    if (it == clean_by_key.end()) {
      result.errors.push_back("no clean frame for " + rp.filename().string());
      continue;
    }
    const auto rt = parse_stem_timestamp(stem);
    const fs::path* best = &it->second.front();
    if (rt) {
      double best_gap = -1;
      for (const fs::path& cp : it->second) {
        const auto ct = parse_stem_timestamp(cp.stem().string());
        if (!ct) continue;
        const double gap = std::abs(static_cast<double>(*ct - *rt));
        if (best_gap < 0 || gap < best_gap) {
          best_gap = gap;
          best = &cp;
        }
      }
    }
    key_used[key] = true;
    PairCandidate c;
    c.pair_id = stem;
    c.scene_id = key;
    c.rainy_path = rp;
    c.clean_path = *best;
    c.times.rainy = rt;
    c.times.clean = parse_stem_timestamp(best->stem().string());
    result.candidates.push_back(std::move(c));
  }
  for (const auto& [key, paths] : clean_by_key) {
    if (key_used.count(key)) continue;
    for (const fs::path& p : paths) {
      result.errors.push_back("no rainy frame for " + p.filename().string());
    }
  }
  return result;
}

IngestResult ingest_by_csv(const fs::path& rainy_dir, const fs::path& clean_dir,
                           const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot open pair map " + csv.string());
  IngestResult result;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv_line(line);
    const std::string where = csv.filename().string() + ":" + std::to_string(lineno) + ": ";
    if (lineno == 1 && fields[0] == "rainy") continue;
    if (fields.size() < 2 || fields.size() > 3 || fields[0].empty() || fields[1].empty()) {
      result.errors.push_back(where + "expected rainy,clean[,scene]");
      continue;
    }
    const fs::path rp = rainy_dir / fields[0];
    const fs::path cp = clean_dir / fields[1];
    if (!fs::is_regular_file(rp)) {
      result.errors.push_back(where + "missing rainy file " + fields[0]);
      continue;
    }
    if (!fs::is_regular_file(cp)) {
      result.errors.push_back(where + "missing clean file " + fields[1]);
      continue;
    }
    PairCandidate c;
    c.pair_id = rp.stem().string();
    c.scene_id = fields.size() == 3 && !fields[2].empty() ? fields[2] : strip_stem_timestamp(c.pair_id);
    c.rainy_path = rp;
    c.clean_path = cp;
    c.times.rainy = parse_stem_timestamp(rp.stem().string());
    c.times.clean = parse_stem_timestamp(cp.stem().string());
    result.candidates.push_back(std::move(c));
  }
  return result;
}

}  // namespace

IngestResult ingest_pairs(const fs::path& rainy_dir, const fs::path& clean_dir,
                          const std::optional<fs::path>& csv_map) {
  IngestResult result = csv_map ? ingest_by_csv(rainy_dir, clean_dir, *csv_map)
                                : ingest_by_stem(rainy_dir, clean_dir);
  std::stable_sort(result.candidates.begin(), result.candidates.end(),
                   [](const PairCandidate& a, const PairCandidate& b) { return a.pair_id < b.pair_id; });
  // Duplicate pair ids would collide in the manifest; keep the first.
  auto dup = std::adjacent_find(result.candidates.begin(), result.candidates.end(),
                                [](const auto& a, const auto& b) { return a.pair_id == b.pair_id; });
  while (dup != result.candidates.end()) {
    result.errors.push_back("duplicate pair id " + dup->pair_id);
    result.candidates.erase(dup + 1);
    dup = std::adjacent_find(result.candidates.begin(), result.candidates.end(),
                             [](const auto& a, const auto& b) { return a.pair_id == b.pair_id; });
  }
  return result;
}

}  // namespace rainforge
