#include "rainforge/export.h"

#include "rainforge/error.h"
#include "rainforge/image_io.h"
#include "rainforge/imgproc.h"

namespace rainforge {

PairImages load_pair_images(const CurationRecord& record, const std::filesystem::path& root) {
  const auto dir = root / "artifacts" / record.pair_id;
  PairImages out;
  if (std::filesystem::exists(dir / "rainy.png") && std::filesystem::exists(dir / "clean.png")) {
    out.rainy = load_image(dir / "rainy.png");
    out.clean = load_image(dir / "clean.png");
  } else {
    out.rainy = load_image(record.rainy_path);
    out.clean = load_image(record.clean_path);
    if (!record.crop.empty() && record.crop.width <= out.rainy.width() &&
        record.crop.height <= out.rainy.height()) {
      out.rainy = crop(out.rainy, record.crop);
      out.clean = crop(out.clean, record.crop);
    }
  }
  out.aligned = record.aligned_ref ? load_image(root / *record.aligned_ref) : out.clean;
  return out;
}

ExportSummary export_dataset(const ManifestState& manifest, const SplitAssignment& split,
                             const std::filesystem::path& artifact_root,
                             const std::filesystem::path& out_dir) {
  ExportSummary summary;
  std::array<nlohmann::json, 3> entries{nlohmann::json::array(), nlohmann::json::array(),
                                        nlohmann::json::array()};
  for (const CurationRecord& r : manifest.records) {
    if (r.status != PairStatus::kAccepted) continue;
    const auto it = split.pairs.find(r.pair_id);
    if (it == split.pairs.end()) {
      throw InvalidArgument("accepted pair " + r.pair_id + " has no split assignment");
    }
    const int k = static_cast<int>(it->second);
    const PairImages imgs = load_pair_images(r, artifact_root);
    const std::string scene_rel = to_string(it->second) + "/" + r.scene_id + "/";
    save_image(imgs.rainy, out_dir / (scene_rel + r.pair_id + "_rainy.png"));
    save_image(imgs.aligned, out_dir / (scene_rel + r.pair_id + "_clean.png"));
    entries[k].push_back({{"pair_id", r.pair_id},
                          {"scene_id", r.scene_id},
                          {"rainy", r.scene_id + "/" + r.pair_id + "_rainy.png"},
                          {"clean", r.scene_id + "/" + r.pair_id + "_clean.png"}});
    ++summary.counts[k];
  }
  summary.indices = nlohmann::json::object();
  for (int k = 0; k < 3; ++k) {
    const std::string name = to_string(static_cast<Split>(k));
    nlohmann::json index{{"split", name}, {"count", summary.counts[k]}, {"pairs", entries[k]}};
    write_text(out_dir / name / "index.json", index.dump(2) + "\n");
    summary.indices[name] = std::move(index);
  }
  return summary;
}

}  // namespace rainforge
