#include "cli.h"

#include <cstdlib>
#include <ostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rainforge/config.h"
#include "rainforge/criteria.h"
#include "rainforge/error.h"
#include "rainforge/export.h"
#include "rainforge/image_io.h"
#include "rainforge/imgproc.h"
#include "rainforge/manifest.h"
#include "rainforge/metrics.h"
#include "rainforge/objective.h"
#include "rainforge/pipeline.h"
#include "rainforge/rain.h"
#include "rainforge/random.h"
#include "rainforge/split.h"
#include "review_service.h"

namespace rainforge::cli {

namespace {

using Json = nlohmann::json;
namespace fs = std::filesystem;

// Config from --config, else $RAINFORGE_CONFIG, else defaults (when allowed).
std::optional<PipelineConfig> resolve_config(const std::string& flag) {
  std::string path = flag;
  if (path.empty()) {
    if (const char* env = std::getenv("RAINFORGE_CONFIG")) path = env;
  }
  if (path.empty()) return std::nullopt;
  return PipelineConfig::load(path);
}

Rect parse_rect(const std::string& text) {
  Rect r;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%d,%d,%d,%d%c", &r.x, &r.y, &r.width, &r.height, &tail) != 4 ||
      r.empty()) {
    throw InvalidArgument("region must be x,y,w,h with positive size");
  }
  return r;
}

struct AlignArgs {
  std::string rainy, clean, mode = "auto", out, config;
  std::optional<std::uint64_t> seed;
};

int cmd_align(const AlignArgs& a, std::ostream& out) {
  const PipelineConfig cfg = resolve_config(a.config).value_or(PipelineConfig{});
  const Image rainy = load_image(a.rainy);
  const Image clean = load_image(a.clean);
  std::optional<CorrectionMode> forced;
  if (a.mode != "auto") forced = correction_mode_from_string(a.mode);
  const AlignmentResult r = align_pair(rainy, clean, forced, cfg.thresholds, cfg.alignment,
                                       a.seed.value_or(cfg.seed));
  Rect region = r.valid.inscribed_rect();
  if (region.empty()) region = {0, 0, rainy.width(), rainy.height()};
  Json j{{"mode", to_string(r.mode)},
         {"homography", r.homography ? Json(r.homography->matrix()) : Json(nullptr)},
         {"matches", r.matches},
         {"inliers", r.inliers},
         {"failed", r.failed},
         {"diagnostics", r.diagnostics},
         {"metrics_pre", to_json(measure_region(rainy, clean, region))},
         {"metrics_post", to_json(measure_region(rainy, r.aligned, region))}};
  if (!a.out.empty()) {
    const fs::path dir = a.out;
    save_image(r.aligned, dir / "aligned.png");
    if (r.homography) write_text(dir / "homography.json", Json(r.homography->matrix()).dump() + "\n");
    if (r.field) save_field(*r.field, dir / "field.dfield");
    write_text(dir / "result.json", j.dump(2) + "\n");
  }
  out << j.dump(2) << "\n";
  return r.failed ? kExitFailure : kExitOk;
}

struct AssessArgs {
  std::string rainy, clean, rainy_time, clean_time, config;
};

int cmd_assess(const AssessArgs& a, std::ostream& out) {
  const PipelineConfig cfg = resolve_config(a.config).value_or(PipelineConfig{});
  CaptureTimes times;
  auto time_of = [](const std::string& flag, const std::string& path) -> std::optional<Timestamp> {
    if (flag.empty()) return parse_stem_timestamp(fs::path(path).stem().string());
    const auto t = parse_iso_timestamp(flag);
    if (!t) throw InvalidArgument("timestamps must look like 2021-01-31T12:00:00Z");
    return t;
  };
  times.rainy = time_of(a.rainy_time, a.rainy);
  times.clean = time_of(a.clean_time, a.clean);
  const CriteriaReport report =
      assess_criteria(load_image(a.rainy), load_image(a.clean), times, cfg.thresholds);
  out << Json{{"criteria", to_json(report)},
              {"correction_mode", to_string(select_correction(report, cfg.thresholds))}}
             .dump(2)
      << "\n";
  return kExitOk;
}

struct PipelineArgs {
  std::string config;
  int threads = 0;
};

int cmd_pipeline(const PipelineArgs& a, std::ostream& out, std::ostream& err) {
  auto cfg = resolve_config(a.config);
  if (!cfg) {
    err << "pipeline: --config or RAINFORGE_CONFIG is required\n";
    return kExitUsage;
  }
  if (a.threads > 0) cfg->threads = a.threads;
  const PipelineSummary s = run_pipeline(*cfg);
  Json counts = Json::object();
  for (const CurationRecord& r : s.records) {
    counts[to_string(r.status)] = counts.value(to_string(r.status), 0) + 1;
  }
  for (const auto& e : s.ingest_errors) err << "ingest: " << e << "\n";
  out << Json{{"manifest", cfg->manifest.generic_string()},
              {"processed", s.records.size()},
              {"skipped", s.skipped},
              {"status_counts", counts},
              {"ingest_errors", s.ingest_errors}}
             .dump(2)
      << "\n";
  return kExitOk;
}

struct SynthArgs {
  std::string clean, out, provenance;
  std::uint64_t seed = 0;
  int streaks = 200;
  int layers = 1;
  double veil = 0.0;
  std::vector<double> shift;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const Image clean = load_image(a.clean);
  SynthesisRequest req;
  for (int k = 0; k < a.layers; ++k) {
    StreakParams p;
    p.width = clean.width();
    p.height = clean.height();
    p.count = a.streaks;
    p.seed = a.seed + static_cast<std::uint64_t>(k);
    req.layers.push_back(p);
  }
  req.veil.strength = a.veil;
  if (!a.shift.empty()) {
    if (a.shift.size() != 2) throw InvalidArgument("--shift takes dx,dy");
    req.warp = Homography({1, 0, a.shift[0], 0, 1, a.shift[1], 0, 0, 1});
  }
  const SynthesisResult r = synthesize_pair(clean, req);
  save_image(r.rainy, a.out);
  Json prov = r.provenance;
  prov["clean"] = a.clean;
  prov["rainy"] = a.out;
  if (!a.provenance.empty()) write_text(a.provenance, prov.dump(2) + "\n");
  out << prov.dump(2) << "\n";
  return kExitOk;
}

struct MetricsArgs {
  std::string a, b, region;
};

int cmd_metrics(const MetricsArgs& m, std::ostream& out) {
  const Image a = load_image(m.a);
  const Image b = load_image(m.b);
  if (!a.same_shape(b)) throw InvalidArgument("images differ in shape");
  const Rect region = m.region.empty() ? Rect{0, 0, a.width(), a.height()} : parse_rect(m.region);
  if (region.x < 0 || region.y < 0 || region.x + region.width > a.width() ||
      region.y + region.height > a.height()) {
    throw InvalidArgument("region lies outside the images");
  }
  Json j = to_json(measure_region(a, b, region));
  j["mae"] = mean_absolute_error(crop(a, region), crop(b, region));
  out << j.dump(2) << "\n";
  return kExitOk;
}

struct LossArgs {
  std::uint64_t seed = 0;
  int batch = 4;
  int dim = 16;
  int points = 20;
  double temperature = 0.25;
  bool exclude_positive = false;
  double tolerance = 1e-5;
};

int cmd_losscheck(const LossArgs& a, std::ostream& out) {
  RobustLossParams params;
  params.temperature = a.temperature;
  params.include_positive_in_denominator = !a.exclude_positive;
  if (a.batch < 1 || a.dim < 1 || a.points < 1) throw InvalidArgument("sizes must be positive");
  Rng rng(a.seed);
  const auto n = static_cast<std::size_t>(a.batch);
  auto unpack = [n](const std::vector<FeatureVector>& flat) {
    std::vector<FeaturePair> batch(n);
    for (std::size_t i = 0; i < n; ++i) batch[i] = {flat[2 * i], flat[2 * i + 1]};
    return batch;
  };
  const VectorLoss loss = [&](const std::vector<FeatureVector>& flat) {
    return rain_robust_batch_loss(unpack(flat), params);
  };
  const VectorLossGradient grad = [&](const std::vector<FeatureVector>& flat) {
    std::vector<FeatureVector> g;
    for (const FeaturePair& p : rain_robust_batch_loss_gradient(unpack(flat), params)) {
      g.push_back(p.rainy);
      g.push_back(p.clean);
    }
    return g;
  };
  double worst = 0.0;
  Json losses = Json::array();
  for (int k = 0; k < a.points; ++k) {
    std::vector<FeatureVector> point(2 * n, FeatureVector(static_cast<std::size_t>(a.dim)));
    for (auto& v : point) {
      for (double& x : v) x = rng.normal();
    }
    losses.push_back(loss(point));
    worst = std::max(worst, gradient_check(loss, grad, point));
  }
  const bool pass = worst <= a.tolerance;
  out << Json{{"points", a.points},
              {"batch", a.batch},
              {"dim", a.dim},
              {"temperature", a.temperature},
              {"include_positive_in_denominator", params.include_positive_in_denominator},
              {"losses", losses},
              {"max_relative_error", worst},
              {"tolerance", a.tolerance},
              {"pass", pass}}
             .dump(2)
      << "\n";
  return pass ? kExitOk : kExitFailure;
}

struct SplitArgs {
  std::string manifest, out;
  std::vector<double> ratios{kPaperSplitRatios.begin(), kPaperSplitRatios.end()};
  std::uint64_t seed = 0;
};

int cmd_split(const SplitArgs& a, std::ostream& out, std::ostream& err) {
  if (a.ratios.size() != 3) throw InvalidArgument("--ratios takes train,val,test");
  const ManifestState state = load_manifest(a.manifest);
  const SplitAssignment s =
      split_dataset(state, {a.ratios[0], a.ratios[1], a.ratios[2]}, a.seed);
  for (const auto& w : s.warnings) err << "warning: " << w << "\n";
  const std::string text = to_json(s).dump(2) + "\n";
  if (!a.out.empty()) write_text(a.out, text);
  out << text;
  return kExitOk;
}

struct ExportArgs {
  std::string manifest, split, root, out;
};

int cmd_export(const ExportArgs& a, std::ostream& out) {
  const ManifestState state = load_manifest(a.manifest);
  const auto bytes = read_file(a.split);
  const SplitAssignment split = split_from_json(Json::parse(bytes.begin(), bytes.end()));
  const fs::path root = a.root.empty() ? fs::path(a.manifest).parent_path() : fs::path(a.root);
  const ExportSummary s = export_dataset(state, split, root, a.out);
  out << Json{{"out", a.out},
              {"counts", {{"train", s.counts[0]}, {"val", s.counts[1]}, {"test", s.counts[2]}}}}
             .dump(2)
      << "\n";
  return kExitOk;
}

struct ServeArgs {
  std::string manifest, root, host = "127.0.0.1";
  int port = 8080;
};

int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
  const fs::path root = a.root.empty() ? fs::path(a.manifest).parent_path() : fs::path(a.root);
  service::ReviewService svc(a.manifest, root);
  service::HttpServer server(svc);
  const int port = server.bind(a.host, a.port);
  if (port < 0) {
    err << "serve: cannot bind " << a.host << ":" << a.port << "\n";
    return kExitFailure;
  }
  out << Json{{"listening", "http://" + a.host + ":" + std::to_string(port)}}.dump() << std::endl;
  return server.listen() ? kExitOk : kExitFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"rainforge: paired rainy/clean dataset curation", "rainforge"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  AlignArgs align;
  auto* c_align = app.add_subcommand("align", "Align the clean frame of one pair onto the rainy frame");
  c_align->add_option("--rainy", align.rainy, "Rainy frame")->required();
  c_align->add_option("--clean", align.clean, "Clean frame")->required();
  c_align->add_option("--mode", align.mode, "auto, none, homography, elastic or homography+elastic")
      ->check(CLI::IsMember({"auto", "none", "homography", "elastic", "homography+elastic"}));
  c_align->add_option("--out", align.out, "Directory for aligned.png, homography.json, field.dfield");
  c_align->add_option("--config", align.config, "Config file (default $RAINFORGE_CONFIG)");
  c_align->add_option("--seed", align.seed, "RANSAC seed (default: config seed)");

  AssessArgs assess;
  auto* c_assess = app.add_subcommand("assess", "Report collection criteria for one pair");
  c_assess->add_option("--rainy", assess.rainy, "Rainy frame")->required();
  c_assess->add_option("--clean", assess.clean, "Clean frame")->required();
  c_assess->add_option("--rainy-time", assess.rainy_time, "Capture time, ISO-8601 UTC");
  c_assess->add_option("--clean-time", assess.clean_time, "Capture time, ISO-8601 UTC");
  c_assess->add_option("--config", assess.config, "Config file (default $RAINFORGE_CONFIG)");

  PipelineArgs pipe;
  auto* c_pipe = app.add_subcommand("pipeline", "Curate a whole corpus into the manifest");
  c_pipe->add_option("--config", pipe.config, "Config file (default $RAINFORGE_CONFIG)");
  c_pipe->add_option("--threads", pipe.threads, "Worker threads (overrides config)")
      ->check(CLI::PositiveNumber);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Render synthetic rain onto a clean frame");
  c_synth->add_option("--clean", synth.clean, "Clean frame")->required();
  c_synth->add_option("--out", synth.out, "Output rainy frame (.png or .ppm)")->required();
  c_synth->add_option("--seed", synth.seed, "Streak seed");
  c_synth->add_option("--streaks", synth.streaks, "Streaks per layer")->check(CLI::NonNegativeNumber);
  c_synth->add_option("--layers", synth.layers, "Number of streak layers")->check(CLI::NonNegativeNumber);
  c_synth->add_option("--veil", synth.veil, "Veiling strength in [0,1]")->check(CLI::Range(0.0, 1.0));
  c_synth->add_option("--shift", synth.shift, "Camera translation dx,dy")->delimiter(',');
  c_synth->add_option("--provenance", synth.provenance, "Write provenance JSON here too");

  MetricsArgs metrics;
  auto* c_metrics = app.add_subcommand("metrics", "PSNR, SSIM and MS-SSIM of two images");
  c_metrics->add_option("--a", metrics.a, "First image")->required();
  c_metrics->add_option("--b", metrics.b, "Second image")->required();
  c_metrics->add_option("--region", metrics.region, "Restrict to x,y,w,h");

  LossArgs loss;
  auto* c_loss = app.add_subcommand("losscheck", "Check rain-robust loss gradients numerically");
  c_loss->add_option("--seed", loss.seed, "Seed for the random points");
  c_loss->add_option("--batch", loss.batch, "Pairs per batch")->check(CLI::PositiveNumber);
  c_loss->add_option("--dim", loss.dim, "Feature length")->check(CLI::PositiveNumber);
  c_loss->add_option("--points", loss.points, "Random points")->check(CLI::PositiveNumber);
  c_loss->add_option("--temperature", loss.temperature, "Softmax temperature")->check(CLI::PositiveNumber);
  c_loss->add_flag("--exclude-positive", loss.exclude_positive, "Leave the positive out of the denominator");
  c_loss->add_option("--tolerance", loss.tolerance, "Maximum relative error");

  SplitArgs split;
  auto* c_split = app.add_subcommand("split", "Assign accepted pairs to train/val/test by scene");
  c_split->add_option("--manifest", split.manifest, "Manifest (JSON lines)")->required();
  c_split->add_option("--ratios", split.ratios, "train,val,test")->delimiter(',')->expected(3);
  c_split->add_option("--seed", split.seed, "Shuffle seed");
  c_split->add_option("--out", split.out, "Write the assignment here too");

  ServeArgs serve;
  auto* c_serve = app.add_subcommand("serve", "Serve the review API");
  c_serve->add_option("--manifest", serve.manifest, "Manifest (JSON lines)")->required();
  c_serve->add_option("--root", serve.root, "Artifact root (default: manifest directory)");
  c_serve->add_option("--host", serve.host, "Bind address");
  c_serve->add_option("--port", serve.port, "Port, 0 for any")->check(CLI::Range(0, 65535));

  ExportArgs exp;
  auto* c_export = app.add_subcommand("export", "Write accepted pairs into split directories");
  c_export->add_option("--manifest", exp.manifest, "Manifest (JSON lines)")->required();
  c_export->add_option("--split", exp.split, "Split assignment from `split --out`")->required();
  c_export->add_option("--root", exp.root, "Artifact root (default: manifest directory)");
  c_export->add_option("--out", exp.out, "Output directory")->required();

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*c_align) return cmd_align(align, out);
    if (*c_assess) return cmd_assess(assess, out);
    if (*c_pipe) return cmd_pipeline(pipe, out, err);
    if (*c_synth) return cmd_synth(synth, out);
    if (*c_metrics) return cmd_metrics(metrics, out);
    if (*c_loss) return cmd_losscheck(loss, out);
    if (*c_split) return cmd_split(split, out, err);
    if (*c_serve) return cmd_serve(serve, out, err);
    if (*c_export) return cmd_export(exp, out);
  } catch (const ParseError& e) {
    err << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace rainforge::cli
