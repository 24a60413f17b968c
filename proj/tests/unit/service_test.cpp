#include <gtest/gtest.h>

#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fixtures.h"
#include "rainforge/image_io.h"
#include "rainforge/imgproc.h"
#include "rainforge/pipeline.h"
#include "review_service.h"

using namespace rainforge;
using rainforge::service::Response;
using rainforge::service::ReviewService;
using Json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

Image decode(const Response& r) {
  const std::vector<std::uint8_t> bytes(r.body.begin(), r.body.end());
  return decode_png(bytes);
}

double mean_value(const Image& img) {
  double s = 0;
  for (double v : img.values()) s += v;
  return s / static_cast<double>(img.size());
}

// Three pairs run through the pipeline: shifted (needs_review), identical
// (pending), overexposed (auto_rejected).
class ServiceFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    fs::create_directories(dir_ / "in");
    const Image clean = rftest::textured_image(128, 96, 3, 3);
    const Image shifted = warp_homography(clean, Homography::translation(3, -2)).image;
    save_image(shifted, dir_ / "in" / "moved_r.png");
    save_image(clean, dir_ / "in" / "moved_c.png");
    save_image(clean, dir_ / "in" / "still_r.png");
    save_image(clean, dir_ / "in" / "still_c.png");
    save_image(Image(64, 64, 3, 0.98), dir_ / "in" / "hot_r.png");
    save_image(Image(64, 64, 3, 0.98), dir_ / "in" / "hot_c.png");
    PipelineConfig cfg;
    cfg.output_root = dir_ / "out";
    ManifestWriter w(manifest());
    for (const char* id : {"hot", "moved", "still"}) {
      const std::string s = id;
      w.append(run_pair({s, s, dir_ / "in" / (s + "_r.png"), dir_ / "in" / (s + "_c.png"), {}}, cfg));
    }
  }

  fs::path manifest() const { return dir_ / "out" / "manifest.jsonl"; }
  ReviewService service() const { return ReviewService(manifest(), dir_ / "out"); }

  rftest::TempDir dir_{"rf_svc"};
};

}  // namespace

TEST_F(ServiceFixture, ListAndFilter) {
  ReviewService svc = service();
  const Response all = svc.list_pairs({});
  ASSERT_EQ(all.status, 200);
  EXPECT_EQ(all.content_type, "application/json");
  const Json j = Json::parse(all.body);
  EXPECT_EQ(j["total"], 3);
  EXPECT_EQ(j["pairs"].size(), 3u);
  const Json review = Json::parse(svc.list_pairs({{"status", "needs_review"}}).body);
  ASSERT_EQ(review["total"], 1);
  EXPECT_EQ(review["pairs"][0]["pair_id"], "moved");
  EXPECT_EQ(svc.list_pairs({{"status", "bogus"}}).status, 400);
  EXPECT_EQ(svc.list_pairs({{"page", "0"}}).status, 400);
  EXPECT_EQ(svc.list_pairs({{"page_size", "501"}}).status, 400);
}

TEST_F(ServiceFixture, PagingBeyondEndIsEmpty) {
  ReviewService svc = service();
  const Json p1 = Json::parse(svc.list_pairs({{"page_size", "2"}}).body);
  const Json p2 = Json::parse(svc.list_pairs({{"page_size", "2"}, {"page", "2"}}).body);
  const Json p9 = Json::parse(svc.list_pairs({{"page_size", "2"}, {"page", "9"}}).body);
  EXPECT_EQ(p1["pairs"].size(), 2u);
  EXPECT_EQ(p2["pairs"].size(), 1u);
  EXPECT_TRUE(p9["pairs"].empty());
  EXPECT_EQ(p9["total"], 3);
}

TEST_F(ServiceFixture, GetPairMatchesManifest) {
  ReviewService svc = service();
  const Response r = svc.get_pair("moved");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(Json::parse(r.body), to_json(*load_manifest(manifest()).find("moved")));
  EXPECT_EQ(svc.get_pair("nope").status, 404);
}

TEST_F(ServiceFixture, ReviewFlow) {
  ReviewService svc = service();
  EXPECT_EQ(svc.post_review("nope", R"({"decision":"accept"})").status, 404);
  EXPECT_EQ(svc.post_review("moved", R"({"decision":"maybe"})").status, 400);
  EXPECT_EQ(svc.post_review("moved", "not json").status, 400);
  EXPECT_EQ(svc.post_review("hot", R"({"decision":"accept"})").status, 409);

  const Response ok = svc.post_review("moved", R"({"decision":"reject","note":"ghosting"})");
  ASSERT_EQ(ok.status, 200);
  EXPECT_EQ(Json::parse(ok.body)["status"], "rejected");
  const auto size = fs::file_size(manifest());
  EXPECT_EQ(svc.post_review("moved", R"({"decision":"reject","note":"ghosting"})").status, 200);
  EXPECT_EQ(fs::file_size(manifest()), size);

  // Note survives a reload through a fresh service.
  const Json again = Json::parse(service().get_pair("moved").body);
  EXPECT_EQ(again["status"], "rejected");
  EXPECT_EQ(again["review"]["note"], "ghosting");
  EXPECT_EQ(again, to_json(*load_manifest(manifest()).find("moved")));
}

TEST_F(ServiceFixture, Stats) {
  ReviewService svc = service();
  svc.post_review("still", R"({"decision":"accept"})");
  const Json s = Json::parse(svc.stats().body);
  EXPECT_EQ(s["total"], 3);
  EXPECT_EQ(s["counts"]["accepted"], 1);
  EXPECT_EQ(s["counts"]["needs_review"], 1);
  EXPECT_EQ(s["counts"]["auto_rejected"], 1);
  EXPECT_EQ(s["counts"]["pending"], 0);
  EXPECT_EQ(s["counts"]["rejected"], 0);
}

TEST_F(ServiceFixture, ImageViews) {
  ReviewService svc = service();
  const Response blend = svc.get_image("still", {});
  ASSERT_EQ(blend.status, 200);
  EXPECT_EQ(blend.content_type, "image/png");
  // Identical pair: the blend is the source image, byte for byte.
  EXPECT_EQ(blend.body, svc.get_image("still", {{"view", "rainy"}}).body);
  EXPECT_EQ(blend.body, svc.get_image("still", {{"view", "clean"}}).body);
  const Image diff = decode(svc.get_image("still", {{"view", "diff"}}));
  for (double v : diff.values()) EXPECT_EQ(v, 0.0);
  const Image rainy = decode(svc.get_image("moved", {{"view", "rainy"}}));
  EXPECT_EQ(rainy.width(), 128);
  EXPECT_EQ(svc.get_image("moved", {{"view", "sideways"}}).status, 400);
  EXPECT_EQ(svc.get_image("nope", {}).status, 404);
}

TEST_F(ServiceFixture, DiffDropsAfterAlignment) {
  ReviewService svc = service();
  const Image post = decode(svc.get_image("moved", {{"view", "diff"}}));
  // Same pair with the alignment artifacts removed from the record.
  CurationRecord pre = *load_manifest(manifest()).find("moved");
  ASSERT_TRUE(pre.aligned_ref);
  pre.aligned_ref.reset();
  pre.field_ref.reset();
  pre.homography.reset();
  pre.correction_mode = CorrectionMode::kNone;
  pre.pair_id = "moved_pre";
  ManifestWriter(manifest()).append(pre);
  const Image before = decode(svc.get_image("moved_pre", {{"view", "diff"}}));
  EXPECT_LT(mean_value(post), mean_value(before));
}

TEST_F(ServiceFixture, Routing) {
  ReviewService svc = service();
  EXPECT_EQ(svc.handle("GET", "/api/pairs", {}, "").status, 200);
  EXPECT_EQ(svc.handle("GET", "/api/pairs/moved", {}, "").status, 200);
  EXPECT_EQ(svc.handle("GET", "/api/pairs/moved/image", {{"view", "aligned"}}, "").status, 200);
  EXPECT_EQ(svc.handle("POST", "/api/pairs/still/review", {}, R"({"decision":"accept"})").status, 200);
  EXPECT_EQ(svc.handle("GET", "/api/stats", {}, "").status, 200);
  EXPECT_EQ(svc.handle("DELETE", "/api/pairs/moved", {}, "").status, 405);
  EXPECT_EQ(svc.handle("GET", "/api/elsewhere", {}, "").status, 404);
}

TEST_F(ServiceFixture, OverLoopbackHttp) {
  ReviewService svc = service();
  service::HttpServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  std::jthread t([&] { server.listen(); });
  httplib::Client client("127.0.0.1", port);
  client.set_connection_timeout(5);

  auto list = client.Get("/api/pairs?status=needs_review");
  ASSERT_TRUE(list);
  EXPECT_EQ(list->status, 200);
  EXPECT_EQ(Json::parse(list->body)["total"], 1);

  auto img = client.Get("/api/pairs/still/image?view=blend");
  ASSERT_TRUE(img);
  EXPECT_EQ(img->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(img->body, svc.get_image("still", {{"view", "rainy"}}).body);

  auto conflict = client.Post("/api/pairs/hot/review", R"({"decision":"accept"})", "application/json");
  ASSERT_TRUE(conflict);
  EXPECT_EQ(conflict->status, 409);
  auto missing = client.Get("/api/pairs/nope");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);

  auto accept = client.Post("/api/pairs/moved/review", R"({"decision":"accept","note":"ok"})", "application/json");
  ASSERT_TRUE(accept);
  EXPECT_EQ(accept->status, 200);
  auto pair = client.Get("/api/pairs/moved");
  ASSERT_TRUE(pair);
  EXPECT_EQ(Json::parse(pair->body)["status"], "accepted");
  auto stats = client.Get("/api/stats");
  ASSERT_TRUE(stats);
  EXPECT_EQ(Json::parse(stats->body)["counts"]["accepted"], 1);
  server.stop();
}
