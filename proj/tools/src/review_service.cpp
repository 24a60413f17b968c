#include "review_service.h"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "rainforge/error.h"
#include "rainforge/export.h"
#include "rainforge/image_io.h"

namespace rainforge::service {

namespace {

using Json = nlohmann::json;

Response json_response(int status, const Json& j) { return {status, "application/json", j.dump()}; }

Response error(int status, const std::string& msg) {
  return json_response(status, {{"error", msg}, {"status", status}});
}

bool parse_int(const Query& q, const std::string& key, int fallback, int lo, int hi, int& out) {
  const auto it = q.find(key);
  if (it == q.end()) {
    out = fallback;
    return true;
  }
  const std::string& s = it->second;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && out >= lo && out <= hi;
}

Image blend(const Image& a, const Image& b) {
  Image out(a.width(), a.height(), a.channels());
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = 0.5 * (a.values()[i] + b.values()[i]);
  return out;
}

Image diff(const Image& a, const Image& b) {
  Image out(a.width(), a.height(), a.channels());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.values()[i] = std::min(1.0, 4.0 * std::abs(a.values()[i] - b.values()[i]));
  }
  return out;
}

}  // namespace

ReviewService::ReviewService(std::filesystem::path manifest, std::filesystem::path artifact_root)
    : writer_(std::move(manifest)), root_(std::move(artifact_root)) {
  writer_.load();  // fail early on a malformed manifest
}

Response ReviewService::list_pairs(const Query& query) const {
  std::optional<PairStatus> filter;
  if (const auto it = query.find("status"); it != query.end() && !it->second.empty()) {
    try {
      filter = status_from_string(it->second);
    } catch (const InvalidArgument& e) {
      return error(400, e.what());
    }
  }
  int page = 0, page_size = 0;
  if (!parse_int(query, "page", 1, 1, 1 << 30, page)) return error(400, "page must be >= 1");
  if (!parse_int(query, "page_size", 50, 1, 500, page_size)) {
    return error(400, "page_size must be in [1, 500]");
  }
  const ManifestState state = writer_.load();
  std::vector<const CurationRecord*> hits;
  for (const CurationRecord& r : state.records) {
    if (!filter || r.status == *filter) hits.push_back(&r);
  }
  Json pairs = Json::array();
  const std::size_t begin = static_cast<std::size_t>(page - 1) * page_size;
  for (std::size_t i = begin; i < hits.size() && i < begin + page_size; ++i) {
    pairs.push_back(to_json(*hits[i]));
  }
  return json_response(200, {{"page", page},
                             {"page_size", page_size},
                             {"total", hits.size()},
                             {"pairs", pairs}});
}

Response ReviewService::get_pair(const std::string& id) const {
  const ManifestState state = writer_.load();
  const CurationRecord* r = state.find(id);
  if (!r) return error(404, "unknown pair " + id);
  return json_response(200, to_json(*r));
}

Response ReviewService::get_image(const std::string& id, const Query& query) const {
  const auto it = query.find("view");
  const std::string view = it == query.end() ? "blend" : it->second;
  if (view != "rainy" && view != "clean" && view != "aligned" && view != "blend" && view != "diff") {
    return error(400, "view must be rainy, clean, aligned, blend or diff");
  }
  const ManifestState state = writer_.load();
  const CurationRecord* r = state.find(id);
  if (!r) return error(404, "unknown pair " + id);
  PairImages imgs;
  try {
    imgs = load_pair_images(*r, root_);
  } catch (const Error& e) {
    return error(500, std::string("cannot load images: ") + e.what());
  }
  if (!imgs.rainy.same_shape(imgs.aligned)) return error(500, "artifact shapes differ");
  Image out;
  if (view == "rainy") {
    out = imgs.rainy;
  } else if (view == "clean") {
    out = imgs.clean;
  } else if (view == "aligned") {
    out = imgs.aligned;
  } else if (view == "blend") {
    out = blend(imgs.rainy, imgs.aligned);
  } else {
    out = diff(imgs.rainy, imgs.aligned);
  }
  const auto png = encode_png(out);
  return {200, "image/png", std::string(png.begin(), png.end())};
}

Response ReviewService::post_review(const std::string& id, const std::string& body) {
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::exception&) {
    return error(400, "body must be JSON");
  }
  if (!j.is_object() || !j.contains("decision") || !j["decision"].is_string()) {
    return error(400, "decision must be 'accept' or 'reject'");
  }
  if (j.contains("note") && !j["note"].is_string()) return error(400, "note must be a string");
  Decision d;
  try {
    d = decision_from_string(j["decision"].get<std::string>());
  } catch (const InvalidArgument& e) {
    return error(400, e.what());
  }
  const std::string note = j.value("note", "");
  try {
    const CurationRecord r = writer_.apply_review(id, d, note, utc_now_iso());
    return json_response(200, to_json(r));
  } catch (const NotFoundError& e) {
    return error(404, e.what());
  } catch (const ConflictError& e) {
    return error(409, e.what());
  }
}

Response ReviewService::stats() const {
  const ManifestState state = writer_.load();
  Json counts = Json::object();
  for (PairStatus s : {PairStatus::kPending, PairStatus::kAutoRejected, PairStatus::kNeedsReview,
                       PairStatus::kAccepted, PairStatus::kRejected}) {
    counts[to_string(s)] = 0;
  }
  for (const CurationRecord& r : state.records) counts[to_string(r.status)] = counts[to_string(r.status)].get<int>() + 1;
  return json_response(200, {{"total", state.records.size()}, {"counts", counts}});
}

Response ReviewService::handle(const std::string& method, const std::string& path,
                               const Query& query, const std::string& body) {
  static const std::string prefix = "/api/pairs";
  try {
    if (path == "/api/stats") return method == "GET" ? stats() : error(405, "method not allowed");
    if (path == prefix) return method == "GET" ? list_pairs(query) : error(405, "method not allowed");
    if (path.rfind(prefix + "/", 0) != 0) return error(404, "no such endpoint");
    std::string rest = path.substr(prefix.size() + 1);
    const auto slash = rest.find('/');
    const std::string id = rest.substr(0, slash);
    const std::string tail = slash == std::string::npos ? "" : rest.substr(slash);
    if (id.empty()) return error(404, "no such endpoint");
    if (tail.empty()) return method == "GET" ? get_pair(id) : error(405, "method not allowed");
    if (tail == "/image") return method == "GET" ? get_image(id, query) : error(405, "method not allowed");
    if (tail == "/review") return method == "POST" ? post_review(id, body) : error(405, "method not allowed");
    return error(404, "no such endpoint");
  } catch (const ParseError& e) {
    return error(500, std::string("manifest unreadable: ") + e.what());
  } catch (const Error& e) {
    return error(500, e.what());
  }
}

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(ReviewService& service) : impl_(std::make_unique<Impl>()) {
  auto adapt = [&service](const httplib::Request& req, httplib::Response& res) {
    Query q;
    for (const auto& [k, v] : req.params) q.emplace(k, v);
    const Response r = service.handle(req.method, req.path, q, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  impl_->server.Get(R"(/api/.*)", adapt);
  impl_->server.Post(R"(/api/.*)", adapt);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace rainforge::service
