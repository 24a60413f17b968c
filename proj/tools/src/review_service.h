#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "rainforge/manifest.h"

namespace rainforge::service {

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

using Query = std::map<std::string, std::string>;

// Request handling for the review API, independent of the HTTP server so it
// can be driven directly in tests. Every request reads the manifest afresh;
// reviews go through one ManifestWriter.
class ReviewService {
 public:
  ReviewService(std::filesystem::path manifest, std::filesystem::path artifact_root);

  Response list_pairs(const Query& query) const;
  Response get_pair(const std::string& id) const;
  Response get_image(const std::string& id, const Query& query) const;
  Response post_review(const std::string& id, const std::string& body);
  Response stats() const;

  // Routes a request by method and path ("/api/...").
  Response handle(const std::string& method, const std::string& path, const Query& query,
                  const std::string& body);

 private:
  ManifestWriter writer_;
  std::filesystem::path root_;
};

// HTTP front end. bind() with port 0 picks a free port and returns it;
// listen() blocks until stop().
class HttpServer {
 public:
  explicit HttpServer(ReviewService& service);
  ~HttpServer();

  int bind(const std::string& host, int port);
  bool listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rainforge::service
