#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace fewskel::service {

struct ServiceConfig {
  std::filesystem::path root;               // dataset layout <root>/<action>/<video_id>.json
  std::optional<std::filesystem::path> model;  // GAM checkpoint used by /align/preview
  std::string cors_origin = "*";
  std::uint64_t seed = 0;
};

/// HTTP back end of the annotation tool. Clips are discovered under the root at
/// start-up; RGB frames for a clip live in <root>/<action>/<video_id>/ and are
/// served in file-name order.
class AnnotationService {
 public:
  explicit AnnotationService(ServiceConfig config);
  ~AnnotationService();
  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  /// Binds to the port (0 picks a free one) and returns the bound port, or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  bool run();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fewskel::service
