#include "service.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include <shared_mutex>

#include <json.hpp>

#include "fewskel/annotation.hpp"
#include "fewskel/checkpoint.hpp"
#include "fewskel/clip.hpp"
#include "fewskel/error.hpp"
#include "fewskel/file_util.hpp"
#include "fewskel/gam.hpp"
#include "fewskel/log.hpp"
#include "fewskel/pose_import.hpp"
#include "fewskel/standardize.hpp"

// After the Eigen-based headers: <resolv.h> defines a _res macro.
#include <httplib.h>

namespace fewskel::service {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Committed state of one clip; replaced wholesale on every accepted write.
struct Snapshot {
  ClipRecord clip;
  std::uint64_t revision = 1;
};

struct ClipEntry {
  fs::path path;
  fs::path frames_dir;
  std::vector<fs::path> frames;
  std::mutex write_guard;
  std::shared_ptr<const Snapshot> committed;

  std::shared_ptr<const Snapshot> load() const { return std::atomic_load(&committed); }
  void publish(std::shared_ptr<const Snapshot> next) { std::atomic_store(&committed, std::move(next)); }
};

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict: return 409;
    case ErrorCode::malformed_json: return 400;
    case ErrorCode::io: return 500;
    default: return 422;
  }
}

void send_json(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body, "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message,
                json extra = json::object()) {
  extra["error"] = std::string(to_string(code));
  extra["message"] = message;
  send_json(res, http_status(code), extra.dump() + "\n");
}

std::string content_type_for(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".png") return "image/png";
  if (ext == ".bmp") return "image/bmp";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  return "application/octet-stream";
}

bool is_image(const fs::path& p) { return content_type_for(p) != "application/octet-stream"; }

json parse_body(const httplib::Request& req) {
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::malformed_json, "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed_json, e.what());
  }
}

std::uint64_t base_revision(const json& body) {
  if (!body.contains("revision") || !body.at("revision").is_number_unsigned()) {
    throw Error(ErrorCode::validation, "body must carry the last-seen \"revision\"");
  }
  return body.at("revision").get<std::uint64_t>();
}

// Annotation payload in canonical form: fixed key order, canonical joints2d.
std::string annotations_body(const Snapshot& s) {
  std::string out = "{\"revision\":" + std::to_string(s.revision) + ",\"frame_count\":" +
                    std::to_string(s.clip.frame_count()) + ",\"joints2d\":";
  if (s.clip.joints2d) {
    std::string j2 = serialize_joints2d(*s.clip.joints2d);
    if (!j2.empty() && j2.back() == '\n') j2.pop_back();
    out += j2;
  } else {
    out += "null";
  }
  out += "}\n";
  return out;
}

Frames2D working_frames(const ClipRecord& clip) {
  if (clip.joints2d) return *clip.joints2d;
  return Frames2D(clip.frame_count());
}

}  // namespace

struct AnnotationService::Impl {
  ServiceConfig config;
  httplib::Server server;
  std::map<std::string, std::unique_ptr<ClipEntry>> clips;  // fixed after start-up
  std::optional<Checkpoint> model;

  explicit Impl(ServiceConfig cfg) : config(std::move(cfg)) {
    discover();
    if (config.model) model = load_checkpoint(*config.model);
    routes();
  }

  void discover() {
    if (!fs::is_directory(config.root)) {
      throw Error(ErrorCode::io, "clip root " + config.root.string() + " not found");
    }
    std::vector<fs::path> files;
    for (const auto& action_dir : fs::directory_iterator(config.root)) {
      if (!action_dir.is_directory()) continue;
      for (const auto& f : fs::directory_iterator(action_dir.path())) {
        if (f.is_regular_file() && f.path().extension() == ".json") files.push_back(f.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const fs::path& file : files) {
      ClipRecord clip;
      try {
        clip = load_clip(file);
      } catch (const Error& e) {
        log_warning("skipping " + file.string() + ": " + e.what());
        continue;
      }
      const std::string id = clip.video_id;
      if (clips.count(id)) {
        log_warning("duplicate clip id '" + id + "' in " + file.string() + "; skipped");
        continue;
      }
      auto entry = std::make_unique<ClipEntry>();
      entry->path = file;
      entry->frames_dir = file.parent_path() / file.stem();
      if (fs::is_directory(entry->frames_dir)) {
        for (const auto& img : fs::directory_iterator(entry->frames_dir)) {
          if (img.is_regular_file() && is_image(img.path())) entry->frames.push_back(img.path());
        }
        std::sort(entry->frames.begin(), entry->frames.end());
      }
      entry->committed = std::make_shared<const Snapshot>(Snapshot{std::move(clip), 1});
      clips.emplace(id, std::move(entry));
    }
  }

  ClipEntry& find(const std::string& id) {
    const auto it = clips.find(id);
    if (it == clips.end()) throw Error(ErrorCode::not_found, "no clip '" + id + "'");
    return *it->second;
  }

  // Serialized read-modify-write: checks the base revision, applies `edit` to
  // a copy, persists atomically, then publishes the new snapshot.
  template <typename Edit>
  std::shared_ptr<const Snapshot> commit(ClipEntry& entry, std::uint64_t base, Edit&& edit) {
    std::lock_guard lock(entry.write_guard);
    const auto current = entry.load();
    if (base != current->revision) {
      throw Error(ErrorCode::conflict, "stale revision " + std::to_string(base) + "; current is " +
                                           std::to_string(current->revision));
    }
    auto next = std::make_shared<Snapshot>(*current);
    edit(next->clip);
    next->revision = current->revision + 1;
    validate_clip(next->clip);
    save_clip(next->clip, entry.path);
    entry.publish(next);
    return next;
  }

  template <typename Fn>
  httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        send_error(res, e.code(), e.what());
      } catch (const std::exception& e) {
        send_error(res, ErrorCode::validation, e.what());
      }
    };
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", config.cors_origin},
                                {"Access-Control-Expose-Headers", "X-Revision"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, PUT, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });

    server.Get("/clips", guarded([this](const httplib::Request&, httplib::Response& res) {
      json list = json::array();
      for (const auto& [id, entry] : clips) {
        const auto snap = entry->load();
        list.push_back({{"id", id},
                        {"action", snap->clip.action},
                        {"frame_count", snap->clip.frame_count()},
                        {"image_count", entry->frames.size()},
                        {"has_joints2d", snap->clip.joints2d.has_value()},
                        {"has_joints3d", snap->clip.joints3d.has_value()},
                        {"provenance", std::string(to_string(snap->clip.provenance))},
                        {"revision", snap->revision}});
      }
      send_json(res, 200, json{{"clips", list}}.dump() + "\n");
    }));

    server.Get(R"(/clips/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto snap = find(req.matches[1]).load();
      res.set_header("X-Revision", std::to_string(snap->revision));
      send_json(res, 200, serialize_clip(snap->clip));
    }));

    server.Get(R"(/clips/([^/]+)/frames/(\d+))",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 ClipEntry& entry = find(req.matches[1]);
                 const std::size_t index = std::stoul(req.matches[2]);
                 if (index >= entry.frames.size()) {
                   throw Error(ErrorCode::not_found, "frame " + std::to_string(index) +
                                                         " out of range (clip has " +
                                                         std::to_string(entry.frames.size()) + ")");
                 }
                 res.set_content(read_file(entry.frames[index]), content_type_for(entry.frames[index]));
               }));

    server.Get(R"(/clips/([^/]+)/annotations)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const auto snap = find(req.matches[1]).load();
                 res.set_header("X-Revision", std::to_string(snap->revision));
                 send_json(res, 200, annotations_body(*snap));
               }));

    server.Put(R"(/clips/([^/]+)/annotations)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 ClipEntry& entry = find(req.matches[1]);
                 const json body = parse_body(req);
                 const std::uint64_t base = base_revision(body);
                 if (!body.contains("joints2d")) throw Error(ErrorCode::validation, "missing joints2d");
                 const Frames2D frames = parse_joints2d(body.at("joints2d").dump());
                 const auto snap = commit(entry, base, [&](ClipRecord& clip) {
                   if (frames.size() != clip.frame_count()) {
                     throw Error(ErrorCode::frame_mismatch,
                                 "joints2d has " + std::to_string(frames.size()) + " frames, clip has " +
                                     std::to_string(clip.frame_count()));
                   }
                   clip.joints2d = frames;
                   clip.provenance = Provenance::manual;
                 });
                 res.set_header("X-Revision", std::to_string(snap->revision));
                 send_json(res, 200, annotations_body(*snap));
               }));

    server.Post(R"(/clips/([^/]+)/interpolate)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  ClipEntry& entry = find(req.matches[1]);
                  const json body = parse_body(req);
                  std::optional<std::size_t> joint;
                  if (body.contains("joint") && !body.at("joint").is_null()) {
                    joint = body.at("joint").get<std::size_t>();
                  }
                  const auto a = body.at("frame_a").get<std::size_t>();
                  const auto b = body.at("frame_b").get<std::size_t>();
                  const auto snap = commit(entry, base_revision(body), [&](ClipRecord& clip) {
                    Frames2D frames = working_frames(clip);
                    interpolate_joints(frames, joint, a, b);
                    clip.joints2d = std::move(frames);
                  });
                  send_json(res, 200, annotations_body(*snap));
                }));

    server.Post(R"(/clips/([^/]+)/smooth)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  ClipEntry& entry = find(req.matches[1]);
                  const json body = parse_body(req);
                  const double sigma = body.value("sigma", 1.0);
                  try {
                    const auto snap = commit(entry, base_revision(body), [&](ClipRecord& clip) {
                      Frames2D frames = working_frames(clip);
                      smooth_joints(frames, sigma);
                      clip.joints2d = std::move(frames);
                    });
                    send_json(res, 200, annotations_body(*snap));
                  } catch (const Error& e) {
                    if (e.code() != ErrorCode::missing_frames) throw;
                    json missing = json::array();
                    const Frames2D frames = working_frames(entry.load()->clip);
                    for (std::size_t f = 0; f < frames.size(); ++f) {
                      bool complete = frames[f].has_value();
                      if (complete) {
                        for (const auto& j : *frames[f]) complete = complete && j.has_value();
                      }
                      if (!complete) missing.push_back(f);
                    }
                    send_error(res, e.code(), e.what(), json{{"missing_frames", missing}});
                  }
                }));

    server.Post(R"(/clips/([^/]+)/import-predictions)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  ClipEntry& entry = find(req.matches[1]);
                  const json body = parse_body(req);
                  if (!body.contains("predictions")) throw Error(ErrorCode::validation, "missing predictions");
                  KeypointMapping mapping = coco_to_human36m();
                  if (body.contains("mapping")) mapping = parse_keypoint_mapping(body.at("mapping").dump());
                  const std::string predictions = body.at("predictions").dump();
                  std::vector<std::size_t> unannotated;
                  const auto snap = commit(entry, base_revision(body), [&](ClipRecord& clip) {
                    ImportOptions opts{clip.action, clip.video_id, clip.frame_count()};
                    const ImportResult r = import_pose_predictions(std::string_view(predictions), mapping, opts);
                    clip.joints2d = r.clip.joints2d;
                    clip.provenance = Provenance::imported;
                    unannotated = r.unannotated_frames;
                  });
                  std::string out = annotations_body(*snap);
                  out.pop_back();  // newline
                  out.pop_back();  // closing brace
                  out += ",\"unannotated_frames\":" + json(unannotated).dump() + "}\n";
                  send_json(res, 200, out);
                }));

    server.Post("/align/preview", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      ClipRecord clip;
      if (body.contains("clip_id")) {
        clip = find(body.at("clip_id").get<std::string>()).load()->clip;
      } else if (body.contains("clip")) {
        clip = parse_clip(body.at("clip").dump());
      } else {
        throw Error(ErrorCode::validation, "body needs clip_id or clip");
      }
      const SkeletonSequence seq = standardize(to_sequence(clip));
      std::string estimator = "none";
      AlignmentResult aligned{seq, {0.0, 0.0}};
      if (model) {
        aligned = align_sequence(model->model, seq);
        estimator = "gam";
      }
      ClipRecord out = clip_from_sequence(aligned.sequence, clip.provenance);
      out.action = clip.action;
      out.video_id = clip.video_id;
      out.globally_aligned = estimator != "none";
      std::string text = serialize_clip(out);
      text.pop_back();
      send_json(res, 200,
                "{\"estimator\":\"" + estimator + "\",\"angles\":" +
                    json{{"theta", aligned.angles.theta}, {"phi", aligned.angles.phi}}.dump() +
                    ",\"clip\":" + text + "}\n");
    }));
  }
};

AnnotationService::AnnotationService(ServiceConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

AnnotationService::~AnnotationService() = default;

int AnnotationService::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool AnnotationService::run() { return impl_->server.listen_after_bind(); }

void AnnotationService::stop() { impl_->server.stop(); }

void AnnotationService::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace fewskel::service
