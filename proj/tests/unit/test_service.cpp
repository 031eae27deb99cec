#include <doctest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include <json.hpp>

#include "fewskel/annotation.hpp"
#include "fewskel/checkpoint.hpp"
#include "fewskel/clip.hpp"
#include "fewskel/file_util.hpp"
#include "fewskel/gam.hpp"
#include "fewskel/standardize.hpp"
#include "service.hpp"

// After the Eigen-based headers: <resolv.h> defines a _res macro.
#include <httplib.h>

using namespace fewskel;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kFrames = 10;

ClipRecord make_clip(const std::string& action, const std::string& id) {
  ClipRecord clip;
  clip.action = action;
  clip.video_id = id;
  std::vector<Frame3D> j3(kFrames);
  for (std::size_t f = 0; f < kFrames; ++f) {
    for (std::size_t j = 0; j < kJointCount; ++j) {
      j3[f][j] = Point3{0.1 * static_cast<double>(j), 0.05 * static_cast<double>(f) + 0.01 * j, 0.02 * j};
    }
  }
  clip.joints3d = j3;
  return clip;
}

Frame2D full_frame(double x, double y) {
  Frame2D fr{};
  for (std::size_t j = 0; j < kJointCount; ++j) fr[j] = Point2{x + static_cast<double>(j), y};
  return fr;
}

// A dataset root with two clips and three RGB frames for the first, served on
// an ephemeral port for the lifetime of the fixture.
struct Fixture {
  fs::path root;
  std::unique_ptr<service::AnnotationService> svc;
  std::thread thread;
  int port = -1;

  explicit Fixture(std::optional<fs::path> model = std::nullopt) {
    root = fs::temp_directory_path() / ("fewskel_service_" + std::to_string(::getpid()));
    fs::remove_all(root);
    save_clip(make_clip("wave", "wave_0"), clip_path(root, "wave", "wave_0"));
    save_clip(make_clip("jump", "jump_3"), clip_path(root, "jump", "jump_3"));
    fs::create_directories(root / "wave" / "wave_0");
    write_file_atomic(root / "wave" / "wave_0" / "000002.png", "PNG-2");
    write_file_atomic(root / "wave" / "wave_0" / "000000.png", "PNG-0");
    write_file_atomic(root / "wave" / "wave_0" / "000001.jpg", "JPG-1");
    write_file_atomic(root / "wave" / "wave_0" / "notes.txt", "not a frame");
    svc = std::make_unique<service::AnnotationService>(service::ServiceConfig{root, model, "*", 0});
    port = svc->bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    thread = std::thread([this] { svc->run(); });
    svc->wait_until_ready();
  }

  ~Fixture() {
    svc->stop();
    thread.join();
    fs::remove_all(root);
  }

  httplib::Client client() const { return httplib::Client("127.0.0.1", port); }
};

std::string put_body(std::uint64_t revision, const Frames2D& frames) {
  std::string j2 = serialize_joints2d(frames);
  return "{\"revision\":" + std::to_string(revision) + ",\"joints2d\":" + j2 + "}";
}

}  // namespace

TEST_CASE("listing, clip fetch and CORS") {
  Fixture fx;
  auto cli = fx.client();
  auto list = cli.Get("/clips");
  REQUIRE(list);
  CHECK(list->status == 200);
  CHECK(list->get_header_value("Access-Control-Allow-Origin") == "*");
  const json j = json::parse(list->body);
  REQUIRE(j.at("clips").size() == 2);
  CHECK(j["clips"][0]["id"] == "jump_3");
  CHECK(j["clips"][1]["id"] == "wave_0");
  CHECK(j["clips"][1]["image_count"] == 3);
  CHECK(j["clips"][1]["revision"] == 1);

  auto clip = cli.Get("/clips/wave_0");
  REQUIRE(clip);
  CHECK(clip->status == 200);
  CHECK(clip->body == read_file(clip_path(fx.root, "wave", "wave_0")));
  CHECK(clip->get_header_value("X-Revision") == "1");

  auto missing = cli.Get("/clips/nope");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  auto pre = cli.Options("/clips/wave_0/annotations");
  REQUIRE(pre);
  CHECK(pre->status == 204);
  CHECK(pre->get_header_value("Access-Control-Allow-Origin") == "*");
  CHECK(pre->get_header_value("Access-Control-Allow-Methods").find("PUT") != std::string::npos);
}

TEST_CASE("frames are served in name order with their content type") {
  Fixture fx;
  auto cli = fx.client();
  auto f0 = cli.Get("/clips/wave_0/frames/0");
  REQUIRE(f0);
  CHECK(f0->status == 200);
  CHECK(f0->body == "PNG-0");
  CHECK(f0->get_header_value("Content-Type") == "image/png");
  auto f1 = cli.Get("/clips/wave_0/frames/1");
  REQUIRE(f1);
  CHECK(f1->body == "JPG-1");
  CHECK(f1->get_header_value("Content-Type") == "image/jpeg");
  auto out = cli.Get("/clips/wave_0/frames/3");
  REQUIRE(out);
  CHECK(out->status == 404);
  auto none = cli.Get("/clips/jump_3/frames/0");
  REQUIRE(none);
  CHECK(none->status == 404);
}

TEST_CASE("PUT then GET is byte-identical and persisted") {
  Fixture fx;
  auto cli = fx.client();
  Frames2D frames(kFrames);
  frames[0] = full_frame(0.1, 1.0 / 3.0);
  frames[4] = full_frame(5, 6);
  (*frames[4])[3].reset();

  auto put = cli.Put("/clips/wave_0/annotations", put_body(1, frames), "application/json");
  REQUIRE(put);
  CHECK(put->status == 200);
  CHECK(put->get_header_value("X-Revision") == "2");
  auto get = cli.Get("/clips/wave_0/annotations");
  REQUIRE(get);
  CHECK(get->body == put->body);
  const std::string expected = "{\"revision\":2,\"frame_count\":10,\"joints2d\":" +
                               serialize_joints2d(frames) +
                               "}\n";
  CHECK(get->body == expected);

  const ClipRecord on_disk = load_clip(clip_path(fx.root, "wave", "wave_0"));
  REQUIRE(on_disk.joints2d.has_value());
  CHECK(*on_disk.joints2d == frames);
  CHECK(on_disk.provenance == Provenance::manual);

  SUBCASE("stale base revision is rejected") {
    auto stale = cli.Put("/clips/wave_0/annotations", put_body(1, Frames2D(kFrames)), "application/json");
    REQUIRE(stale);
    CHECK(stale->status == 409);
    CHECK(load_clip(clip_path(fx.root, "wave", "wave_0")).joints2d == frames);
  }
  SUBCASE("wrong frame count") {
    auto bad = cli.Put("/clips/wave_0/annotations", put_body(2, Frames2D(3)), "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 422);
  }
  SUBCASE("malformed body") {
    auto bad = cli.Put("/clips/wave_0/annotations", "{\"revision\":", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
  }
  SUBCASE("missing revision") {
    auto bad = cli.Put("/clips/wave_0/annotations", "{\"joints2d\":null}", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 422);
  }
}

TEST_CASE("concurrent PUTs with one base revision: exactly one wins") {
  Fixture fx;
  constexpr int kWriters = 8;
  std::atomic<int> ok{0}, conflict{0}, other{0};
  std::vector<std::thread> writers;
  for (int w = 0; w < kWriters; ++w) {
    writers.emplace_back([&, w] {
      Frames2D frames(kFrames);
      frames[0] = full_frame(w, w);
      auto cli = fx.client();
      auto res = cli.Put("/clips/jump_3/annotations", put_body(1, frames), "application/json");
      if (res && res->status == 200) {
        ++ok;
      } else if (res && res->status == 409) {
        ++conflict;
      } else {
        ++other;
      }
    });
  }
  for (auto& t : writers) t.join();
  CHECK(ok == 1);
  CHECK(conflict == kWriters - 1);
  CHECK(other == 0);
  auto cli = fx.client();
  auto get = cli.Get("/clips/jump_3/annotations");
  REQUIRE(get);
  CHECK(json::parse(get->body)["revision"] == 2);
}

TEST_CASE("interpolate, smooth and import") {
  Fixture fx;
  auto cli = fx.client();
  Frames2D frames(kFrames);
  Frame2D a{}, b{};
  a[5] = Point2{0, 0};
  b[5] = Point2{4, 8};
  frames[2] = a;
  frames[6] = b;
  REQUIRE(cli.Put("/clips/wave_0/annotations", put_body(1, frames), "application/json")->status == 200);

  auto interp = cli.Post("/clips/wave_0/interpolate",
                         R"({"revision":2,"joint":5,"frame_a":2,"frame_b":6})", "application/json");
  REQUIRE(interp);
  CHECK(interp->status == 200);
  const Frames2D after = parse_joints2d(json::parse(interp->body)["joints2d"].dump());
  CHECK((*after[4])[5] == Point2{2, 4});
  CHECK((*after[3])[5] == Point2{1, 2});
  CHECK(json::parse(interp->body)["revision"] == 3);

  SUBCASE("smoothing reports unannotated frames") {
    auto sm = cli.Post("/clips/wave_0/smooth", R"({"revision":3,"sigma":1})", "application/json");
    REQUIRE(sm);
    CHECK(sm->status == 422);
    const json err = json::parse(sm->body);
    CHECK(err["error"] == "missing_frames");
    CHECK(err["missing_frames"] == json({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
  }

  SUBCASE("smoothing an impulse yields the kernel") {
    Frames2D full(kFrames);
    for (std::size_t f = 0; f < kFrames; ++f) full[f] = full_frame(0, 0);
    (*full[5])[2] = Point2{2.0, 1.0};
    REQUIRE(cli.Put("/clips/wave_0/annotations", put_body(3, full), "application/json")->status == 200);
    auto sm = cli.Post("/clips/wave_0/smooth", R"({"revision":4,"sigma":1})", "application/json");
    REQUIRE(sm);
    REQUIRE(sm->status == 200);
    const Frames2D out = parse_joints2d(json::parse(sm->body)["joints2d"].dump());
    const std::vector<double> k = gaussian_kernel(1.0);
    const std::size_t r = k.size() / 2;
    for (std::size_t f = 0; f < kFrames; ++f) {
      const long off = static_cast<long>(f) - 5;
      const double w = std::labs(off) <= static_cast<long>(r) ? k[static_cast<std::size_t>(off + static_cast<long>(r))] : 0.0;
      CHECK((*out[f])[2]->at(1) == doctest::Approx(w).epsilon(1e-9));
      CHECK((*out[f])[2]->at(0) == doctest::Approx(2.0).epsilon(1e-12));
    }
  }

  SUBCASE("import predictions") {
    json dets = json::array();
    for (int f = 0; f < 3; ++f) {
      json kp = json::array();
      for (int k = 0; k < 17; ++k) {
        kp.push_back(10.0 * k + f);
        kp.push_back(100.0 + k);
        kp.push_back(0.9);
      }
      dets.push_back({{"image_id", std::to_string(f) + ".jpg"}, {"keypoints", kp}, {"score", 2.0}});
    }
    auto imp = cli.Post("/clips/wave_0/import-predictions",
                        json{{"revision", 3}, {"predictions", dets}}.dump(), "application/json");
    REQUIRE(imp);
    REQUIRE(imp->status == 200);
    const json body = json::parse(imp->body);
    CHECK(body["revision"] == 4);
    CHECK(body["unannotated_frames"] == json({3, 4, 5, 6, 7, 8, 9}));
    const ClipRecord on_disk = load_clip(clip_path(fx.root, "wave", "wave_0"));
    CHECK(on_disk.provenance == Provenance::imported);
    REQUIRE((*on_disk.joints2d)[1].has_value());
  }
}

TEST_CASE("align preview without a model returns the standardized clip") {
  Fixture fx;
  auto cli = fx.client();
  auto res = cli.Post("/align/preview", R"({"clip_id":"wave_0"})", "application/json");
  REQUIRE(res);
  REQUIRE(res->status == 200);
  const json body = json::parse(res->body);
  CHECK(body["estimator"] == "none");
  CHECK(body["angles"]["theta"] == 0.0);
  const ClipRecord clip = parse_clip(body["clip"].dump());
  REQUIRE(clip.joints3d.has_value());
  CHECK(clip.frame_count() == kFrames);
  CHECK((*clip.joints3d)[0][0] == Point3{0, 0, 0});
  auto bad = cli.Post("/align/preview", "{}", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 422);
}

TEST_CASE("align preview with a model applies its rotation") {
  const fs::path ckpt = fs::temp_directory_path() / ("fewskel_preview_" + std::to_string(::getpid()) + ".json");
  const GamModel model = GamModel::initialized(11, GamModel::kDefaultInputFrames, 8);
  save_checkpoint(ckpt, model, LossConfig{});
  {
    Fixture fx(ckpt);
    auto cli = fx.client();
    auto res = cli.Post("/align/preview", R"({"clip_id":"jump_3"})", "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    const json body = json::parse(res->body);
    CHECK(body["estimator"] == "gam");
    const SkeletonSequence seq = standardize(to_sequence(make_clip("jump", "jump_3")));
    const AlignmentResult expected = align_sequence(model, seq);
    CHECK(body["angles"]["theta"].get<double>() == doctest::Approx(expected.angles.theta).epsilon(1e-12));
    CHECK(body["angles"]["phi"].get<double>() == doctest::Approx(expected.angles.phi).epsilon(1e-12));
    const ClipRecord clip = parse_clip(body["clip"].dump());
    CHECK(clip.globally_aligned);
    const Point3 p = (*clip.joints3d)[3][10];
    const Vec3& e = expected.sequence.frames[3].joints[10];
    CHECK(p[0] == doctest::Approx(e.x()));
    CHECK(p[1] == doctest::Approx(e.y()));
    CHECK(p[2] == doctest::Approx(e.z()));
  }
  fs::remove(ckpt);
}
