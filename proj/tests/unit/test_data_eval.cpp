#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "fewskel/clip.hpp"
#include "fewskel/error.hpp"
#include "fewskel/evaluation.hpp"
#include "fewskel/file_util.hpp"
#include "fewskel/log.hpp"
#include "fewskel/map_eval.hpp"
#include "fewskel/pose_import.hpp"
#include "fewskel/split.hpp"
#include "fewskel/standardize.hpp"
#include "fewskel/synthetic.hpp"
#include "test_support.hpp"

using namespace fewskel;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::validation;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fewskel_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ClipRecord sample_clip() {
  Rng rng(40);
  ClipRecord clip = clip_from_sequence(fewskel::testing::random_sequence(rng, 3), Provenance::synthetic);
  clip.action = "wave";
  clip.video_id = "wave_3";
  std::vector<std::optional<Frame2D>> frames(3);
  Frame2D f{};
  for (std::size_t j = 0; j < kJointCount; ++j) f[j] = Point2{0.1 * j, -0.5 * j};
  frames[0] = f;
  f[4].reset();
  frames[2] = f;
  clip.joints2d = frames;
  return clip;
}

// A frame whose box is [x0, x0 + w] x [y0, y0 + h] (two corner joints, the rest inside).
Frame2D box_frame(double x0, double y0, double w, double h) {
  Frame2D f{};
  for (std::size_t j = 0; j < kJointCount; ++j) f[j] = Point2{x0 + w / 2, y0 + h / 2};
  f[0] = Point2{x0, y0};
  f[1] = Point2{x0 + w, y0 + h};
  return f;
}

ClipRecord boxes_clip(const std::string& action, const std::string& id,
                      const std::vector<Frame2D>& frames) {
  ClipRecord c;
  c.action = action;
  c.video_id = id;
  std::vector<std::optional<Frame2D>> f(frames.begin(), frames.end());
  c.joints2d = f;
  return c;
}

}  // namespace

TEST_CASE("clip round trip") {
  const ClipRecord clip = sample_clip();
  const std::string text = serialize_clip(clip);
  CHECK(text.rfind("{\"format_version\":1,\"action\":\"wave\",\"video_id\":\"wave_3\","
                   "\"globally_aligned\":false,\"joints2d\":[[[0,0]",
                   0) == 0);
  CHECK(text.find("null") != std::string::npos);
  CHECK(text.find(' ') == std::string::npos);
  CHECK(text.back() == '\n');
  const ClipRecord back = parse_clip(text);
  CHECK(back == clip);
  CHECK(serialize_clip(back) == text);

  const fs::path dir = scratch_dir("clip");
  const fs::path path = clip_path(dir, "wave", "wave_3");
  CHECK(path == dir / "wave" / "wave_3.json");
  save_clip(clip, path);
  CHECK(read_file(path) == text);
  CHECK(load_clip(path) == clip);

  // Re-saving a loaded canonical file reproduces the bytes exactly.
  save_clip(load_clip(path), path);
  CHECK(read_file(path) == text);
  fs::remove_all(dir);
}

TEST_CASE("clip errors carry distinct codes") {
  const ClipRecord clip = sample_clip();
  nlohmann::json j = nlohmann::json::parse(serialize_clip(clip));

  CHECK(code_of([] { parse_clip("{\"format_version\":1,"); }) == ErrorCode::malformed_json);

  nlohmann::json short_frame = j;
  short_frame["joints3d"][1].erase(0);
  CHECK(code_of([&] { parse_clip(short_frame.dump()); }) == ErrorCode::joint_count);

  nlohmann::json neither = j;
  neither["joints2d"] = nullptr;
  neither["joints3d"] = nullptr;
  CHECK(code_of([&] { parse_clip(neither.dump()); }) == ErrorCode::validation);

  std::string huge = j.dump();
  const auto pos = huge.find("[[[", huge.find("joints3d")) + 3;
  huge.insert(pos, "1e400,");
  huge.erase(pos + 6, huge.find(',', pos + 6) - (pos + 6) + 1);
  CHECK(code_of([&] { parse_clip(huge); }) == ErrorCode::non_finite);

  nlohmann::json version = j;
  version["format_version"] = 2;
  CHECK(code_of([&] { parse_clip(version.dump()); }) == ErrorCode::format_version);

  nlohmann::json mismatch = j;
  mismatch["joints2d"].erase(0);
  CHECK(code_of([&] { parse_clip(mismatch.dump()); }) == ErrorCode::frame_mismatch);

  ClipRecord nan = clip;
  (*nan.joints3d)[0][0][1] = std::nan("");
  CHECK(code_of([&] { validate_clip(nan); }) == ErrorCode::non_finite);
  CHECK(code_of([&] { load_clip("/nonexistent/clip.json"); }) == ErrorCode::io);
}

TEST_CASE("clip to sequence") {
  const ClipRecord clip = sample_clip();
  const SkeletonSequence seq = to_sequence(clip);
  CHECK(seq.label == "wave");
  CHECK(seq.video_id == "wave_3");
  CHECK(seq.frames[1].joints[2].y() == (*clip.joints3d)[1][2][1]);

  ClipRecord flat = clip;
  flat.joints3d.reset();
  CHECK(code_of([&] { to_sequence(flat); }) == ErrorCode::missing_joints);
  (*flat.joints2d)[1] = (*flat.joints2d)[0];
  (*flat.joints2d)[2] = (*flat.joints2d)[0];
  const SkeletonSequence planar = to_sequence(flat);
  CHECK(planar.frames[2].joints[5].x() == doctest::Approx(0.5));
  CHECK(planar.frames[2].joints[5].z() == 0.0);
}

TEST_CASE("import_pose_predictions") {
  auto person = [](double score, double offset, int keypoints) {
    nlohmann::json kp = nlohmann::json::array();
    for (int k = 0; k < keypoints; ++k) {
      kp.push_back(offset + k);
      kp.push_back(offset + 100 + k);
      kp.push_back(0.9);
    }
    return nlohmann::json{{"keypoints", kp}, {"score", score}};
  };
  SUBCASE("one person, identity mapping") {
    nlohmann::json dets = nlohmann::json::array();
    for (int f = 0; f < 3; ++f) {
      auto p = person(2.0, 10.0 * f, 17);
      p["image_id"] = "frame_" + std::to_string(f) + ".jpg";
      dets.push_back(p);
    }
    KeypointMapping identity{};
    for (int j = 0; j < 17; ++j) identity[j] = j;
    const ImportResult r = import_pose_predictions(std::string_view(dets.dump()), identity,
                                                   {"wave", "wave_0", std::nullopt});
    REQUIRE(r.clip.joints2d.has_value());
    CHECK(r.clip.joints2d->size() == 3);
    CHECK(r.unannotated_frames.empty());
    for (const auto& f : *r.clip.joints2d) {
      REQUIRE(f.has_value());
      for (const auto& j : *f) CHECK(j.has_value());
    }
    CHECK((*(*r.clip.joints2d)[2])[16]->at(0) == 20.0 + 16);
    CHECK(r.clip.provenance == Provenance::imported);
  }
  SUBCASE("best person wins, gaps are unannotated, extras dropped") {
    nlohmann::json dets = nlohmann::json::array();
    auto low = person(0.5, 0.0, 18);
    low["image_id"] = "00000.jpg";
    auto high = person(1.5, 1000.0, 18);
    high["image_id"] = "00000.jpg";
    auto later = person(1.0, 2000.0, 18);
    later["image_id"] = "00003.jpg";
    dets.push_back(low);
    dets.push_back(high);
    dets.push_back(later);
    // Reversed mapping over the first 17 of 18 external keypoints.
    KeypointMapping reversed{};
    for (int j = 0; j < 17; ++j) reversed[j] = 16 - j;
    const ImportResult r = import_pose_predictions(std::string_view(dets.dump()), reversed,
                                                   {"jump", "jump_1", 5});
    REQUIRE(r.clip.joints2d->size() == 5);
    CHECK(r.unannotated_frames == std::vector<std::size_t>{1, 2, 4});
    const Frame2D& f0 = *(*r.clip.joints2d)[0];
    for (int j = 0; j < 17; ++j) {
      CHECK(f0[j]->at(0) == 1000.0 + (16 - j));
      CHECK(f0[j]->at(1) == 1100.0 + (16 - j));
    }
    CHECK(*r.frame_scores[0] == 1.5);
    CHECK_FALSE(r.frame_scores[1].has_value());
  }
  SUBCASE("COCO mapping leaves unmatched joints missing") {
    nlohmann::json dets = nlohmann::json::array();
    auto p = person(1.0, 0.0, 17);
    p["image_id"] = "img7.png";
    dets.push_back(p);
    const ImportResult r =
        import_pose_predictions(std::string_view(dets.dump()), coco_to_human36m(), {"a", "a_0", std::nullopt});
    REQUIRE(r.clip.joints2d->size() == 8);
    const Frame2D& f = *(*r.clip.joints2d)[7];
    int missing = 0;
    for (const auto& j : f) missing += j ? 0 : 1;
    CHECK(missing == 4);
    CHECK(f[9]->at(0) == 0.0);   // neck <- COCO nose
    CHECK(f[13]->at(0) == 9.0);      // left wrist <- COCO 9
  }
  SUBCASE("mapping files") {
    CHECK(parse_keypoint_mapping("{\"mapping\":[0,1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,-1]}")[16] == -1);
    CHECK(parse_keypoint_mapping("[0,1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16]")[3] == 3);
    CHECK(code_of([] { parse_keypoint_mapping("[0,1]"); }) == ErrorCode::joint_count);
    KeypointMapping bad{};
    bad.fill(40);
    nlohmann::json dets = nlohmann::json::array();
    auto p = person(1.0, 0.0, 17);
    p["image_id"] = "1.jpg";
    dets.push_back(p);
    CHECK(code_of([&] {
            import_pose_predictions(std::string_view(dets.dump()), bad, {"a", "a_0", std::nullopt});
          }) == ErrorCode::joint_count);
  }
}

TEST_CASE("make_split") {
  std::map<std::string, std::vector<int>> classes;
  for (int i = 0; i < 20; ++i) classes["burpee"].push_back(19 - i);
  classes["yoga"] = {1, 0};
  const BenchmarkSplit s = make_split(classes);
  REQUIRE(s.primary.size() == 1);
  CHECK(s.primary[0].train == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  CHECK(s.primary[0].validation == std::vector<int>{8, 9});
  CHECK(s.primary[0].eval == std::vector<int>{10, 11, 12, 13, 14, 15, 16, 17, 18, 19});
  REQUIRE(s.additional.size() == 1);
  CHECK(s.additional[0].query == 0);
  CHECK(s.additional[0].support == 1);

  classes["short"] = std::vector<int>(19);
  for (int i = 0; i < 19; ++i) classes["short"][i] = i;
  CHECK_THROWS_WITH_AS(make_split(classes), doctest::Contains("short"), Error);
  classes.erase("short");
  classes["dup"] = {3, 3};
  CHECK(code_of([&] { make_split(classes); }) == ErrorCode::split);

  const fs::path dir = scratch_dir("split");
  for (int i = 0; i < 2; ++i) {
    fs::create_directories(dir / "hop");
    std::ofstream(dir / "hop" / ("hop_" + std::to_string(i) + ".json")) << "{}";
  }
  std::ofstream(dir / "hop" / "notes.txt") << "ignored";
  const auto found = scan_dataset(dir);
  CHECK(found.at("hop") == std::vector<int>{0, 1});
  fs::remove_all(dir);
  CHECK(code_of([&] { scan_dataset(dir); }) == ErrorCode::io);
}

TEST_CASE("synthetic motions") {
  CHECK(motion_families().size() >= 5);
  for (const std::string& name : motion_families()) {
    const SkeletonSequence s = synthesize_motion(name);
    CHECK(s.aligned);
    CHECK(s.label == name);
    CHECK(fewskel::testing::max_joint_difference(standardize(s), s) < 1e-9);
    // Faces -z: the nose-side neck offset points forward, right hip sits at +x.
    const auto& f0 = s.frames[0].joints;
    CHECK(f0[1].x() > 0.0);
    CHECK(f0[10].y() > f0[0].y());
  }
  CHECK_THROWS_AS(synthesize_motion("moonwalk"), Error);

  SyntheticConfig cfg;
  cfg.classes = {"squat", "wave"};
  cfg.samples_per_class = 3;
  cfg.seed = 5;
  cfg.views = {{0.4, 0.2}};
  const auto a = generate_synthetic(cfg);
  REQUIRE(a.size() == 6);
  CHECK(fewskel::testing::max_joint_difference(a[0].observed, a[1].observed) == 0.0);
  CHECK(a[3].clip.action == "wave");
  CHECK(a[3].clip.video_id == "wave_0");
  CHECK(a[3].clip.provenance == Provenance::synthetic);

  cfg.noise = 0.05;
  cfg.views.clear();
  const auto b = generate_synthetic(cfg);
  const auto b2 = generate_synthetic(cfg);
  CHECK(fewskel::testing::max_joint_difference(b[2].observed, b2[2].observed) == 0.0);
  CHECK(fewskel::testing::max_joint_difference(b[0].aligned, b[1].aligned) > 0.0);
  for (const auto& s : b) {
    const SkeletonSequence recovered = rotate_sequence(rotation_from_angles(s.view), s.observed);
    CHECK(fewskel::testing::max_joint_difference(recovered, s.aligned) < 1e-6);
    REQUIRE(s.observed.source_view.has_value());
    CHECK(angle_difference(*s.observed.source_view, s.view) == 0.0);
  }
}

TEST_CASE("synthetic families are separable under DTW") {
  SyntheticConfig cfg;
  cfg.samples_per_class = 3;
  cfg.noise = 0.02;
  cfg.seed = 6;
  cfg.views = {{0.0, 0.0}};
  const auto samples = generate_synthetic(cfg);
  Rng rng(7);
  double within = 0.0, between = 0.0;
  int nw = 0, nb = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      const auto ei = encode(segment_sample(samples[i].aligned, 16, rng), 1);
      const auto ej = encode(segment_sample(samples[j].aligned, 16, rng), 1);
      const double cost = -score_dtw(distance_matrix(ei, ej)).score;
      if (samples[i].aligned.label == samples[j].aligned.label) {
        within += cost;
        ++nw;
      } else {
        between += cost;
        ++nb;
      }
    }
  }
  CHECK(between / nb > within / nw);
}

TEST_CASE("run_evaluation") {
  SyntheticConfig cfg;
  cfg.samples_per_class = 6;
  cfg.seed = 8;
  cfg.views = {{0.0, 0.0}};
  std::vector<SkeletonSequence> pool;
  for (const auto& s : generate_synthetic(cfg)) pool.push_back(s.aligned);

  EvalConfig ec;
  ec.episodes = 40;
  ec.seed = 7;
  ec.t_n = 16;
  for (auto method : {MatchingMethod::mean, MatchingMethod::dtw, MatchingMethod::otam}) {
    ec.method = method;
    const EvalReport r = run_evaluation(pool, ec);
    CHECK(r.accuracy == 1.0);
    int total = 0;
    for (const auto& c : r.per_class) total += c.total;
    CHECK(total == 40);
  }
  ec.method = MatchingMethod::dtw;
  ec.shots = 5;
  const EvalReport first = run_evaluation(pool, ec);
  const EvalReport second = run_evaluation(pool, ec);
  CHECK(report_to_json(first) == report_to_json(second));
  const auto j = nlohmann::json::parse(report_to_json(first));
  CHECK(j.at("method") == "dtw");
  CHECK(j.at("s_n") == 5);
  CHECK(j.at("n_episodes") == 40);
  const std::string table = format_report_table({first});
  CHECK(table.find("dtw") != std::string::npos);
  CHECK(table.find("5way 5shot") != std::string::npos);

  ec.ways = 11;
  CHECK(code_of([&] { run_evaluation(pool, ec); }) == ErrorCode::configuration);
  ec.ways = 5;
  ec.method = MatchingMethod::otam;
  ec.t_n = 0;
  CHECK(code_of([&] { run_evaluation(pool, ec); }) == ErrorCode::configuration);
  ec.method = MatchingMethod::mean;
  CHECK(run_evaluation(pool, ec).accuracy == 1.0);

  SUBCASE("small classes are excluded with a warning") {
    std::vector<std::string> warnings;
    set_warning_sink([&](std::string_view w) { warnings.emplace_back(w); });
    std::vector<SkeletonSequence> lopsided = pool;
    lopsided.push_back(synthesize_motion("squat"));
    lopsided.back().label = "lonely";
    EvalConfig small;
    small.episodes = 5;
    small.ways = 10;
    const EvalReport r = run_evaluation(lopsided, small);
    set_warning_sink(nullptr);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("lonely") != std::string::npos);
    for (const auto& c : r.per_class) CHECK(c.label != "lonely");
  }
}

TEST_CASE("bbox and iou") {
  const auto box = skeleton_bbox(box_frame(1, 2, 3, 4));
  REQUIRE(box.has_value());
  CHECK(box->x0 == 1.0);
  CHECK(box->y1 == 6.0);
  CHECK(iou(*box, *box) == 1.0);
  CHECK(iou(BBox{0, 0, 2, 2}, BBox{1, 0, 3, 2}) == doctest::Approx(1.0 / 3.0));
  CHECK(iou(BBox{0, 0, 0, 2}, BBox{0, 0, 0, 2}) == 0.0);
  Frame2D empty{};
  CHECK_FALSE(skeleton_bbox(empty).has_value());
}

TEST_CASE("compute_map") {
  // IoUs 0.6, 0.4 and 0.55: the predicted box keeps the height and
  // overlaps a unit-width box by a fraction chosen for each target IoU.
  auto shifted = [](double target) {
    // Two unit squares offset by s overlap (1 - s) / (1 + s) = target.
    const double s = (1 - target) / (1 + target);
    return box_frame(s, 0, 1, 1);
  };
  const ClipRecord gt = boxes_clip("run", "run_0", {box_frame(0, 0, 1, 1), box_frame(0, 0, 1, 1),
                                                      box_frame(0, 0, 1, 1)});
  const ClipRecord pred = boxes_clip("run", "run_0", {shifted(0.6), shifted(0.4), shifted(0.55)});
  const MapResult m = compute_map({gt}, {{pred, std::nullopt}});
  REQUIRE(m.per_class_ap.size() == 1);
  CHECK(m.per_class_ap[0].second == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(m.map == doctest::Approx(200.0 / 3.0));

  CHECK(compute_map({gt}, {{gt, std::nullopt}}).map == 100.0);
  CHECK(compute_map({gt}, {{gt, std::vector<double>{0.9, 0.8, 0.7}}}).map == doctest::Approx(100.0));
  const ClipRecord far = boxes_clip("run", "run_0", {box_frame(5, 5, 1, 1), box_frame(5, 5, 1, 1),
                                                       box_frame(5, 5, 1, 1)});
  CHECK(compute_map({gt}, {{far, std::nullopt}}).map == 0.0);

  // Ranked AP: positives at ranks 1 and 3 of 3 -> (1 + 2/3) / 3.
  const MapResult ranked = compute_map({gt}, {{pred, std::vector<double>{0.9, 0.8, 0.1}}});
  CHECK(ranked.per_class_ap[0].second == doctest::Approx((1.0 + 2.0 / 3.0) / 3.0));

  // Translating both gt and prediction leaves the result unchanged.
  auto translate = [](ClipRecord c, double dx, double dy) {
    for (auto& f : *c.joints2d) {
      for (auto& j : *f) (*j)[0] += dx, (*j)[1] += dy;
    }
    return c;
  };
  CHECK(compute_map({translate(gt, 7, -3)}, {{translate(pred, 7, -3), std::nullopt}}).map ==
        doctest::Approx(m.map));

  ClipRecord truncated = pred;
  truncated.joints2d->pop_back();
  CHECK(code_of([&] { compute_map({gt}, {{truncated, std::nullopt}}); }) == ErrorCode::frame_mismatch);
}
