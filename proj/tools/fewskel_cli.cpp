#include <csignal>
#include <cstdio>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fewskel/checkpoint.hpp"
#include "fewskel/clip.hpp"
#include "fewskel/error.hpp"
#include "fewskel/evaluation.hpp"
#include "fewskel/file_util.hpp"
#include "fewskel/gam.hpp"
#include "fewskel/geometry.hpp"
#include "fewskel/map_eval.hpp"
#include "fewskel/split.hpp"
#include "fewskel/standardize.hpp"
#include "fewskel/synthetic.hpp"
#include "service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fewskel;

namespace {

constexpr int kExitUsage = 2;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::io:
    case ErrorCode::not_found: return 3;
    case ErrorCode::format_version: return 4;
    case ErrorCode::malformed_json:
    case ErrorCode::joint_count:
    case ErrorCode::non_finite:
    case ErrorCode::missing_joints:
    case ErrorCode::frame_mismatch:
    case ErrorCode::missing_frames:
    case ErrorCode::validation: return 5;
    case ErrorCode::configuration:
    case ErrorCode::split: return 6;
    case ErrorCode::degenerate_reference:
    case ErrorCode::scale_undefined:
    case ErrorCode::contract: return 7;
    case ErrorCode::training_diverged: return 8;
    default: return 1;
  }
}

double to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

// Views a synthetic run draws from: every vertex of the 92-view sphere, or one
// side of its seeded train/test split.
std::vector<CameraAngles> view_set(const std::string& which, std::uint64_t seed) {
  const ViewSphere sphere = icosahedron_vertices(3);
  if (which == "all") {
    std::vector<std::size_t> all(sphere.vertices.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return vertex_angles(sphere, all);
  }
  const ViewSplit split = split_views(sphere, seed);
  if (which == "train") return vertex_angles(sphere, split.train);
  if (which == "test") return vertex_angles(sphere, split.test);
  throw Error(ErrorCode::configuration, "--views must be all, train or test");
}

std::vector<ClipRecord> load_clips(const fs::path& path) {
  std::vector<ClipRecord> clips;
  if (fs::is_regular_file(path)) {
    clips.push_back(load_clip(path));
    return clips;
  }
  if (!fs::is_directory(path)) throw Error(ErrorCode::io, path.string() + " not found");
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(path)) {
    if (e.is_regular_file() && e.path().extension() == ".json" && e.path().filename() != "manifest.json" &&
        e.path().filename() != "topology.json") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files) clips.push_back(load_clip(f));
  return clips;
}

CameraAngles angles_from_json(const json& j) {
  return {j.at("theta").get<double>(), j.at("phi").get<double>()};
}

struct Options {
  std::uint64_t seed = 0;

  // standardize / align / augment
  fs::path in, out, model, templ, manifest;
  std::vector<double> truth;
  bool oracle = false;
  int frequency = 3;

  // synth / train-gam / evaluate
  fs::path data;
  bool synthetic = false;
  int samples = 20;
  double noise = 0.0;
  std::string views = "all";
  int epochs = 300, batch = 64, hidden = GamModel::kDefaultHiddenWidth, views_per_clip = 10;
  double lr = 1e-4, weight_decay = 1e-6;
  std::string mode = "full";
  fs::path history;

  std::string method = "otam", tn = "32";
  int ways = 5, shots = 1, episodes = 200, order = 1;
  bool align = false;
  fs::path json_out;

  // map
  fs::path gt, pred;
  double iou = 0.5;

  // serve
  fs::path root;
  std::string host = "127.0.0.1";
  int port = 8080;
};

int cmd_standardize(const Options& o) {
  ClipRecord clip = load_clip(o.in);
  ClipRecord out = clip_from_sequence(standardize(to_sequence(clip)), clip.provenance);
  out.action = clip.action;
  out.video_id = clip.video_id;
  out.joints2d = clip.joints2d;
  out.globally_aligned = clip.globally_aligned;
  save_clip(out, o.out);
  std::cout << "wrote " << o.out.string() << "\n";
  return 0;
}

int cmd_augment(const Options& o) {
  const ClipRecord clip = load_clip(o.in);
  const SkeletonSequence base = standardize(to_sequence(clip));
  const ViewSphere sphere = icosahedron_vertices(o.frequency);
  fs::create_directories(o.out);
  json manifest = json::array();
  for (std::size_t v = 0; v < sphere.vertices.size(); ++v) {
    const CameraAngles view = angles_from_camera(sphere.vertices[v]);
    ClipRecord out = clip_from_sequence(augment_view(base, view), clip.provenance);
    out.action = clip.action;
    out.video_id = clip.video_id + "_v" + std::to_string(v);
    out.globally_aligned = false;
    const std::string file = out.video_id + ".json";
    save_clip(out, o.out / file);
    manifest.push_back({{"file", file}, {"video_id", out.video_id}, {"vertex", v},
                        {"theta", view.theta}, {"phi", view.phi}});
  }
  write_file_atomic(o.out / "manifest.json", json{{"source", clip.video_id}, {"frequency", o.frequency},
                                                  {"views", manifest}}.dump(1) + "\n");
  std::cout << "wrote " << sphere.vertices.size() << " views to " << o.out.string() << "\n";
  return 0;
}

int cmd_synth(const Options& o) {
  SyntheticConfig cfg;
  cfg.samples_per_class = o.samples;
  cfg.noise = o.noise;
  cfg.seed = o.seed;
  cfg.views = view_set(o.views, o.seed);
  const auto samples = generate_synthetic(cfg);
  json manifest = json::array();
  for (const SyntheticSample& s : samples) {
    ClipRecord clip = s.clip;
    clip.action = s.aligned.label;
    save_clip(clip, clip_path(o.out, clip.action, clip.video_id));
    manifest.push_back({{"video_id", clip.video_id}, {"action", clip.action},
                        {"theta", s.view.theta}, {"phi", s.view.phi}});
  }
  for (const std::string& family : motion_families()) {
    ClipRecord tmpl = clip_from_sequence(synthesize_motion(family), Provenance::synthetic);
    tmpl.action = family;
    tmpl.video_id = family + "_template";
    save_clip(tmpl, o.out / "templates" / (family + ".json"));
  }
  write_file_atomic(o.out / "manifest.json", json{{"seed", o.seed}, {"noise", o.noise},
                                                  {"views", manifest}}.dump(1) + "\n");
  std::cout << "wrote " << samples.size() << " clips to " << o.out.string() << "\n";
  return 0;
}

std::vector<TrainSample> training_set(const Options& o) {
  const std::vector<CameraAngles> views = view_set("train", o.seed);
  std::vector<TrainSample> out;
  if (!o.data.empty()) {
    const BenchmarkSplit split = make_split(scan_dataset(o.data));
    Rng rng = derive_rng(o.seed, 0);
    for (const PrimaryClassSplit& cls : split.primary) {
      for (const int id : cls.train) {
        const ClipRecord clip =
            load_clip(clip_path(o.data, cls.action, cls.action + "_" + std::to_string(id)));
        if (!clip.globally_aligned) {
          throw Error(ErrorCode::validation, clip.video_id + " is not globally aligned");
        }
        const SkeletonSequence aligned = standardize(to_sequence(clip));
        for (int k = 0; k < o.views_per_clip; ++k) {
          out.push_back(make_train_sample(aligned, views[uniform_index(rng, views.size())]));
        }
      }
    }
    return out;
  }
  SyntheticConfig cfg;
  cfg.samples_per_class = o.samples;
  cfg.noise = o.noise;
  cfg.seed = o.seed;
  cfg.views = views;
  for (const SyntheticSample& s : generate_synthetic(cfg)) out.push_back(make_train_sample(s.aligned, s.view));
  return out;
}

int cmd_train(const Options& o) {
  const std::vector<TrainSample> samples = training_set(o);
  TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch;
  cfg.learning_rate = o.lr;
  cfg.weight_decay = o.weight_decay;
  cfg.seed = o.seed;
  if (o.mode == "full") {
    cfg.mode = GradientMode::full;
  } else if (o.mode == "rotation_only") {
    cfg.mode = GradientMode::rotation_only;
  } else {
    throw Error(ErrorCode::configuration, "--mode must be full or rotation_only");
  }
  const GamModel init = GamModel::initialized(o.seed, GamModel::kDefaultInputFrames, o.hidden);
  const TrainResult result = train(init, samples, cfg);
  save_checkpoint(o.out, result.model, cfg.loss);
  if (!o.history.empty()) write_file_atomic(o.history, loss_history_csv(result.history));
  const EpochStats& first = result.history.front();
  const EpochStats& last = result.history.back();
  std::printf("samples %zu, epochs %d, loss %.6g -> %.6g (rot %.6g, rec %.6g)\n", samples.size(),
              cfg.epochs, first.mean_loss, last.mean_loss, last.mean_rot, last.mean_rec);
  std::cout << "wrote " << o.out.string() << "\n";
  return 0;
}

std::optional<CameraAngles> truth_for(const Options& o, const ClipRecord& clip) {
  if (!o.truth.empty()) {
    if (o.truth.size() != 2) throw Error(ErrorCode::configuration, "--truth takes THETA,PHI in radians");
    return CameraAngles{o.truth[0], o.truth[1]};
  }
  if (o.manifest.empty()) return std::nullopt;
  const json m = json::parse(read_file(o.manifest));
  for (const json& v : m.at("views")) {
    if (v.at("video_id").get<std::string>() == clip.video_id) return angles_from_json(v);
  }
  throw Error(ErrorCode::not_found, clip.video_id + " is not listed in " + o.manifest.string());
}

int cmd_align(const Options& o) {
  const ClipRecord clip = load_clip(o.in);
  const SkeletonSequence seq = standardize(to_sequence(clip));
  AlignmentResult result;
  if (o.oracle) {
    if (o.templ.empty()) throw Error(ErrorCode::configuration, "--oracle needs --template");
    const SkeletonSequence tmpl = standardize(to_sequence(load_clip(o.templ)));
    const ViewSphere sphere = icosahedron_vertices(3);
    result = align_sequence([&](const SkeletonSequence& s) { return oracle_estimate(s, tmpl, sphere); }, seq);
  } else {
    if (o.model.empty()) throw Error(ErrorCode::configuration, "align needs --model or --oracle");
    result = align_sequence(load_checkpoint(o.model).model, seq);
  }
  std::printf("theta %.6f rad, phi %.6f rad\n", result.angles.theta, result.angles.phi);
  if (const auto truth = truth_for(o, clip)) {
    std::printf("angular error %.6f deg\n", to_deg(angle_difference(result.angles, *truth)));
  }
  if (!o.out.empty()) {
    ClipRecord out = clip_from_sequence(result.sequence, clip.provenance);
    out.action = clip.action;
    out.video_id = clip.video_id;
    out.globally_aligned = true;
    save_clip(out, o.out);
    std::cout << "wrote " << o.out.string() << "\n";
  }
  return 0;
}

int cmd_evaluate(const Options& o) {
  EvalConfig cfg;
  cfg.method = parse_matching_method(o.method);
  cfg.order = o.order;
  if (o.tn == "all") {
    cfg.t_n = 0;
  } else {
    try {
      cfg.t_n = std::stoi(o.tn);
    } catch (const std::exception&) {
      throw Error(ErrorCode::configuration, "--tn must be a positive integer or all");
    }
    if (cfg.t_n < 1) throw Error(ErrorCode::configuration, "--tn must be a positive integer or all");
  }
  cfg.ways = o.ways;
  cfg.shots = o.shots;
  cfg.episodes = o.episodes;
  cfg.seed = o.seed;
  cfg.align = o.align;

  std::vector<SkeletonSequence> pool;
  if (!o.data.empty()) {
    pool = load_eval_pool(o.data, make_split(scan_dataset(o.data)));
  } else {
    SyntheticConfig sc;
    sc.samples_per_class = o.samples;
    sc.noise = o.noise;
    sc.seed = o.seed;
    sc.views = view_set(o.views, o.seed);
    for (SyntheticSample& s : generate_synthetic(sc)) pool.push_back(std::move(s.observed));
  }
  AngleEstimator aligner;
  if (o.align) {
    if (o.model.empty()) throw Error(ErrorCode::configuration, "--align needs --model");
    auto model = std::make_shared<GamModel>(load_checkpoint(o.model).model);
    aligner = [model](const SkeletonSequence& s) { return predict_angles(*model, s); };
  }
  const EvalReport report = run_evaluation(pool, cfg, aligner);
  std::cout << format_report_table({report});
  if (!o.json_out.empty()) write_file_atomic(o.json_out, report_to_json(report));
  return 0;
}

int cmd_map(const Options& o) {
  const std::vector<ClipRecord> gt = load_clips(o.gt);
  std::vector<PredictedClip> pred;
  for (ClipRecord& c : load_clips(o.pred)) pred.push_back({std::move(c), std::nullopt});
  const MapResult r = compute_map(gt, pred, o.iou);
  for (const auto& [label, ap] : r.per_class_ap) std::printf("  %-24s AP %.2f\n", label.c_str(), 100.0 * ap);
  std::printf("mAP@%.2f %.2f\n", o.iou, r.map);
  return 0;
}

service::AnnotationService* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

int cmd_serve(const Options& o) {
  service::ServiceConfig cfg;
  cfg.root = o.root;
  cfg.seed = o.seed;
  if (!o.model.empty()) cfg.model = o.model;
  service::AnnotationService svc(cfg);
  const int port = svc.bind(o.host, o.port);
  if (port < 0) throw Error(ErrorCode::io, "cannot bind " + o.host + ":" + std::to_string(o.port));
  g_service = &svc;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "listening on http://" << o.host << ":" << port << "\n" << std::flush;
  svc.run();
  g_service = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Skeleton-based few-shot action recognition toolkit"};
  app.require_subcommand(1);
  app.add_option("--seed", o.seed, "Seed for every random stream")->capture_default_str();

  auto* standardize_cmd = app.add_subcommand("standardize", "Center, unify bone lengths and rescale a clip");
  standardize_cmd->add_option("--in", o.in, "Input clip")->required();
  standardize_cmd->add_option("--out", o.out, "Output clip")->required();

  auto* augment_cmd = app.add_subcommand("augment", "Render a clip from every vertex of the view sphere");
  augment_cmd->add_option("--in", o.in, "Globally aligned input clip")->required();
  augment_cmd->add_option("--out", o.out, "Output directory")->required();
  augment_cmd->add_option("--frequency", o.frequency, "Icosahedron frequency")->capture_default_str()
      ->check(CLI::Range(1, 64));

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic dataset in the clip layout");
  synth_cmd->add_option("--out", o.out, "Dataset root")->required();
  synth_cmd->add_option("--samples", o.samples, "Samples per class")->capture_default_str();
  synth_cmd->add_option("--noise", o.noise, "Joint noise std-dev")->capture_default_str();
  synth_cmd->add_option("--views", o.views, "all, train or test")->capture_default_str();

  auto* train_cmd = app.add_subcommand("train-gam", "Train the global alignment network");
  train_cmd->add_option("--out", o.out, "Checkpoint path")->required();
  auto* data_opt = train_cmd->add_option("--data", o.data, "Dataset root of globally aligned clips");
  train_cmd->add_option("--samples", o.samples, "Synthetic samples per class")->excludes(data_opt);
  train_cmd->add_option("--noise", o.noise, "Synthetic joint noise")->excludes(data_opt);
  train_cmd->add_option("--views-per-clip", o.views_per_clip, "Augmented views per dataset clip")
      ->capture_default_str();
  train_cmd->add_option("--epochs", o.epochs)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", o.batch)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", o.lr)->capture_default_str();
  train_cmd->add_option("--weight-decay", o.weight_decay)->capture_default_str();
  train_cmd->add_option("--hidden", o.hidden)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--mode", o.mode, "full or rotation_only")->capture_default_str();
  train_cmd->add_option("--history", o.history, "Per-epoch loss CSV");

  auto* align_cmd = app.add_subcommand("align", "Estimate a clip's view and rotate it into the global frame");
  align_cmd->add_option("--in", o.in, "Input clip")->required();
  align_cmd->add_option("--out", o.out, "Aligned output clip");
  auto* model_opt = align_cmd->add_option("--model", o.model, "GAM checkpoint");
  align_cmd->add_flag("--oracle", o.oracle, "Fit the view against --template instead of a model")
      ->excludes(model_opt);
  align_cmd->add_option("--template", o.templ, "Aligned template clip");
  align_cmd->add_option("--truth", o.truth, "Known view THETA,PHI in radians")->delimiter(',')->expected(2);
  align_cmd->add_option("--manifest", o.manifest, "augment or synth manifest with known views");

  auto* eval_cmd = app.add_subcommand("evaluate", "Run n-way k-shot episodes and print accuracy");
  auto* eval_data = eval_cmd->add_option("--data", o.data, "Dataset root");
  eval_cmd->add_flag("--synthetic", o.synthetic, "Use a synthetic pool (default)")->excludes(eval_data);
  eval_cmd->add_option("--samples", o.samples, "Synthetic samples per class")->capture_default_str();
  eval_cmd->add_option("--noise", o.noise, "Synthetic joint noise")->capture_default_str();
  eval_cmd->add_option("--views", o.views, "Synthetic views: all, train or test")->capture_default_str();
  eval_cmd->add_option("--method", o.method, "mean, dtw or otam")->capture_default_str();
  eval_cmd->add_option("--tn", o.tn, "Segments per sequence, or all")->capture_default_str();
  eval_cmd->add_option("--order", o.order, "Encoding order 0-2")->capture_default_str();
  eval_cmd->add_option("--ways", o.ways)->capture_default_str();
  eval_cmd->add_option("--shots", o.shots)->capture_default_str();
  eval_cmd->add_option("--episodes", o.episodes)->capture_default_str();
  eval_cmd->add_flag("--align", o.align, "Align every sequence with --model first");
  eval_cmd->add_option("--model", o.model, "GAM checkpoint");
  eval_cmd->add_option("--json", o.json_out, "Also write the report as JSON");

  auto* map_cmd = app.add_subcommand("map", "Bounding-box mAP of predicted 2D skeletons");
  map_cmd->add_option("--gt", o.gt, "Ground-truth clip or directory")->required();
  map_cmd->add_option("--pred", o.pred, "Predicted clip or directory")->required();
  map_cmd->add_option("--iou", o.iou, "IoU threshold")->capture_default_str()->check(CLI::Range(0.0, 1.0));

  auto* serve_cmd = app.add_subcommand("serve", "Serve clips and annotation operations over HTTP");
  serve_cmd->add_option("--root", o.root, "Dataset root")->required();
  serve_cmd->add_option("--host", o.host)->capture_default_str();
  serve_cmd->add_option("--port", o.port, "0 picks a free port")->capture_default_str()->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--model", o.model, "GAM checkpoint for /align/preview");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*standardize_cmd) return cmd_standardize(o);
    if (*augment_cmd) return cmd_augment(o);
    if (*synth_cmd) return cmd_synth(o);
    if (*train_cmd) return cmd_train(o);
    if (*align_cmd) return cmd_align(o);
    if (*eval_cmd) return cmd_evaluate(o);
    if (*map_cmd) return cmd_map(o);
    if (*serve_cmd) return cmd_serve(o);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const json::exception& e) {
    std::cerr << "error (malformed_json): " << e.what() << "\n";
    return exit_code(ErrorCode::malformed_json);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
