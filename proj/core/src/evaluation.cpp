#include "fewskel/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "detail/number_format.hpp"
#include "fewskel/clip.hpp"
#include "fewskel/error.hpp"
#include "fewskel/log.hpp"
#include "fewskel/standardize.hpp"

namespace fewskel {
namespace {

SegmentSampledSequence sample(const SkeletonSequence& seq, int t_n, Rng& rng) {
  return t_n == 0 ? whole_sequence(seq) : segment_sample(seq, t_n, rng);
}

std::string tn_label(int t_n) { return t_n == 0 ? "all" : std::to_string(t_n); }

}  // namespace

EvalReport run_evaluation(const std::vector<SkeletonSequence>& pool, const EvalConfig& config,
                          const AngleEstimator& aligner) {
  if (config.ways < 1 || config.shots < 1 || config.episodes < 1 || config.t_n < 0) {
    throw Error(ErrorCode::configuration, "ways, shots, episodes must be positive and t_n >= 0");
  }
  if (config.t_n == 0 && config.method == MatchingMethod::otam) {
    throw Error(ErrorCode::configuration, "t_n = all is not supported for OTAM");
  }
  if (config.align && !aligner) {
    throw Error(ErrorCode::configuration, "alignment requested without an angle estimator");
  }

  std::map<std::string, std::vector<SkeletonSequence>> by_class;
  for (const SkeletonSequence& raw : pool) {
    SkeletonSequence seq = standardize(raw);
    if (config.align) seq = align_sequence(aligner, seq).sequence;
    by_class[raw.label].push_back(std::move(seq));
  }
  std::vector<std::string> classes;
  for (const auto& [label, seqs] : by_class) {
    if (static_cast<int>(seqs.size()) < config.shots + 1) {
      log_warning("class '" + label + "' has " + std::to_string(seqs.size()) +
                  " samples, fewer than shots + 1; excluded");
      continue;
    }
    classes.push_back(label);
  }
  if (static_cast<int>(classes.size()) < config.ways) {
    throw Error(ErrorCode::configuration, std::to_string(config.ways) + "-way episodes need " +
                                              std::to_string(config.ways) + " classes, have " +
                                              std::to_string(classes.size()));
  }

  std::map<std::string, ClassAccuracy> per_class;
  int correct = 0;
  for (int e = 0; e < config.episodes; ++e) {
    Rng rng = derive_rng(config.seed, static_cast<std::uint64_t>(e));
    std::vector<std::size_t> class_order(classes.size());
    for (std::size_t i = 0; i < class_order.size(); ++i) class_order[i] = i;
    shuffle(std::span<std::size_t>(class_order), rng);
    class_order.resize(static_cast<std::size_t>(config.ways));

    Episode episode;
    for (std::size_t w = 0; w < class_order.size(); ++w) {
      const std::string& label = classes[class_order[w]];
      const auto& seqs = by_class.at(label);
      std::vector<std::size_t> picks(seqs.size());
      for (std::size_t i = 0; i < picks.size(); ++i) picks[i] = i;
      shuffle(std::span<std::size_t>(picks), rng);
      SupportSet set{label, {}};
      std::size_t next = 0;
      if (w == 0) {
        // The first drawn class provides the query.
        episode.true_label = label;
        episode.query = sample(seqs[picks[next++]], config.t_n, rng);
      }
      for (int k = 0; k < config.shots; ++k) {
        set.samples.push_back(sample(seqs[picks[next++]], config.t_n, rng));
      }
      episode.supports.push_back(std::move(set));
    }

    const Classification result = classify(episode, config.method, config.order, config.fill);
    ClassAccuracy& acc = per_class[episode.true_label];
    acc.label = episode.true_label;
    ++acc.total;
    if (result.label == episode.true_label) {
      ++acc.correct;
      ++correct;
    }
  }

  EvalReport report;
  report.config = config;
  report.accuracy = static_cast<double>(correct) / config.episodes;
  for (auto& [label, acc] : per_class) {
    acc.accuracy = static_cast<double>(acc.correct) / acc.total;
    report.per_class.push_back(acc);
  }
  return report;
}

std::vector<SkeletonSequence> load_eval_pool(const std::filesystem::path& root,
                                             const BenchmarkSplit& split) {
  std::vector<SkeletonSequence> pool;
  for (const PrimaryClassSplit& cls : split.primary) {
    for (const int id : cls.eval) {
      const std::string video_id = cls.action + "_" + std::to_string(id);
      const ClipRecord clip = load_clip(clip_path(root, cls.action, video_id));
      if (!clip.joints3d) {
        throw Error(ErrorCode::missing_joints, video_id + " has no 3D joints");
      }
      SkeletonSequence seq = to_sequence(clip);
      seq.label = cls.action;
      pool.push_back(std::move(seq));
    }
  }
  return pool;
}

std::string report_to_json(const EvalReport& r) {
  std::string out = "{\"method\":\"" + std::string(to_string(r.config.method)) + "\"";
  out += ",\"order\":" + std::to_string(r.config.order);
  out += ",\"t_n\":";
  out += r.config.t_n == 0 ? "\"all\"" : std::to_string(r.config.t_n);
  out += ",\"w_n\":" + std::to_string(r.config.ways);
  out += ",\"s_n\":" + std::to_string(r.config.shots);
  out += ",\"n_episodes\":" + std::to_string(r.config.episodes);
  out += ",\"align\":";
  out += r.config.align ? "true" : "false";
  out += ",\"seed\":" + std::to_string(r.config.seed);
  out += ",\"accuracy\":";
  detail::append_double(out, r.accuracy);
  out += ",\"per_class\":[";
  for (std::size_t i = 0; i < r.per_class.size(); ++i) {
    const ClassAccuracy& c = r.per_class[i];
    if (i) out += ',';
    out += "{\"label\":";
    detail::append_json_string(out, c.label);
    out += ",\"correct\":" + std::to_string(c.correct) + ",\"total\":" + std::to_string(c.total) +
           ",\"accuracy\":";
    detail::append_double(out, c.accuracy);
    out += '}';
  }
  out += "]}\n";
  return out;
}

std::string format_report_table(const std::vector<EvalReport>& reports) {
  char line[160];
  std::string out;
  std::snprintf(line, sizeof line, "%-6s %-5s %-5s %-12s %-6s %-9s %s\n", "method", "order", "t_n",
                "episode", "align", "episodes", "accuracy(%)");
  out += line;
  for (const EvalReport& r : reports) {
    const std::string shape =
        std::to_string(r.config.ways) + "way " + std::to_string(r.config.shots) + "shot";
    std::snprintf(line, sizeof line, "%-6s %-5d %-5s %-12s %-6s %-9d %.1f\n",
                  std::string(to_string(r.config.method)).c_str(), r.config.order,
                  tn_label(r.config.t_n).c_str(), shape.c_str(), r.config.align ? "yes" : "no",
                  r.config.episodes, 100.0 * r.accuracy);
    out += line;
  }
  if (reports.size() == 1 && !reports.front().per_class.empty()) {
    out += "\nper-class accuracy(%)\n";
    for (const ClassAccuracy& c : reports.front().per_class) {
      std::snprintf(line, sizeof line, "  %-24s %6.1f  (%d/%d)\n", c.label.c_str(),
                    100.0 * c.accuracy, c.correct, c.total);
      out += line;
    }
  }
  return out;
}

}  // namespace fewskel
