#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fewskel/gam.hpp"
#include "fewskel/matching.hpp"
#include "fewskel/split.hpp"

namespace fewskel {

struct EvalConfig {
  MatchingMethod method = MatchingMethod::otam;
  int order = 1;
  int t_n = 32;  // 0 selects every frame ("all"); not valid for OTAM
  int ways = 5;
  int shots = 1;
  int episodes = 200;
  std::uint64_t seed = 0;
  bool align = false;
  BoundaryFill fill = BoundaryFill::ones;
};

struct ClassAccuracy {
  std::string label;
  int correct = 0;
  int total = 0;
  double accuracy = 0.0;
};

struct EvalReport {
  EvalConfig config;
  double accuracy = 0.0;
  std::vector<ClassAccuracy> per_class;  // classes that served as query, by label
};

/// Samples `episodes` n-way k-shot tasks from the pool and classifies each.
/// Every sequence is standardized first; with config.align the estimator
/// rotates it into the global frame. Episode e draws from its own RNG stream
/// derived from (seed, e). Classes with fewer than shots + 1 samples are
/// dropped with a warning.
EvalReport run_evaluation(const std::vector<SkeletonSequence>& pool, const EvalConfig& config,
                          const AngleEstimator& aligner = nullptr);

/// Loads the 3D eval clips (ids 10-19) of every primary class.
std::vector<SkeletonSequence> load_eval_pool(const std::filesystem::path& root,
                                             const BenchmarkSplit& split);

std::string report_to_json(const EvalReport& report);

/// Aligned-column table, one row per report (method, order, t_n, episode shape).
std::string format_report_table(const std::vector<EvalReport>& reports);

}  // namespace fewskel
