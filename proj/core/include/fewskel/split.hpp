#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace fewskel {

inline constexpr std::size_t kPrimaryClassSamples = 20;
inline constexpr std::size_t kAdditionalClassSamples = 2;

struct PrimaryClassSplit {
  std::string action;
  std::vector<int> train;       // first 10 ids
  std::vector<int> validation;  // ids 8 and 9 of train, flagged
  std::vector<int> eval;        // last 10 ids
};

struct OneShotPair {
  std::string action;
  int query = 0;    // smaller index
  int support = 0;
};

struct BenchmarkSplit {
  std::vector<PrimaryClassSplit> primary;
  std::vector<OneShotPair> additional;
};

/// Classes with 20 samples are primary (train 0-9, eval 10-19 by sorted id);
/// classes with 2 samples are one-shot pairs. Anything else is a split error.
BenchmarkSplit make_split(const std::map<std::string, std::vector<int>>& classes);

/// Sample ids per action found under `<root>/<action>/<action>_<index>.json`.
std::map<std::string, std::vector<int>> scan_dataset(const std::filesystem::path& root);

}  // namespace fewskel
