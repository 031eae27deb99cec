#include "fewskel/split.hpp"

#include <algorithm>

#include "fewskel/error.hpp"

namespace fewskel {

BenchmarkSplit make_split(const std::map<std::string, std::vector<int>>& classes) {
  BenchmarkSplit split;
  for (const auto& [action, raw_ids] : classes) {
    std::vector<int> ids = raw_ids;
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
      throw Error(ErrorCode::split, "class '" + action + "' has duplicate sample ids");
    }
    if (ids.size() == kPrimaryClassSamples) {
      PrimaryClassSplit p;
      p.action = action;
      p.train.assign(ids.begin(), ids.begin() + 10);
      p.validation = {ids[8], ids[9]};
      p.eval.assign(ids.begin() + 10, ids.end());
      split.primary.push_back(std::move(p));
    } else if (ids.size() == kAdditionalClassSamples) {
      split.additional.push_back({action, ids[0], ids[1]});
    } else {
      throw Error(ErrorCode::split, "class '" + action + "' has " + std::to_string(ids.size()) +
                                        " samples; expected 20 (primary) or 2 (additional)");
    }
  }
  return split;
}

std::map<std::string, std::vector<int>> scan_dataset(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw Error(ErrorCode::io, "dataset root " + root.string() + " not found");
  std::map<std::string, std::vector<int>> classes;
  for (const auto& dir : fs::directory_iterator(root)) {
    if (!dir.is_directory()) continue;
    const std::string action = dir.path().filename().string();
    const std::string prefix = action + "_";
    for (const auto& file : fs::directory_iterator(dir.path())) {
      if (!file.is_regular_file() || file.path().extension() != ".json") continue;
      const std::string stem = file.path().stem().string();
      if (stem.rfind(prefix, 0) != 0) continue;
      const std::string index = stem.substr(prefix.size());
      if (index.empty() || !std::all_of(index.begin(), index.end(), ::isdigit)) continue;
      classes[action].push_back(std::stoi(index));
    }
    if (classes.count(action)) std::sort(classes[action].begin(), classes[action].end());
  }
  return classes;
}

}  // namespace fewskel
