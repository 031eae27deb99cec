#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "fewskel/error.hpp"
#include "fewskel/log.hpp"
#include "fewskel/matching.hpp"

namespace fewskel {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_nonempty(const DistanceMatrix& d) {
  if (d.rows() == 0 || d.cols() == 0) throw Error(ErrorCode::validation, "empty distance matrix");
}

}  // namespace

DistanceMatrix distance_matrix(const SkeletonEmbedding& query, const SkeletonEmbedding& support) {
  if (query.order != support.order || query.frames.cols() != support.frames.cols()) {
    throw Error(ErrorCode::contract, "embeddings differ in order");
  }
  const Eigen::VectorXd qn = query.frames.rowwise().norm();
  const Eigen::VectorXd sn = support.frames.rowwise().norm();
  DistanceMatrix d;
  d.values = query.frames * support.frames.transpose();
  bool warned = false;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      if (qn[i] == 0.0 || sn[j] == 0.0) {
        d.values(i, j) = 1.0;
        if (!warned) {
          log_warning("zero-norm frame embedding; using distance 1");
          warned = true;
        }
        continue;
      }
      const double cosine = d.values(i, j) / (qn[i] * sn[j]);
      d.values(i, j) = std::clamp(1.0 - cosine, 0.0, 2.0);
    }
  }
  return d;
}

double score_mean(const DistanceMatrix& d) {
  require_nonempty(d);
  return -d.values.mean();
}

PathScore score_dtw(const DistanceMatrix& d) {
  require_nonempty(d);
  const Eigen::Index n = d.rows(), m = d.cols();
  Eigen::MatrixXd cost(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      double prev;
      if (i == 0 && j == 0) {
        prev = 0.0;
      } else {
        prev = kInf;
        if (i > 0 && j > 0) prev = std::min(prev, cost(i - 1, j - 1));
        if (i > 0) prev = std::min(prev, cost(i - 1, j));
        if (j > 0) prev = std::min(prev, cost(i, j - 1));
      }
      cost(i, j) = d(i, j) + prev;
    }
  }

  PathScore out;
  out.score = -cost(n - 1, m - 1);
  Eigen::Index i = n - 1, j = m - 1;
  out.path.emplace_back(static_cast<int>(i), static_cast<int>(j));
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && cost(i - 1, j - 1) <= std::min(i > 0 ? cost(i - 1, j) : kInf,
                                                          j > 0 ? cost(i, j - 1) : kInf)) {
      --i;
      --j;
    } else if (i > 0 && (j == 0 || cost(i - 1, j) <= cost(i, j - 1))) {
      --i;
    } else {
      --j;
    }
    out.path.emplace_back(static_cast<int>(i), static_cast<int>(j));
  }
  std::reverse(out.path.begin(), out.path.end());
  return out;
}

PathScore score_otam(const DistanceMatrix& d) {
  require_nonempty(d);
  if (d.rows() != d.cols()) {
    throw Error(ErrorCode::contract, "OTAM requires a square distance matrix (t_n = all is not supported)");
  }
  const Eigen::Index n = d.rows(), m = d.cols() + 2;
  // Padded column c corresponds to support column c - 1; c = 0 and c = m - 1 cost 0.
  auto cell = [&](Eigen::Index i, Eigen::Index c) {
    return (c == 0 || c == m - 1) ? 0.0 : d(i, c - 1);
  };
  Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(n, m, kInf);
  cost(0, 0) = 0.0;
  for (Eigen::Index c = 1; c < m; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double prev = cost(i, c - 1);
      if (i > 0) prev = std::min(prev, cost(i - 1, c - 1));
      if (prev < kInf) cost(i, c) = cell(i, c) + prev;
    }
  }

  PathScore out;
  out.score = -cost(n - 1, m - 1);
  Eigen::Index i = n - 1;
  for (Eigen::Index c = m - 1; c > 0; --c) {
    if (c != m - 1) out.path.emplace_back(static_cast<int>(i), static_cast<int>(c - 1));
    if (i > 0 && cost(i - 1, c - 1) <= cost(i, c - 1)) --i;
  }
  std::reverse(out.path.begin(), out.path.end());
  return out;
}

std::string_view to_string(MatchingMethod method) noexcept {
  switch (method) {
    case MatchingMethod::mean: return "mean";
    case MatchingMethod::dtw: return "dtw";
    case MatchingMethod::otam: return "otam";
  }
  return "unknown";
}

MatchingMethod parse_matching_method(std::string_view name) {
  if (name == "mean") return MatchingMethod::mean;
  if (name == "dtw") return MatchingMethod::dtw;
  if (name == "otam") return MatchingMethod::otam;
  throw Error(ErrorCode::configuration, "unknown matching method '" + std::string(name) + "'");
}

double match_score(const DistanceMatrix& d, MatchingMethod method) {
  switch (method) {
    case MatchingMethod::mean: return score_mean(d);
    case MatchingMethod::dtw: return score_dtw(d).score;
    case MatchingMethod::otam: return score_otam(d).score;
  }
  throw Error(ErrorCode::configuration, "unknown matching method");
}

std::string best_label(const std::vector<std::pair<std::string, double>>& class_scores) {
  if (class_scores.empty()) throw Error(ErrorCode::validation, "no class scores");
  const std::pair<std::string, double>* best = &class_scores.front();
  for (const auto& entry : class_scores) {
    if (entry.second > best->second || (entry.second == best->second && entry.first < best->first)) {
      best = &entry;
    }
  }
  return best->first;
}

Classification classify(const Episode& episode, MatchingMethod method, int order,
                        BoundaryFill fill) {
  if (episode.supports.empty()) throw Error(ErrorCode::validation, "episode has no support classes");
  const SkeletonEmbedding query = encode(episode.query, order, fill);
  std::map<std::string, double> scores;
  for (const SupportSet& set : episode.supports) {
    if (set.samples.empty()) {
      throw Error(ErrorCode::validation, "support class '" + set.label + "' has no samples");
    }
    double sum = 0.0;
    for (const SegmentSampledSequence& s : set.samples) {
      sum += match_score(distance_matrix(query, encode(s, order, fill)), method);
    }
    scores[set.label] = sum / static_cast<double>(set.samples.size());
  }
  Classification out;
  out.class_scores.assign(scores.begin(), scores.end());
  out.label = best_label(out.class_scores);
  return out;
}

}  // namespace fewskel
