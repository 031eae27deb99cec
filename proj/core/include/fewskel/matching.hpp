#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fewskel/random.hpp"
#include "fewskel/skeleton.hpp"

namespace fewskel {

struct SegmentSampledSequence {
  std::vector<SkeletonFrame> frames;
  int t_n = 0;
  std::vector<std::size_t> source_indices;  // non-decreasing
  std::string label;
};

/// Splits the sequence into t_n contiguous segments (earlier segments take the
/// remainder frames) and draws one frame uniformly from each. Sequences shorter
/// than t_n are first extended by repeating their last frame.
SegmentSampledSequence segment_sample(const SkeletonSequence& seq, int t_n, Rng& rng);

/// Every frame, in order (the "t_n = all" setting).
SegmentSampledSequence whole_sequence(const SkeletonSequence& seq);

/// Content of the first-frame trajectory (and first two curvature) blocks.
enum class BoundaryFill { ones, zeros };

/// Per-frame rows of [positions | first differences | second differences],
/// truncated to (order + 1) * 51 columns.
struct SkeletonEmbedding {
  Eigen::MatrixXd frames;
  int order = 1;
};

inline constexpr int kFrameBlock = static_cast<int>(kJointCount) * 3;

SkeletonEmbedding encode(const SegmentSampledSequence& seq, int order,
                         BoundaryFill fill = BoundaryFill::ones);

/// Query rows, support columns; entries are 1 - cosine similarity in [0, 2].
struct DistanceMatrix {
  Eigen::MatrixXd values;

  Eigen::Index rows() const noexcept { return values.rows(); }
  Eigen::Index cols() const noexcept { return values.cols(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values(i, j); }
};

/// A zero-norm frame vector is treated as orthogonal to everything (distance 1).
DistanceMatrix distance_matrix(const SkeletonEmbedding& query, const SkeletonEmbedding& support);

using PathCell = std::pair<int, int>;  // (query row, support column)

struct PathScore {
  double score = 0.0;  // minus the summed cost of the path's real cells
  std::vector<PathCell> path;
};

/// Negated mean of all entries; ignores temporal order.
double score_mean(const DistanceMatrix& d);

/// Minimal path from (0,0) to (rows-1, cols-1) with moves down-right, right
/// and down. Both endpoint cells count. Rectangular matrices are allowed.
PathScore score_dtw(const DistanceMatrix& d);

/// Ordered alignment with relaxed boundaries: the matrix gains a zero-cost
/// column on each side, and the path runs from (0, pad-left) to
/// (rows-1, pad-right) using only down-right and right moves. Requires a
/// square matrix. The returned path lists real cells only.
PathScore score_otam(const DistanceMatrix& d);

enum class MatchingMethod { mean, dtw, otam };

std::string_view to_string(MatchingMethod method) noexcept;
MatchingMethod parse_matching_method(std::string_view name);

double match_score(const DistanceMatrix& d, MatchingMethod method);

struct SupportSet {
  std::string label;
  std::vector<SegmentSampledSequence> samples;
};

struct Episode {
  SegmentSampledSequence query;
  std::vector<SupportSet> supports;
  std::string true_label;
};

struct Classification {
  std::string label;
  std::vector<std::pair<std::string, double>> class_scores;  // sorted by label
};

/// Per class, the mean match score over its supports; highest wins, exact ties
/// go to the lexicographically smallest label.
Classification classify(const Episode& episode, MatchingMethod method, int order,
                        BoundaryFill fill = BoundaryFill::ones);

/// Argmax with the same tie rule as classify.
std::string best_label(const std::vector<std::pair<std::string, double>>& class_scores);

}  // namespace fewskel
