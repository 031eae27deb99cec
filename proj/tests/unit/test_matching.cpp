#include <doctest.h>

#include <algorithm>
#include <set>

#include "fewskel/error.hpp"
#include "fewskel/log.hpp"
#include "fewskel/matching.hpp"
#include "fewskel/standardize.hpp"
#include "matching_oracle.hpp"
#include "test_support.hpp"

using namespace fewskel;
using fewskel::testing::brute_force_dtw;
using fewskel::testing::brute_force_otam;
using fewskel::testing::dyadic_matrix;

namespace {

SkeletonSequence indexed_sequence(int frames) {
  // Frame f carries the value f in every coordinate, so sampled frames reveal their index.
  SkeletonSequence seq;
  seq.label = "indexed";
  for (int f = 0; f < frames; ++f) {
    SkeletonFrame frame = SkeletonFrame::zero();
    for (auto& j : frame.joints) j = Vec3::Constant(f);
    seq.frames.push_back(frame);
  }
  return seq;
}

DistanceMatrix wrap(Eigen::MatrixXd m) { return DistanceMatrix{std::move(m)}; }

bool monotone(const std::vector<PathCell>& path) {
  for (std::size_t k = 1; k < path.size(); ++k) {
    if (path[k].first < path[k - 1].first || path[k].second < path[k - 1].second) return false;
  }
  return true;
}

double path_cost(const DistanceMatrix& d, const std::vector<PathCell>& path) {
  double c = 0.0;
  for (auto [i, j] : path) c += d(i, j);
  return c;
}

SegmentSampledSequence sampled(const SkeletonSequence& seq) { return whole_sequence(seq); }

}  // namespace

TEST_CASE("segment_sample") {
  Rng rng(20);
  SUBCASE("32 frames into 8 segments") {
    const auto s = segment_sample(indexed_sequence(32), 8, rng);
    REQUIRE(s.frames.size() == 8);
    CHECK(s.t_n == 8);
    for (std::size_t k = 0; k < 8; ++k) {
      CHECK(s.source_indices[k] / 4 == k);
      CHECK(s.frames[k].joints[3].x() == static_cast<double>(s.source_indices[k]));
    }
  }
  SUBCASE("remainder goes to earlier segments") {
    // 10 frames into 4 segments: lengths 3,3,2,2 -> starts 0,3,6,8.
    for (int trial = 0; trial < 200; ++trial) {
      const auto s = segment_sample(indexed_sequence(10), 4, rng);
      CHECK(s.source_indices[0] <= 2);
      CHECK((s.source_indices[1] >= 3 && s.source_indices[1] <= 5));
      CHECK((s.source_indices[2] >= 6 && s.source_indices[2] <= 7));
      CHECK(s.source_indices[3] >= 8);
    }
  }
  SUBCASE("short sequence is padded with its last frame") {
    const auto s = segment_sample(indexed_sequence(3), 8, rng);
    const std::vector<std::size_t> expected{0, 1, 2, 2, 2, 2, 2, 2};
    CHECK(s.source_indices == expected);
    CHECK(s.frames.size() == 8);
  }
  SUBCASE("seeded determinism") {
    Rng a(99), b(99);
    const auto seq = indexed_sequence(50);
    CHECK(segment_sample(seq, 8, a).source_indices == segment_sample(seq, 8, b).source_indices);
  }
  SUBCASE("every frame of a segment is reachable") {
    std::set<std::size_t> seen;
    for (int trial = 0; trial < 400; ++trial) {
      seen.insert(segment_sample(indexed_sequence(12), 3, rng).source_indices[1]);
    }
    CHECK(seen == std::set<std::size_t>{4, 5, 6, 7});
  }
  CHECK_THROWS_AS(segment_sample(SkeletonSequence{}, 4, rng), Error);
  CHECK_THROWS_AS(segment_sample(indexed_sequence(4), 0, rng), Error);
}

TEST_CASE("encode") {
  const auto constant = sampled([] {
    SkeletonSequence s = indexed_sequence(1);
    while (s.frames.size() < 6) s.frames.push_back(s.frames[0]);
    s.frames[0].joints[4] = Vec3(0.5, -1, 2);
    for (auto& f : s.frames) f.joints[4] = Vec3(0.5, -1, 2);
    return s;
  }());
  SUBCASE("widths") {
    CHECK(encode(constant, 0).frames.cols() == 51);
    CHECK(encode(constant, 1).frames.cols() == 102);
    CHECK(encode(constant, 2).frames.cols() == 153);
    CHECK_THROWS_AS(encode(constant, 3), Error);
  }
  SUBCASE("constant sequence, order 1") {
    const auto e = encode(constant, 1);
    CHECK((e.frames.row(0).segment(51, 51).array() == 1.0).all());
    for (Eigen::Index f = 1; f < e.frames.rows(); ++f) {
      CHECK((e.frames.row(f).segment(51, 51).array() == 0.0).all());
    }
    const auto z = encode(constant, 1, BoundaryFill::zeros);
    CHECK((z.frames.row(0).segment(51, 51).array() == 0.0).all());
  }
  SUBCASE("order 2 boundary blocks") {
    const auto e = encode(constant, 2);
    CHECK((e.frames.block(0, 102, 2, 51).array() == 1.0).all());
    CHECK((e.frames.block(2, 102, 4, 51).array() == 0.0).all());
  }
  SUBCASE("telescoping and curvature") {
    Rng rng(21);
    const auto seq = sampled(fewskel::testing::random_sequence(rng, 9));
    const auto e = encode(seq, 2);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(51);
    for (Eigen::Index f = 1; f < 9; ++f) sum += e.frames.row(f).segment(51, 51).transpose();
    const Eigen::VectorXd last = e.frames.row(8).segment(0, 51).transpose();
    const Eigen::VectorXd first = e.frames.row(0).segment(0, 51).transpose();
    CHECK((sum - (last - first)).cwiseAbs().maxCoeff() < 1e-12);
    for (Eigen::Index f = 2; f < 9; ++f) {
      const Eigen::RowVectorXd expected =
          e.frames.row(f).segment(51, 51) - e.frames.row(f - 1).segment(51, 51);
      CHECK((e.frames.row(f).segment(102, 51) - expected).cwiseAbs().maxCoeff() < 1e-12);
    }
    for (std::size_t j = 0; j < kJointCount; ++j) {
      CHECK((e.frames.row(3).segment(3 * j, 3).transpose() - seq.frames[3].joints[j]).norm() == 0.0);
    }
  }
}

TEST_CASE("distance_matrix") {
  SkeletonEmbedding a;
  a.order = 0;
  a.frames = Eigen::MatrixXd::Zero(3, 51);
  a.frames(0, 0) = 1.0;
  a.frames(1, 1) = 2.0;
  a.frames(2, 0) = -3.0;
  const DistanceMatrix d = distance_matrix(a, a);
  CHECK(d(0, 0) == 0.0);
  CHECK(d(1, 1) == 0.0);
  CHECK(d(0, 1) == 1.0);
  CHECK(d(0, 2) == 2.0);

  Rng rng(22);
  SkeletonEmbedding q{Eigen::MatrixXd::Random(6, 102), 1};
  SkeletonEmbedding s{Eigen::MatrixXd::Random(6, 102), 1};
  const DistanceMatrix base = distance_matrix(q, s);
  CHECK(base.values.minCoeff() >= 0.0);
  CHECK(base.values.maxCoeff() <= 2.0);
  SkeletonEmbedding scaled = q;
  scaled.frames *= 3.7;
  CHECK((distance_matrix(scaled, s).values - base.values).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(distance_matrix(q, q).values.diagonal().cwiseAbs().maxCoeff() < 1e-12);

  SUBCASE("zero-norm frame") {
    int warnings = 0;
    set_warning_sink([&](std::string_view) { ++warnings; });
    SkeletonEmbedding z = q;
    z.frames.row(2).setZero();
    const DistanceMatrix dz = distance_matrix(z, s);
    set_warning_sink(nullptr);
    CHECK((dz.values.row(2).array() == 1.0).all());
    CHECK(warnings == 1);
  }
  SUBCASE("order mismatch") {
    SkeletonEmbedding other{Eigen::MatrixXd::Random(6, 51), 0};
    CHECK_THROWS_AS(distance_matrix(q, other), Error);
  }
}

TEST_CASE("score_mean") {
  CHECK(score_mean(wrap(Eigen::MatrixXd::Zero(4, 4))) == 0.0);
  CHECK(score_mean(wrap(Eigen::MatrixXd::Ones(4, 4))) == -1.0);
  Rng rng(23);
  const Eigen::MatrixXd m = dyadic_matrix(rng, 5, 5);
  Eigen::PermutationMatrix<Eigen::Dynamic> p(5);
  p.setIdentity();
  std::swap(p.indices()[0], p.indices()[3]);
  CHECK(score_mean(wrap(p * m * p.transpose())) == score_mean(wrap(m)));
  CHECK(score_mean(wrap(m)) == -fewskel::testing::reverse_order_mean(m));
}

TEST_CASE("score_dtw") {
  Eigen::MatrixXd one(1, 1);
  one << 0.25;
  const PathScore single = score_dtw(wrap(one));
  CHECK(single.score == -0.25);
  CHECK(single.path == std::vector<PathCell>{{0, 0}});

  const PathScore ones = score_dtw(wrap(Eigen::MatrixXd::Ones(2, 2)));
  CHECK(ones.score == -2.0);
  CHECK(ones.path == std::vector<PathCell>{{0, 0}, {1, 1}});

  Rng rng(24);
  for (int trial = 0; trial < 100; ++trial) {
    const int r = 1 + static_cast<int>(uniform_index(rng, 5));
    const int c = 1 + static_cast<int>(uniform_index(rng, 5));
    const DistanceMatrix d = wrap(dyadic_matrix(rng, r, c));
    const PathScore got = score_dtw(d);
    CHECK(-got.score == brute_force_dtw(d.values));
    CHECK(monotone(got.path));
    CHECK(got.path.front() == PathCell{0, 0});
    CHECK(got.path.back() == PathCell{r - 1, c - 1});
    CHECK(path_cost(d, got.path) == -got.score);
    for (std::size_t k = 1; k < got.path.size(); ++k) {
      const int di = got.path[k].first - got.path[k - 1].first;
      const int dj = got.path[k].second - got.path[k - 1].second;
      CHECK(di + dj >= 1);
      CHECK(di <= 1);
      CHECK(dj <= 1);
    }
  }
}

TEST_CASE("score_otam") {
  Rng rng(25);
  SUBCASE("zero diagonal scores 0") {
    Eigen::MatrixXd m = dyadic_matrix(rng, 5, 5).array() + 0.5;
    m.diagonal().setZero();
    const PathScore s = score_otam(wrap(m));
    CHECK(s.score == 0.0);
    for (int i = 0; i < 5; ++i) CHECK(s.path[static_cast<std::size_t>(i)] == PathCell{i, i});
  }
  SUBCASE("shifted support") {
    // Query frame i+1 equals support frame i: zeros on the sub-diagonal.
    const int n = 6;
    Eigen::MatrixXd m = Eigen::MatrixXd::Ones(n, n);
    for (int i = 0; i + 1 < n; ++i) m(i + 1, i) = 0.0;
    const PathScore otam = score_otam(wrap(m));
    const PathScore dtw = score_dtw(wrap(m));
    // Every support column is consumed once, so exactly one unmatched
    // boundary column costs a full unit.
    CHECK(otam.score == -1.0);
    CHECK(otam.score == -brute_force_otam(m));
    CHECK(dtw.score == -2.0);
    CHECK(otam.score > dtw.score);
    for (int i = 0; i + 1 < n; ++i) CHECK(otam.path[static_cast<std::size_t>(i)] == PathCell{i + 1, i});
  }
  SUBCASE("brute force agreement") {
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 1 + static_cast<int>(uniform_index(rng, 5));
      const DistanceMatrix d = wrap(dyadic_matrix(rng, n, n));
      const PathScore got = score_otam(d);
      CHECK(-got.score == brute_force_otam(d.values));
      REQUIRE(got.path.size() == static_cast<std::size_t>(n));
      CHECK(monotone(got.path));
      CHECK(path_cost(d, got.path) == -got.score);
      for (int j = 0; j < n; ++j) CHECK(got.path[static_cast<std::size_t>(j)].second == j);
    }
  }
  CHECK_THROWS_AS(score_otam(wrap(Eigen::MatrixXd::Ones(3, 4))), Error);
}

TEST_CASE("matching method names") {
  for (auto m : {MatchingMethod::mean, MatchingMethod::dtw, MatchingMethod::otam}) {
    CHECK(parse_matching_method(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_matching_method("soft-dtw"), Error);
}

namespace {

SkeletonSequence offset_sequence(const SkeletonSequence& base, double amount, int joint) {
  SkeletonSequence s = base;
  for (std::size_t f = 0; f < s.frames.size(); ++f) {
    s.frames[f].joints[joint] += Vec3(amount * std::sin(0.7 * static_cast<double>(f)),
                                      amount, -amount * static_cast<double>(f) * 0.1);
  }
  return s;
}

}  // namespace

TEST_CASE("classify") {
  Rng rng(26);
  const SkeletonSequence base = standardize(fewskel::testing::random_sequence(rng, 10));
  Episode ep;
  ep.query = sampled(base);
  ep.true_label = "b";
  const char* labels[] = {"a", "b", "c"};
  for (int k = 0; k < 3; ++k) {
    SupportSet set;
    set.label = labels[k];
    const double amount = k == 1 ? 0.0 : 0.5 + k;
    set.samples.push_back(sampled(offset_sequence(base, amount, 13)));
    set.samples.push_back(sampled(offset_sequence(base, amount + 0.1, 16)));
    ep.supports.push_back(set);
  }
  for (auto method : {MatchingMethod::mean, MatchingMethod::dtw, MatchingMethod::otam}) {
    const Classification c = classify(ep, method, 1);
    CHECK(c.label == "b");
    REQUIRE(c.class_scores.size() == 3);
    CHECK(c.class_scores[0].first == "a");

    Episode doubled = ep;
    for (auto& set : doubled.supports) {
      const auto copy = set.samples;
      set.samples.insert(set.samples.end(), copy.begin(), copy.end());
    }
    const Classification d = classify(doubled, method, 1);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(d.class_scores[k].second == doctest::Approx(c.class_scores[k].second).epsilon(1e-12));
    }
    auto affine = c.class_scores;
    for (auto& [label, score] : affine) score = 3.0 * score + 11.0;
    CHECK(best_label(affine) == c.label);
  }
  SUBCASE("ties go to the smallest label") {
    CHECK(best_label({{"zeta", -1.0}, {"alpha", -1.0}, {"mid", -2.0}}) == "alpha");
    Episode tie = ep;
    tie.supports[0].samples = tie.supports[1].samples;
    CHECK(classify(tie, MatchingMethod::dtw, 1).label == "a");
  }
}
