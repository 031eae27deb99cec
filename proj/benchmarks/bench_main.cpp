#include <benchmark/benchmark.h>

#include "fewskel/gam.hpp"
#include "fewskel/geometry.hpp"
#include "fewskel/matching.hpp"
#include "fewskel/random.hpp"
#include "fewskel/synthetic.hpp"

using namespace fewskel;

namespace {

DistanceMatrix random_distances(int n, int m) {
  Rng rng(1);
  DistanceMatrix d;
  d.values.resize(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) d.values(i, j) = uniform(rng, 0.0, 2.0);
  }
  return d;
}

SegmentSampledSequence sampled(const std::string& family, int t_n) {
  Rng rng(2);
  return segment_sample(synthesize_motion(family), t_n, rng);
}

void BM_Dtw(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const DistanceMatrix d = random_distances(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(score_dtw(d).score);
  state.SetComplexityN(n);
}
BENCHMARK(BM_Dtw)->RangeMultiplier(2)->Range(8, 128)->Complexity(benchmark::oNSquared);

void BM_Otam(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const DistanceMatrix d = random_distances(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(score_otam(d).score);
  state.SetComplexityN(n);
}
BENCHMARK(BM_Otam)->RangeMultiplier(2)->Range(8, 128)->Complexity(benchmark::oNSquared);

void BM_Encode(benchmark::State& state) {
  const SegmentSampledSequence s = sampled("wave", 32);
  const int order = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(encode(s, order).frames.data());
}
BENCHMARK(BM_Encode)->DenseRange(0, 2);

void BM_DistanceMatrix(benchmark::State& state) {
  const int order = static_cast<int>(state.range(0));
  const SkeletonEmbedding a = encode(sampled("wave", 32), order);
  const SkeletonEmbedding b = encode(sampled("squat", 32), order);
  for (auto _ : state) benchmark::DoNotOptimize(distance_matrix(a, b).values.data());
}
BENCHMARK(BM_DistanceMatrix)->DenseRange(0, 2);

void BM_Classify5Way5Shot(benchmark::State& state) {
  const auto method = static_cast<MatchingMethod>(state.range(0));
  Episode episode;
  episode.query = sampled("wave", 32);
  episode.true_label = "wave";
  const auto& families = motion_families();
  for (std::size_t c = 0; c < 5; ++c) {
    SupportSet set{families[c], {}};
    for (int k = 0; k < 5; ++k) set.samples.push_back(sampled(families[c], 32));
    episode.supports.push_back(set);
  }
  for (auto _ : state) benchmark::DoNotOptimize(classify(episode, method, 1, BoundaryFill::ones).label.size());
}
BENCHMARK(BM_Classify5Way5Shot)
    ->Arg(static_cast<int>(MatchingMethod::mean))
    ->Arg(static_cast<int>(MatchingMethod::dtw))
    ->Arg(static_cast<int>(MatchingMethod::otam));

void BM_GamForward(benchmark::State& state) {
  const GamModel model = GamModel::initialized(3);
  const SkeletonSequence seq = synthesize_motion("kick");
  for (auto _ : state) benchmark::DoNotOptimize(predict_angles(model, seq).theta);
}
BENCHMARK(BM_GamForward);

void BM_GamTrainStep(benchmark::State& state) {
  const GamModel model = GamModel::initialized(3);
  const TrainSample sample = make_train_sample(synthesize_motion("kick"), {0.7, 0.2});
  std::vector<double> grad(model.parameter_count());
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_loss_and_gradient(model, sample, {}, GradientMode::full, grad).total);
  }
}
BENCHMARK(BM_GamTrainStep);

void BM_OracleEstimate(benchmark::State& state) {
  const ViewSphere sphere = icosahedron_vertices(3);
  const SkeletonSequence g = synthesize_motion("bow");
  const SkeletonSequence aug = augment_view(g, {1.1, -0.4});
  for (auto _ : state) benchmark::DoNotOptimize(oracle_estimate(aug, g, sphere).theta);
}
BENCHMARK(BM_OracleEstimate);

void BM_Icosahedron(benchmark::State& state) {
  const int frequency = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(icosahedron_vertices(frequency).vertices.size());
}
BENCHMARK(BM_Icosahedron)->DenseRange(1, 6);

}  // namespace

BENCHMARK_MAIN();
