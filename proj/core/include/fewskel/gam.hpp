#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fewskel/geometry.hpp"
#include "fewskel/skeleton.hpp"

namespace fewskel {

struct LossConfig {
  double w1 = 10.0;  // rotation loss weight
  double w2 = 1.0;   // reconstruction loss weight
};

/// Global alignment model: a one-hidden-layer tanh MLP mapping the first
/// `input_frames` standardized frames to (cos theta, sin theta, cos phi, sin phi).
///
/// Parameter layout: W1 (hidden x input, row-major), b1, W2 (4 x hidden,
/// row-major), b2.
class GamModel {
 public:
  static constexpr int kDefaultInputFrames = 8;
  static constexpr int kDefaultHiddenWidth = 128;
  static constexpr int kOutputs = 4;

  /// All-zero parameters.
  explicit GamModel(int input_frames = kDefaultInputFrames,
                    int hidden_width = kDefaultHiddenWidth);

  /// Glorot-uniform weights, zero biases.
  static GamModel initialized(std::uint64_t seed, int input_frames = kDefaultInputFrames,
                              int hidden_width = kDefaultHiddenWidth);

  int input_frames() const noexcept { return input_frames_; }
  int hidden_width() const noexcept { return hidden_width_; }
  int input_size() const noexcept { return input_frames_ * static_cast<int>(kJointCount) * 3; }
  std::size_t parameter_count() const noexcept { return params_.size(); }
  std::uint64_t seed() const noexcept { return seed_; }
  void set_seed(std::uint64_t seed) noexcept { seed_ = seed; }

  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> parameters() noexcept { return params_; }
  void set_parameters(std::vector<double> params);

  Eigen::Vector4d forward(const Eigen::VectorXd& input) const;

  /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(raw outputs).
  void backward(const Eigen::VectorXd& input, const Eigen::Vector4d& d_raw,
                std::span<double> grad) const;

 private:
  void check_input(const Eigen::VectorXd& input) const;

  int input_frames_;
  int hidden_width_;
  std::uint64_t seed_ = 0;
  std::vector<double> params_;
};

/// Flattened first `input_frames` frames; short sequences repeat their last frame.
Eigen::VectorXd gam_input(const SkeletonSequence& seq, int input_frames);

struct AngleDecoding {
  CameraAngles angles;
  bool degenerate = false;
};

/// Normalizes each (cos, sin) pair and recovers the angle with atan2. The
/// altitude uses |cos phi| so it stays in [-pi/2, pi/2]. A zero-length pair
/// decodes to 0 and sets `degenerate`.
AngleDecoding decode_angles(const Eigen::Vector4d& raw);

CameraAngles predict_angles(const GamModel& model, const SkeletonSequence& seq);

/// Mean over (theta, phi) of squared cosine differences plus the same for sines.
double rot_loss(const CameraAngles& pred, const CameraAngles& gt);

/// RMSE over all joint coordinates between R(pred)^T * aligned and augmented.
double rec_loss(const SkeletonSequence& aligned, const SkeletonSequence& augmented,
                const CameraAngles& pred);

double total_loss(double rot, double rec, const LossConfig& cfg = {});

struct TrainSample {
  SkeletonSequence input;   // augmented view S_A
  CameraAngles target;      // ground-truth view
  SkeletonSequence source;  // aligned sequence S_G
};

TrainSample make_train_sample(const SkeletonSequence& aligned, const CameraAngles& view);

struct LossBreakdown {
  double total = 0.0;
  double rot = 0.0;
  double rec = 0.0;
};

enum class GradientMode {
  full,           // rotation + reconstruction gradients
  rotation_only,  // reconstruction is monitored only
};

LossBreakdown sample_loss(const GamModel& model, const TrainSample& sample,
                          const LossConfig& cfg = {});

/// Loss of one sample; adds its parameter gradient into `grad`.
LossBreakdown sample_loss_and_gradient(const GamModel& model, const TrainSample& sample,
                                       const LossConfig& cfg, GradientMode mode,
                                       std::span<double> grad);

struct TrainConfig {
  int epochs = 300;
  int batch_size = 64;
  double learning_rate = 1e-4;
  double weight_decay = 1e-6;
  std::uint64_t seed = 0;
  GradientMode mode = GradientMode::full;
  LossConfig loss;
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double mean_rot = 0.0;
  double mean_rec = 0.0;
};

struct TrainResult {
  GamModel model;
  std::vector<EpochStats> history;
};

/// Mini-batch Adam on w1 * rot + w2 * rec. Deterministic for a given seed.
/// Throws training_diverged on a non-finite loss.
TrainResult train(GamModel model, const std::vector<TrainSample>& samples,
                  const TrainConfig& cfg);

/// Derivative-free view estimate against a known aligned template: best
/// sphere vertex by reconstruction error (lowest index on ties), then
/// coordinate descent on (theta, phi) with step halving down to 1e-4 rad.
CameraAngles oracle_estimate(const SkeletonSequence& augmented,
                             const SkeletonSequence& aligned_template,
                             const ViewSphere& sphere);

using AngleEstimator = std::function<CameraAngles(const SkeletonSequence&)>;

struct AlignmentResult {
  SkeletonSequence sequence;
  CameraAngles angles;
};

/// Estimates one view from the start of the sequence and applies the single
/// rotation R(view) to every frame.
AlignmentResult align_sequence(const AngleEstimator& estimator, const SkeletonSequence& seq);
AlignmentResult align_sequence(const GamModel& model, const SkeletonSequence& seq);

}  // namespace fewskel
