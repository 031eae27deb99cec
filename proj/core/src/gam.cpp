#include "fewskel/gam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "fewskel/error.hpp"
#include "fewskel/log.hpp"
#include "fewskel/random.hpp"

namespace fewskel {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using MatMap = Eigen::Map<RowMatrix>;

constexpr double kPairEpsilon = 1e-24;

struct Layout {
  std::size_t w1, b1, w2, b2, total;
};

Layout layout(int input, int hidden) {
  Layout l{};
  l.w1 = 0;
  l.b1 = l.w1 + static_cast<std::size_t>(input) * hidden;
  l.w2 = l.b1 + hidden;
  l.b2 = l.w2 + static_cast<std::size_t>(GamModel::kOutputs) * hidden;
  l.total = l.b2 + GamModel::kOutputs;
  return l;
}

// d(loss)/d(theta, phi) -> d(loss)/d(raw) through the atan2 decoding.
Eigen::Vector4d raw_gradient(const Eigen::Vector4d& raw, double d_theta, double d_phi) {
  Eigen::Vector4d g = Eigen::Vector4d::Zero();
  const double ct = raw[0], st = raw[1], cp = raw[2], sp = raw[3];
  const double rt = ct * ct + st * st;
  if (rt > kPairEpsilon) {
    g[0] = d_theta * (-st / rt);
    g[1] = d_theta * (ct / rt);
  }
  const double rp = cp * cp + sp * sp;
  if (rp > kPairEpsilon) {
    const double sign = cp >= 0.0 ? 1.0 : -1.0;
    g[2] = d_phi * (-sp * sign / rp);
    g[3] = d_phi * (std::abs(cp) / rp);
  }
  return g;
}

void require_matching(const SkeletonSequence& a, const SkeletonSequence& b) {
  if (a.frames.size() != b.frames.size() || a.frames.empty()) {
    throw Error(ErrorCode::contract, "reconstruction loss needs equal, non-empty frame counts");
  }
}

// Returns the loss and, when requested, d(loss)/dR.
double rec_loss_with_gradient(const SkeletonSequence& aligned, const SkeletonSequence& augmented,
                              const Mat3& rotation, Mat3* d_rotation) {
  require_matching(aligned, augmented);
  const Mat3 rt = rotation.transpose();
  double sum = 0.0;
  Mat3 outer = Mat3::Zero();
  for (std::size_t f = 0; f < aligned.frames.size(); ++f) {
    for (std::size_t j = 0; j < kJointCount; ++j) {
      const Vec3& g = aligned.frames[f].joints[j];
      const Vec3 e = rt * g - augmented.frames[f].joints[j];
      sum += e.squaredNorm();
      if (d_rotation) outer += g * e.transpose();
    }
  }
  const double count = static_cast<double>(aligned.frames.size() * kJointCount * 3);
  const double loss = std::sqrt(sum / count);
  if (d_rotation) {
    *d_rotation = loss > 1e-300 ? Mat3(outer / (count * loss)) : Mat3::Zero();
  }
  return loss;
}

}  // namespace

GamModel::GamModel(int input_frames, int hidden_width)
    : input_frames_(input_frames), hidden_width_(hidden_width) {
  if (input_frames < 1 || hidden_width < 1) {
    throw Error(ErrorCode::validation, "GAM input frames and hidden width must be positive");
  }
  params_.assign(layout(input_size(), hidden_width_).total, 0.0);
}

GamModel GamModel::initialized(std::uint64_t seed, int input_frames, int hidden_width) {
  GamModel model(input_frames, hidden_width);
  model.seed_ = seed;
  const Layout l = layout(model.input_size(), hidden_width);
  Rng rng(seed);
  const double a1 = std::sqrt(6.0 / (model.input_size() + hidden_width));
  for (std::size_t i = l.w1; i < l.b1; ++i) model.params_[i] = uniform(rng, -a1, a1);
  const double a2 = std::sqrt(6.0 / (hidden_width + kOutputs));
  for (std::size_t i = l.w2; i < l.b2; ++i) model.params_[i] = uniform(rng, -a2, a2);
  return model;
}

void GamModel::set_parameters(std::vector<double> params) {
  if (params.size() != params_.size()) {
    throw Error(ErrorCode::validation, "parameter count " + std::to_string(params.size()) +
                                           " does not match architecture (" +
                                           std::to_string(params_.size()) + ")");
  }
  for (const double p : params) {
    if (!std::isfinite(p)) throw Error(ErrorCode::non_finite, "non-finite GAM parameter");
  }
  params_ = std::move(params);
}

void GamModel::check_input(const Eigen::VectorXd& input) const {
  if (input.size() != input_size()) {
    throw Error(ErrorCode::contract, "GAM input has " + std::to_string(input.size()) +
                                         " values, expected " + std::to_string(input_size()));
  }
}

Eigen::Vector4d GamModel::forward(const Eigen::VectorXd& input) const {
  check_input(input);
  const Layout l = layout(input_size(), hidden_width_);
  const ConstMatMap w1(params_.data() + l.w1, hidden_width_, input_size());
  const Eigen::Map<const Eigen::VectorXd> b1(params_.data() + l.b1, hidden_width_);
  const ConstMatMap w2(params_.data() + l.w2, kOutputs, hidden_width_);
  const Eigen::Map<const Eigen::Vector4d> b2(params_.data() + l.b2);
  const Eigen::VectorXd hidden = (w1 * input + b1).array().tanh().matrix();
  return w2 * hidden + b2;
}

void GamModel::backward(const Eigen::VectorXd& input, const Eigen::Vector4d& d_raw,
                        std::span<double> grad) const {
  check_input(input);
  const Layout l = layout(input_size(), hidden_width_);
  const ConstMatMap w1(params_.data() + l.w1, hidden_width_, input_size());
  const Eigen::Map<const Eigen::VectorXd> b1(params_.data() + l.b1, hidden_width_);
  const ConstMatMap w2(params_.data() + l.w2, kOutputs, hidden_width_);
  const Eigen::VectorXd hidden = (w1 * input + b1).array().tanh().matrix();

  MatMap gw2(grad.data() + l.w2, kOutputs, hidden_width_);
  Eigen::Map<Eigen::Vector4d> gb2(grad.data() + l.b2);
  gw2.noalias() += d_raw * hidden.transpose();
  gb2 += d_raw;

  const Eigen::VectorXd d_pre =
      ((w2.transpose() * d_raw).array() * (1.0 - hidden.array().square())).matrix();
  MatMap gw1(grad.data() + l.w1, hidden_width_, input_size());
  Eigen::Map<Eigen::VectorXd> gb1(grad.data() + l.b1, hidden_width_);
  gw1.noalias() += d_pre * input.transpose();
  gb1 += d_pre;
}

Eigen::VectorXd gam_input(const SkeletonSequence& seq, int input_frames) {
  if (seq.frames.empty()) throw Error(ErrorCode::validation, "sequence has no frames");
  Eigen::VectorXd x(static_cast<Eigen::Index>(input_frames) * kJointCount * 3);
  Eigen::Index k = 0;
  for (int f = 0; f < input_frames; ++f) {
    const std::size_t src = std::min<std::size_t>(static_cast<std::size_t>(f), seq.frames.size() - 1);
    for (const Vec3& joint : seq.frames[src].joints) {
      x[k++] = joint.x();
      x[k++] = joint.y();
      x[k++] = joint.z();
    }
  }
  return x;
}

AngleDecoding decode_angles(const Eigen::Vector4d& raw) {
  AngleDecoding out;
  const double rt = raw[0] * raw[0] + raw[1] * raw[1];
  const double rp = raw[2] * raw[2] + raw[3] * raw[3];
  if (rt > kPairEpsilon) {
    out.angles.theta = std::atan2(raw[1], raw[0]);
  } else {
    out.degenerate = true;
  }
  if (rp > kPairEpsilon) {
    out.angles.phi = std::atan2(raw[3], std::abs(raw[2]));
  } else {
    out.degenerate = true;
  }
  // atan2 returns -pi for (-1, -0); fold into (-pi, pi].
  if (out.angles.theta <= -std::numbers::pi) out.angles.theta = std::numbers::pi;
  return out;
}

CameraAngles predict_angles(const GamModel& model, const SkeletonSequence& seq) {
  const AngleDecoding d = decode_angles(model.forward(gam_input(seq, model.input_frames())));
  if (d.degenerate) log_warning("GAM output pair has zero length; using angle 0");
  return d.angles;
}

double rot_loss(const CameraAngles& pred, const CameraAngles& gt) {
  const double dc_t = std::cos(pred.theta) - std::cos(gt.theta);
  const double dc_p = std::cos(pred.phi) - std::cos(gt.phi);
  const double ds_t = std::sin(pred.theta) - std::sin(gt.theta);
  const double ds_p = std::sin(pred.phi) - std::sin(gt.phi);
  return 0.5 * (dc_t * dc_t + dc_p * dc_p) + 0.5 * (ds_t * ds_t + ds_p * ds_p);
}

double rec_loss(const SkeletonSequence& aligned, const SkeletonSequence& augmented,
                const CameraAngles& pred) {
  return rec_loss_with_gradient(aligned, augmented, rotation_from_angles(pred), nullptr);
}

double total_loss(double rot, double rec, const LossConfig& cfg) {
  return cfg.w1 * rot + cfg.w2 * rec;
}

TrainSample make_train_sample(const SkeletonSequence& aligned, const CameraAngles& view) {
  return {augment_view(aligned, view), view, aligned};
}

LossBreakdown sample_loss(const GamModel& model, const TrainSample& sample,
                          const LossConfig& cfg) {
  const CameraAngles pred =
      decode_angles(model.forward(gam_input(sample.input, model.input_frames()))).angles;
  LossBreakdown out;
  out.rot = rot_loss(pred, sample.target);
  out.rec = rec_loss(sample.source, sample.input, pred);
  out.total = total_loss(out.rot, out.rec, cfg);
  return out;
}

namespace {

LossBreakdown loss_and_gradient_with_input(const GamModel& model, const TrainSample& sample,
                                           const Eigen::VectorXd& input, const LossConfig& cfg,
                                           GradientMode mode, std::span<double> grad) {
  const Eigen::Vector4d raw = model.forward(input);
  const CameraAngles pred = decode_angles(raw).angles;

  LossBreakdown out;
  out.rot = rot_loss(pred, sample.target);
  // d(rot)/d(theta) = sin(theta - theta_gt), likewise for phi.
  double d_theta = cfg.w1 * std::sin(pred.theta - sample.target.theta);
  double d_phi = cfg.w1 * std::sin(pred.phi - sample.target.phi);

  const RotationJacobian jac = rotation_jacobian(pred);
  Mat3 d_rot;
  out.rec = rec_loss_with_gradient(sample.source, sample.input, jac.rotation,
                                   mode == GradientMode::full ? &d_rot : nullptr);
  if (mode == GradientMode::full) {
    d_theta += cfg.w2 * (d_rot.array() * jac.d_theta.array()).sum();
    d_phi += cfg.w2 * (d_rot.array() * jac.d_phi.array()).sum();
  }
  out.total = total_loss(out.rot, out.rec, cfg);
  model.backward(input, raw_gradient(raw, d_theta, d_phi), grad);
  return out;
}

}  // namespace

LossBreakdown sample_loss_and_gradient(const GamModel& model, const TrainSample& sample,
                                       const LossConfig& cfg, GradientMode mode,
                                       std::span<double> grad) {
  if (grad.size() != model.parameter_count()) {
    throw Error(ErrorCode::contract, "gradient buffer size mismatch");
  }
  return loss_and_gradient_with_input(model, sample, gam_input(sample.input, model.input_frames()),
                                      cfg, mode, grad);
}

TrainResult train(GamModel model, const std::vector<TrainSample>& samples,
                  const TrainConfig& cfg) {
  if (samples.empty()) throw Error(ErrorCode::validation, "training needs at least one sample");
  if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0)) {
    throw Error(ErrorCode::configuration, "epochs, batch size and learning rate must be positive");
  }

  std::vector<Eigen::VectorXd> inputs;
  inputs.reserve(samples.size());
  for (const TrainSample& s : samples) inputs.push_back(gam_input(s.input, model.input_frames()));

  const std::size_t n_params = model.parameter_count();
  std::vector<double> grad(n_params), m(n_params, 0.0), v(n_params, 0.0);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::uint64_t step = 0;

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(cfg.seed);

  TrainResult result{model, {}};
  GamModel& net = result.model;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(std::span<std::size_t>(order), rng);
    EpochStats stats{epoch, 0.0, 0.0, 0.0};
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t idx = order[b];
        const LossBreakdown loss =
            loss_and_gradient_with_input(net, samples[idx], inputs[idx], cfg.loss, cfg.mode, grad);
        if (!std::isfinite(loss.total)) {
          std::ostringstream msg;
          msg << "non-finite loss at epoch " << epoch << ", sample " << idx << " (rot=" << loss.rot
              << ", rec=" << loss.rec << ")";
          throw Error(ErrorCode::training_diverged, msg.str());
        }
        stats.mean_loss += loss.total;
        stats.mean_rot += loss.rot;
        stats.mean_rec += loss.rec;
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      std::span<double> p = net.parameters();
      for (std::size_t i = 0; i < n_params; ++i) {
        const double g = grad[i] * inv + cfg.weight_decay * p[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        p[i] -= cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
      }
    }
    const double inv_n = 1.0 / static_cast<double>(samples.size());
    stats.mean_loss *= inv_n;
    stats.mean_rot *= inv_n;
    stats.mean_rec *= inv_n;
    result.history.push_back(stats);
  }
  return result;
}

CameraAngles oracle_estimate(const SkeletonSequence& augmented,
                             const SkeletonSequence& aligned_template, const ViewSphere& sphere) {
  if (sphere.vertices.empty()) throw Error(ErrorCode::validation, "view sphere is empty");
  require_matching(aligned_template, augmented);

  auto loss_at = [&](const CameraAngles& a) { return rec_loss(aligned_template, augmented, a); };

  CameraAngles best = angles_from_camera(sphere.vertices.front());
  double best_loss = loss_at(best);
  for (std::size_t i = 1; i < sphere.vertices.size(); ++i) {
    const CameraAngles a = angles_from_camera(sphere.vertices[i]);
    const double l = loss_at(a);
    if (l < best_loss - 1e-12 * (1.0 + best_loss)) {
      best = a;
      best_loss = l;
    }
  }

  constexpr double kHalfPi = std::numbers::pi / 2.0;
  double step = 0.2;
  while (step >= 1e-4) {
    const CameraAngles candidates[4] = {
        {wrap_angle(best.theta + step), best.phi},
        {wrap_angle(best.theta - step), best.phi},
        {best.theta, std::min(kHalfPi, best.phi + step)},
        {best.theta, std::max(-kHalfPi, best.phi - step)},
    };
    bool improved = false;
    for (const CameraAngles& c : candidates) {
      const double l = loss_at(c);
      if (l < best_loss) {
        best = c;
        best_loss = l;
        improved = true;
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

AlignmentResult align_sequence(const AngleEstimator& estimator, const SkeletonSequence& seq) {
  if (seq.frames.empty()) throw Error(ErrorCode::validation, "sequence has no frames");
  const CameraAngles angles = estimator(seq);
  AlignmentResult out{rotate_sequence(rotation_from_angles(angles), seq), angles};
  out.sequence.aligned = true;
  out.sequence.source_view.reset();
  return out;
}

AlignmentResult align_sequence(const GamModel& model, const SkeletonSequence& seq) {
  return align_sequence([&model](const SkeletonSequence& s) { return predict_angles(model, s); },
                        seq);
}

}  // namespace fewskel
