#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dropwatch/features.hpp"
#include "dropwatch/series.hpp"

namespace dropwatch {

enum class ModelKind : std::uint32_t { baseline = 0, fourier = 1, mlp = 2 };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

/// Regression model producing the expected (normalized) value of a sample.
///
/// Implementations may read the timestamp of `index` and the values of
/// strictly earlier samples, never `s[index]` itself. Recurrent models fit
/// this contract by replaying the prefix.
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual ModelKind kind() const = 0;

  /// Number of leading samples of any series this model cannot predict.
  virtual std::size_t warmup() const { return 0; }

  virtual double predict(const Series& s, std::size_t index) const = 0;

  /// Predictions for indices [warmup(), s.size()).
  virtual std::vector<double> predict_series(const Series& s) const;

  virtual std::unique_ptr<Predictor> clone() const = 0;
};

// ---------------------------------------------------------------------------
// Baseline

inline constexpr double kBaselineThreshold = 0.065;

/// Constant prediction: a floor the data is not expected to go below.
class BaselineModel final : public Predictor {
 public:
  explicit BaselineModel(double threshold = kBaselineThreshold) : threshold_(threshold) {}

  ModelKind kind() const override { return ModelKind::baseline; }
  double threshold() const noexcept { return threshold_; }
  double predict(const Series&, std::size_t) const override { return threshold_; }
  double predict_index(std::int64_t) const noexcept { return threshold_; }
  std::unique_ptr<Predictor> clone() const override {
    return std::make_unique<BaselineModel>(*this);
  }

 private:
  double threshold_;
};

// ---------------------------------------------------------------------------
// Fourier series

/// f(t) = sum_{n=0..H} a_n sin(2 pi n t / P + phi_n), evaluated on the
/// sample index t. The n = 0 term acts as a bias a_0 sin(phi_0).
///
/// Series-level predictions use the absolute sample index
/// `timestamp / interval`, so phases line up across months.
class FourierModel final : public Predictor {
 public:
  FourierModel(std::int64_t period_points, std::vector<double> amplitudes,
               std::vector<double> phases);

  ModelKind kind() const override { return ModelKind::fourier; }
  double predict(const Series& s, std::size_t index) const override;
  std::vector<double> predict_series(const Series& s) const override;
  std::unique_ptr<Predictor> clone() const override {
    return std::make_unique<FourierModel>(*this);
  }

  /// Evaluate at a (possibly negative) sample index; exactly P-periodic.
  double predict_index(std::int64_t t) const;

  std::int64_t period_points() const noexcept { return period_; }
  std::size_t harmonics() const noexcept { return amplitudes_.size() - 1; }
  std::span<const double> amplitudes() const noexcept { return amplitudes_; }
  std::span<const double> phases() const noexcept { return phases_; }

 private:
  std::int64_t period_;
  std::vector<double> amplitudes_;
  std::vector<double> phases_;
};

std::int64_t absolute_sample_index(const Series& s, std::size_t index);

/// Mean squared error of a Fourier parameterization over a fixed training
/// set. Parameters are packed as [a_0..a_H, phi_0..phi_H].
///
/// Samples sharing a phase bucket (t mod P) are aggregated once, so the cost
/// per evaluation is O(H * P) no matter how long the training set is.
class FourierObjective {
 public:
  FourierObjective(std::span<const std::int64_t> sample_indices,
                   std::span<const double> targets, std::int64_t period_points,
                   std::size_t harmonics);

  std::size_t num_params() const noexcept { return 2 * (harmonics_ + 1); }
  std::size_t num_samples() const noexcept { return num_samples_; }

  double loss(std::span<const double> params) const;
  /// Returns the loss; writes dL/dparams into `grad`.
  double loss_and_gradient(std::span<const double> params, std::span<double> grad) const;

 private:
  void bucket_predictions(std::span<const double> params, std::vector<double>& f) const;

  std::int64_t period_;
  std::size_t harmonics_;
  std::size_t num_samples_ = 0;
  std::vector<double> count_;         // samples per active bucket
  std::vector<double> bucket_mean_;   // mean target per active bucket
  double within_ss_ = 0.0;            // sum over buckets of squared deviations from the mean
  std::vector<double> sin_table_;     // [(H+1) x buckets] sin(2 pi n k / P)
  std::vector<double> cos_table_;
};

struct FourierTrainConfig {
  std::int64_t period_points = 2016;  // one week of 5-minute samples
  std::size_t harmonics = 448;        // 64 per day
  double learning_rate = 0.5;
  std::size_t steps = 3000;
  double init_scale = 0.1;
  std::uint64_t seed = 0;
};

struct FourierFit {
  FourierModel model;
  double train_mse = 0.0;
  std::vector<double> loss_history;  // loss before each step
  std::vector<std::string> warnings;
};

/// Adagrad on the mean squared error against `train` values.
FourierFit fourier_train(const Series& train, const FourierTrainConfig& cfg = {});

// ---------------------------------------------------------------------------
// Multi-layer perceptron

inline double relu6(double x) noexcept { return x < 0.0 ? 0.0 : (x > 6.0 ? 6.0 : x); }

/// Fully connected network, ReLU6 on every hidden layer, linear scalar
/// output. All weights and biases live in one flat vector; layer l owns a
/// row-major [width[l+1] x width[l]] weight block followed by its bias.
class MlpModel final : public Predictor {
 public:
  MlpModel(std::vector<std::size_t> widths, std::vector<double> params,
           FeatureConfig features = {});

  /// Widths input, hidden..., 1.
  static std::vector<std::size_t> make_widths(std::size_t input, std::size_t hidden_layers,
                                              std::size_t hidden_units);
  static std::size_t param_count(std::span<const std::size_t> widths);

  ModelKind kind() const override { return ModelKind::mlp; }
  std::size_t warmup() const override { return features_.warmup(); }
  double predict(const Series& s, std::size_t index) const override;
  std::vector<double> predict_series(const Series& s) const override;
  std::unique_ptr<Predictor> clone() const override { return std::make_unique<MlpModel>(*this); }

  double forward(std::span<const double> input) const;
  double forward(const FeatureRow& row) const;

  std::span<const std::size_t> widths() const noexcept { return widths_; }
  std::span<const double> params() const noexcept { return params_; }
  const FeatureConfig& features() const noexcept { return features_; }
  std::size_t num_layers() const noexcept { return widths_.size() - 1; }
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + widths_[layer + 1] * widths_[layer];
  }

 private:
  std::vector<std::size_t> widths_;
  std::vector<double> params_;
  std::vector<std::size_t> offsets_;
  FeatureConfig features_;
};

double mlp_forward(const MlpModel& m, const FeatureRow& row);

/// Batch MSE and its gradient by backpropagation. `inputs` is row-major
/// [batch x widths[0]].
double mlp_loss_and_gradient(std::span<const std::size_t> widths, std::span<const double> params,
                             std::span<const double> inputs, std::span<const double> targets,
                             std::span<double> grad);

struct MlpTrainConfig {
  std::size_t hidden_layers = 10;
  std::size_t hidden_units = 200;
  double learning_rate = 1e-4;
  std::size_t batch_size = 200;
  std::size_t steps = 1200;
  std::uint64_t seed = 0;
  FeatureConfig features{};
};

struct MlpFit {
  MlpModel model;
  double train_mse = 0.0;           // over the full training set after the last step
  std::vector<double> loss_history; // batch loss of each step
};

MlpModel mlp_init(const MlpTrainConfig& cfg);

/// Adam on uniformly resampled mini-batches of (features, value) pairs.
MlpFit mlp_train(const Series& train, const MlpTrainConfig& cfg = {});

/// Mean squared error of a predictor over [warmup, size).
double prediction_mse(const Predictor& model, const Series& s);

}  // namespace dropwatch
