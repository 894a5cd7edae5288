#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "dropwatch/error.hpp"
#include "dropwatch/optim.hpp"
#include "dropwatch/predictors.hpp"

namespace dropwatch {

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ColMatrix = Eigen::MatrixXd;
using ConstWeights = Eigen::Map<const Matrix>;
using Weights = Eigen::Map<Matrix>;
using ConstBias = Eigen::Map<const Eigen::VectorXd>;
using Bias = Eigen::Map<Eigen::VectorXd>;

std::vector<std::size_t> layer_offsets(std::span<const std::size_t> widths) {
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    offsets.push_back(off);
    off += widths[l + 1] * widths[l] + widths[l + 1];
  }
  offsets.push_back(off);
  return offsets;
}

void apply_relu6(ColMatrix& z) {
  z = z.cwiseMax(0.0).cwiseMin(6.0);
}

/// Forward pass over a batch stored column-wise ([width x batch]).
/// Keeps the pre-activations of every layer when `cache` is non-null.
Eigen::RowVectorXd forward_batch(std::span<const std::size_t> widths,
                                 std::span<const double> params, const ColMatrix& input,
                                 std::vector<ColMatrix>* pre, std::vector<ColMatrix>* post) {
  const auto offsets = layer_offsets(widths);
  const std::size_t layers = widths.size() - 1;
  ColMatrix act = input;
  if (post) post->push_back(act);
  for (std::size_t l = 0; l < layers; ++l) {
    const auto rows = static_cast<Eigen::Index>(widths[l + 1]);
    const auto cols = static_cast<Eigen::Index>(widths[l]);
    ConstWeights w(params.data() + offsets[l], rows, cols);
    ConstBias b(params.data() + offsets[l] + widths[l + 1] * widths[l], rows);
    ColMatrix z = w * act;
    z.colwise() += b;
    if (pre) pre->push_back(z);
    if (l + 1 < layers) apply_relu6(z);
    act = std::move(z);
    if (post && l + 1 < layers) post->push_back(act);
  }
  return act.row(0);
}

ColMatrix to_columns(std::span<const double> row_major, std::size_t width) {
  const auto batch = static_cast<Eigen::Index>(row_major.size() / width);
  Eigen::Map<const Matrix> rows(row_major.data(), batch, static_cast<Eigen::Index>(width));
  return rows.transpose();
}

}  // namespace

// ---------------------------------------------------------------------------

MlpModel::MlpModel(std::vector<std::size_t> widths, std::vector<double> params,
                   FeatureConfig features)
    : widths_(std::move(widths)), params_(std::move(params)), features_(features) {
  if (widths_.size() < 2) throw Error("mlp needs at least an input and an output layer");
  if (widths_.back() != 1) throw Error("mlp output width must be 1");
  for (std::size_t w : widths_) {
    if (w == 0) throw Error("mlp layer widths must be positive");
  }
  offsets_ = layer_offsets(widths_);
  if (params_.size() != offsets_.back()) {
    throw Error("mlp parameter count " + std::to_string(params_.size()) + " does not match " +
                std::to_string(offsets_.back()) + " implied by the layer widths");
  }
}

std::vector<std::size_t> MlpModel::make_widths(std::size_t input, std::size_t hidden_layers,
                                               std::size_t hidden_units) {
  std::vector<std::size_t> widths{input};
  for (std::size_t l = 0; l < hidden_layers; ++l) widths.push_back(hidden_units);
  widths.push_back(1);
  return widths;
}

std::size_t MlpModel::param_count(std::span<const std::size_t> widths) {
  return layer_offsets(widths).back();
}

double MlpModel::forward(std::span<const double> input) const {
  if (input.size() != widths_.front()) {
    throw Error("mlp input width " + std::to_string(input.size()) + " does not match " +
                std::to_string(widths_.front()));
  }
  Eigen::VectorXd act = Eigen::Map<const Eigen::VectorXd>(input.data(),
                                                          static_cast<Eigen::Index>(input.size()));
  const std::size_t layers = num_layers();
  for (std::size_t l = 0; l < layers; ++l) {
    const auto rows = static_cast<Eigen::Index>(widths_[l + 1]);
    const auto cols = static_cast<Eigen::Index>(widths_[l]);
    ConstWeights w(params_.data() + weight_offset(l), rows, cols);
    ConstBias b(params_.data() + bias_offset(l), rows);
    Eigen::VectorXd z = w * act + b;
    if (l + 1 < layers) z = z.cwiseMax(0.0).cwiseMin(6.0);
    act = std::move(z);
  }
  return act(0);
}

double MlpModel::forward(const FeatureRow& row) const { return forward(row.flatten()); }

double mlp_forward(const MlpModel& m, const FeatureRow& row) { return m.forward(row); }

double MlpModel::predict(const Series& s, std::size_t index) const {
  return forward(encode_sample(s, index, features_));
}

std::vector<double> MlpModel::predict_series(const Series& s) const {
  if (s.size() <= warmup()) return {};
  const DesignMatrix design = build_design_matrix(s, features_);
  const std::size_t width = widths_.front();
  if (design.width() != width) throw Error("mlp input width does not match the features");
  std::vector<double> out;
  out.reserve(design.rows.size());
  constexpr std::size_t kChunk = 1024;
  std::vector<double> flat;
  for (std::size_t first = 0; first < design.rows.size(); first += kChunk) {
    const std::size_t n = std::min(kChunk, design.rows.size() - first);
    flat.assign(n * width, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      design.rows[first + i].flatten_into(std::span<double>(flat).subspan(i * width, width));
    }
    const Eigen::RowVectorXd y = forward_batch(widths_, params_, to_columns(flat, width), nullptr,
                                               nullptr);
    for (Eigen::Index i = 0; i < y.size(); ++i) out.push_back(y(i));
  }
  return out;
}

// ---------------------------------------------------------------------------

double mlp_loss_and_gradient(std::span<const std::size_t> widths, std::span<const double> params,
                             std::span<const double> inputs, std::span<const double> targets,
                             std::span<double> grad) {
  const std::size_t width = widths.front();
  if (targets.empty() || inputs.size() != targets.size() * width) {
    throw Error("mlp batch: inputs must be [batch x input width]");
  }
  if (params.size() != MlpModel::param_count(widths) || grad.size() != params.size()) {
    throw Error("mlp batch: parameter/gradient length mismatch");
  }
  const auto batch = static_cast<Eigen::Index>(targets.size());
  std::vector<ColMatrix> pre;
  std::vector<ColMatrix> post;
  const Eigen::RowVectorXd out =
      forward_batch(widths, params, to_columns(inputs, width), &pre, &post);

  Eigen::Map<const Eigen::RowVectorXd> y(targets.data(), batch);
  const Eigen::RowVectorXd diff = out - y;
  const double loss = diff.squaredNorm() / static_cast<double>(batch);

  const auto offsets = layer_offsets(widths);
  const std::size_t layers = widths.size() - 1;
  ColMatrix delta = (2.0 / static_cast<double>(batch)) * diff;  // dL/dz of the output layer
  for (std::size_t l = layers; l-- > 0;) {
    const auto rows = static_cast<Eigen::Index>(widths[l + 1]);
    const auto cols = static_cast<Eigen::Index>(widths[l]);
    Weights gw(grad.data() + offsets[l], rows, cols);
    Bias gb(grad.data() + offsets[l] + widths[l + 1] * widths[l], rows);
    gw.noalias() = delta * post[l].transpose();
    gb = delta.rowwise().sum();
    if (l == 0) break;
    ConstWeights w(params.data() + offsets[l], rows, cols);
    ColMatrix back = w.transpose() * delta;
    const ColMatrix& z = pre[l - 1];
    // ReLU6 passes gradient only strictly inside (0, 6).
    delta = back.cwiseProduct(((z.array() > 0.0) && (z.array() < 6.0)).cast<double>().matrix());
  }
  return loss;
}

MlpModel mlp_init(const MlpTrainConfig& cfg) {
  auto widths =
      MlpModel::make_widths(cfg.features.width(), cfg.hidden_layers, cfg.hidden_units);
  std::vector<double> params(MlpModel::param_count(widths), 0.0);
  std::mt19937_64 rng(cfg.seed);
  const auto offsets = layer_offsets(widths);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    // He initialization; biases start at zero.
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(widths[l])));
    const std::size_t n = widths[l + 1] * widths[l];
    for (std::size_t i = 0; i < n; ++i) params[offsets[l] + i] = dist(rng);
  }
  return MlpModel(std::move(widths), std::move(params), cfg.features);
}

MlpFit mlp_train(const Series& train, const MlpTrainConfig& cfg) {
  if (cfg.batch_size == 0 || cfg.steps == 0) throw Error("mlp training needs batch and steps > 0");
  const DesignMatrix design = build_design_matrix(train, cfg.features);
  const std::size_t width = cfg.features.width();
  const std::size_t rows = design.rows.size();

  std::vector<double> all_inputs(rows * width);
  std::vector<double> all_targets(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    design.rows[i].flatten_into(std::span<double>(all_inputs).subspan(i * width, width));
    all_targets[i] = train[design.first_index + i];
  }

  MlpModel init = mlp_init(cfg);
  std::vector<std::size_t> widths(init.widths().begin(), init.widths().end());
  std::vector<double> params(init.params().begin(), init.params().end());

  // Separate stream for batch sampling so the init is independent of it.
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<std::size_t> pick(0, rows - 1);
  optim::AdamState opt(params.size(), cfg.learning_rate);
  std::vector<double> grad(params.size());
  std::vector<double> batch_inputs(cfg.batch_size * width);
  std::vector<double> batch_targets(cfg.batch_size);
  std::vector<double> history;
  history.reserve(cfg.steps);

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      const std::size_t r = pick(rng);
      std::copy_n(all_inputs.begin() + static_cast<std::ptrdiff_t>(r * width), width,
                  batch_inputs.begin() + static_cast<std::ptrdiff_t>(b * width));
      batch_targets[b] = all_targets[r];
    }
    const double loss = mlp_loss_and_gradient(widths, params, batch_inputs, batch_targets, grad);
    if (!std::isfinite(loss)) {
      throw NumericError("mlp training diverged at step " + std::to_string(step));
    }
    history.push_back(loss);
    optim::adam_update(opt, params, grad);
  }

  MlpModel model(std::move(widths), std::move(params), cfg.features);
  const double mse = prediction_mse(model, train);
  return MlpFit{std::move(model), mse, std::move(history)};
}

}  // namespace dropwatch
