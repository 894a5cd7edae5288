#include <cmath>
#include <numbers>
#include <random>

#include "dropwatch/error.hpp"
#include "dropwatch/optim.hpp"
#include "dropwatch/predictors.hpp"

namespace dropwatch {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::int64_t positive_mod(std::int64_t a, std::int64_t m) {
  const std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::baseline: return "baseline";
    case ModelKind::fourier: return "fourier";
    case ModelKind::mlp: return "mlp";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "baseline") return ModelKind::baseline;
  if (text == "fourier") return ModelKind::fourier;
  if (text == "mlp" || text == "dnn") return ModelKind::mlp;
  throw Error("unknown model kind '" + std::string(text) + "' (baseline|fourier|mlp)");
}

std::vector<double> Predictor::predict_series(const Series& s) const {
  std::vector<double> out;
  if (s.size() <= warmup()) return out;
  out.reserve(s.size() - warmup());
  for (std::size_t i = warmup(); i < s.size(); ++i) out.push_back(predict(s, i));
  return out;
}

std::int64_t absolute_sample_index(const Series& s, std::size_t index) {
  const std::int64_t ts = s.timestamp(index);
  return ts / s.interval_seconds();
}

double prediction_mse(const Predictor& model, const Series& s) {
  const auto preds = model.predict_series(s);
  if (preds.empty()) throw Error("series too short to evaluate the model");
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - s[i + model.warmup()];
    acc += d * d;
  }
  return acc / static_cast<double>(preds.size());
}

// ---------------------------------------------------------------------------

FourierModel::FourierModel(std::int64_t period_points, std::vector<double> amplitudes,
                           std::vector<double> phases)
    : period_(period_points), amplitudes_(std::move(amplitudes)), phases_(std::move(phases)) {
  if (period_ < 1) throw Error("fourier period must be positive");
  if (amplitudes_.empty() || amplitudes_.size() != phases_.size()) {
    throw Error("fourier model needs H+1 amplitudes and H+1 phases");
  }
}

double FourierModel::predict_index(std::int64_t t) const {
  const std::int64_t k = positive_mod(t, period_);
  const double p = static_cast<double>(period_);
  double sum = 0.0;
  for (std::size_t n = 0; n < amplitudes_.size(); ++n) {
    // n*k reduced mod P keeps the angle small, which keeps the model exactly periodic.
    const std::int64_t nk = positive_mod(static_cast<std::int64_t>(n) * k, period_);
    sum += amplitudes_[n] * std::sin(kTwoPi * static_cast<double>(nk) / p + phases_[n]);
  }
  return sum;
}

double FourierModel::predict(const Series& s, std::size_t index) const {
  return predict_index(absolute_sample_index(s, index));
}

std::vector<double> FourierModel::predict_series(const Series& s) const {
  // Predictions depend only on t mod P, so evaluate each phase once.
  std::vector<double> cache(static_cast<std::size_t>(period_), 0.0);
  std::vector<bool> seen(cache.size(), false);
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto k = static_cast<std::size_t>(positive_mod(absolute_sample_index(s, i), period_));
    if (!seen[k]) {
      cache[k] = predict_index(static_cast<std::int64_t>(k));
      seen[k] = true;
    }
    out[i] = cache[k];
  }
  return out;
}

// ---------------------------------------------------------------------------

FourierObjective::FourierObjective(std::span<const std::int64_t> sample_indices,
                                   std::span<const double> targets, std::int64_t period_points,
                                   std::size_t harmonics)
    : period_(period_points), harmonics_(harmonics), num_samples_(targets.size()) {
  if (sample_indices.size() != targets.size()) throw Error("fourier objective: length mismatch");
  if (targets.empty()) throw Error("fourier objective needs at least one sample");
  if (period_ < 1) throw Error("fourier period must be positive");

  const auto P = static_cast<std::size_t>(period_);
  std::vector<double> count(P, 0.0);
  std::vector<double> sum(P, 0.0);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto k = static_cast<std::size_t>(positive_mod(sample_indices[i], period_));
    count[k] += 1.0;
    sum[k] += targets[i];
  }
  std::vector<std::size_t> active;
  std::vector<std::size_t> slot(P, 0);
  for (std::size_t k = 0; k < P; ++k) {
    if (count[k] > 0.0) {
      slot[k] = active.size();
      active.push_back(k);
      count_.push_back(count[k]);
      bucket_mean_.push_back(sum[k] / count[k]);
    }
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto k = static_cast<std::size_t>(positive_mod(sample_indices[i], period_));
    const double d = targets[i] - bucket_mean_[slot[k]];
    within_ss_ += d * d;
  }

  const std::size_t buckets = active.size();
  sin_table_.resize((harmonics_ + 1) * buckets);
  cos_table_.resize((harmonics_ + 1) * buckets);
  const double p = static_cast<double>(period_);
  for (std::size_t n = 0; n <= harmonics_; ++n) {
    for (std::size_t j = 0; j < buckets; ++j) {
      const std::int64_t nk =
          positive_mod(static_cast<std::int64_t>(n) * static_cast<std::int64_t>(active[j]), period_);
      const double angle = kTwoPi * static_cast<double>(nk) / p;
      sin_table_[n * buckets + j] = std::sin(angle);
      cos_table_[n * buckets + j] = std::cos(angle);
    }
  }
}

void FourierObjective::bucket_predictions(std::span<const double> params,
                                          std::vector<double>& f) const {
  if (params.size() != num_params()) throw Error("fourier objective: wrong parameter count");
  const std::size_t buckets = count_.size();
  const std::size_t h1 = harmonics_ + 1;
  f.assign(buckets, 0.0);
  // a sin(x + phi) = (a cos phi) sin x + (a sin phi) cos x
  for (std::size_t n = 0; n < h1; ++n) {
    const double a = params[n];
    const double phi = params[h1 + n];
    const double cs = a * std::cos(phi);
    const double sn = a * std::sin(phi);
    const double* srow = &sin_table_[n * buckets];
    const double* crow = &cos_table_[n * buckets];
    for (std::size_t j = 0; j < buckets; ++j) f[j] += cs * srow[j] + sn * crow[j];
  }
}

double FourierObjective::loss(std::span<const double> params) const {
  std::vector<double> f;
  bucket_predictions(params, f);
  double ss = within_ss_;
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double d = f[j] - bucket_mean_[j];
    ss += count_[j] * d * d;
  }
  return ss / static_cast<double>(num_samples_);
}

double FourierObjective::loss_and_gradient(std::span<const double> params,
                                           std::span<double> grad) const {
  if (grad.size() != num_params()) throw Error("fourier objective: wrong gradient length");
  std::vector<double> f;
  bucket_predictions(params, f);
  const double inv_n = 1.0 / static_cast<double>(num_samples_);
  const std::size_t buckets = f.size();
  std::vector<double> r(buckets);
  double ss = within_ss_;
  for (std::size_t j = 0; j < buckets; ++j) {
    const double d = f[j] - bucket_mean_[j];
    ss += count_[j] * d * d;
    r[j] = 2.0 * count_[j] * d * inv_n;  // dL/df_j
  }
  const std::size_t h1 = harmonics_ + 1;
  for (std::size_t n = 0; n < h1; ++n) {
    const double* srow = &sin_table_[n * buckets];
    const double* crow = &cos_table_[n * buckets];
    double u = 0.0;
    double v = 0.0;
    for (std::size_t j = 0; j < buckets; ++j) {
      u += r[j] * srow[j];
      v += r[j] * crow[j];
    }
    const double a = params[n];
    const double c = std::cos(params[h1 + n]);
    const double s = std::sin(params[h1 + n]);
    grad[n] = c * u + s * v;            // sum r sin(theta)
    grad[h1 + n] = a * (c * v - s * u);  // sum r a cos(theta)
  }
  return ss * inv_n;
}

// ---------------------------------------------------------------------------

FourierFit fourier_train(const Series& train, const FourierTrainConfig& cfg) {
  if (cfg.period_points < 1) throw Error("fourier period must be positive");
  if (cfg.steps == 0) throw Error("fourier training needs at least one step");

  std::vector<std::string> warnings;
  if (static_cast<std::int64_t>(train.size()) < cfg.period_points) {
    warnings.push_back("training series (" + std::to_string(train.size()) +
                       " points) is shorter than one period (" +
                       std::to_string(cfg.period_points) + " points)");
  }

  std::vector<std::int64_t> indices(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) indices[i] = absolute_sample_index(train, i);
  const FourierObjective objective(indices, train.values(), cfg.period_points, cfg.harmonics);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> init(-cfg.init_scale, cfg.init_scale);
  std::vector<double> params(objective.num_params());
  for (double& p : params) p = init(rng);

  optim::AdagradState opt(params.size(), cfg.learning_rate);
  std::vector<double> grad(params.size());
  std::vector<double> history;
  history.reserve(cfg.steps);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const double loss = objective.loss_and_gradient(params, grad);
    if (!std::isfinite(loss)) {
      throw NumericError("fourier training diverged at step " + std::to_string(step));
    }
    history.push_back(loss);
    optim::adagrad_update(opt, params, grad);
  }
  const double final_loss = objective.loss(params);
  if (!std::isfinite(final_loss)) throw NumericError("fourier training diverged at final step");

  const std::size_t h1 = cfg.harmonics + 1;
  std::vector<double> amps(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(h1));
  std::vector<double> phases(params.begin() + static_cast<std::ptrdiff_t>(h1), params.end());
  return FourierFit{FourierModel(cfg.period_points, std::move(amps), std::move(phases)),
                    final_loss, std::move(history), std::move(warnings)};
}

}  // namespace dropwatch
