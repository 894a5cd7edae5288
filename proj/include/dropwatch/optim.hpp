#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace dropwatch::optim {

/// Adam with bias-corrected moment estimates.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  AdamState() = default;
  AdamState(std::size_t n, double learning_rate) : lr(learning_rate), m(n, 0.0), v(n, 0.0) {}
};

/// Adagrad: per-coordinate step lr / sqrt(sum of squared gradients).
struct AdagradState {
  double lr = 0.01;
  double epsilon = 1e-8;
  std::vector<double> g2;

  AdagradState() = default;
  AdagradState(std::size_t n, double learning_rate) : lr(learning_rate), g2(n, 0.0) {}
};

/// In-place update. Throws NumericError naming the first non-finite gradient.
void adam_update(AdamState& state, std::span<double> params, std::span<const double> grads);
void adagrad_update(AdagradState& state, std::span<double> params,
                    std::span<const double> grads);

using LossFn = std::function<double(std::span<const double>)>;
using GradFn = std::function<std::vector<double>(std::span<const double>)>;

/// Max over coordinates of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8),
/// with the numeric gradient taken by central differences of step h.
double check_gradient(const LossFn& loss, const GradFn& grad, std::span<const double> params,
                      double h = 1e-5);

}  // namespace dropwatch::optim
