#include "dropwatch/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dropwatch/error.hpp"

namespace dropwatch::optim {

namespace {

void check_shapes(std::size_t state_size, std::span<double> params,
                  std::span<const double> grads) {
  if (params.size() != grads.size() || state_size != params.size()) {
    throw Error("optimizer: params, grads and state must have the same length");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericError("non-finite gradient at index " + std::to_string(i));
    }
  }
}

}  // namespace

void adam_update(AdamState& state, std::span<double> params, std::span<const double> grads) {
  check_shapes(state.m.size(), params, grads);
  if (state.v.size() != state.m.size()) throw Error("adam: moment vectors differ in length");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

void adagrad_update(AdagradState& state, std::span<double> params,
                    std::span<const double> grads) {
  check_shapes(state.g2.size(), params, grads);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.g2[i] += g * g;
    params[i] -= state.lr * g / (std::sqrt(state.g2[i]) + state.epsilon);
  }
}

double check_gradient(const LossFn& loss, const GradFn& grad, std::span<const double> params,
                      double h) {
  if (params.empty()) return 0.0;
  const std::vector<double> analytic = grad(params);
  if (analytic.size() != params.size()) throw Error("check_gradient: gradient length mismatch");
  std::vector<double> probe(params.begin(), params.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double up = loss(probe);
    probe[i] = saved - h;
    const double down = loss(probe);
    probe[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace dropwatch::optim
