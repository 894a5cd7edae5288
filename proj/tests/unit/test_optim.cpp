#include <doctest.h>

#include <cmath>
#include <limits>

#include "dropwatch/error.hpp"
#include "dropwatch/optim.hpp"

using namespace dropwatch;
using namespace dropwatch::optim;

TEST_CASE("adam first step moves by the learning rate") {
  AdamState s(1, 0.1);
  std::vector<double> p{0.0};
  const std::vector<double> g{1.0};
  adam_update(s, p, g);
  // m_hat = v_hat = 1 after bias correction: step = 0.1 * 1 / (1 + 1e-8).
  CHECK(p[0] == doctest::Approx(-0.1).epsilon(1e-9));
  CHECK(s.step == 1);
}

TEST_CASE("adam and adagrad ignore zero gradients") {
  AdamState a(3, 0.1);
  AdagradState g(3, 0.5);
  std::vector<double> p{1.0, -2.0, 3.0};
  const std::vector<double> zero(3, 0.0);
  for (int i = 0; i < 50; ++i) {
    adam_update(a, p, zero);
    adagrad_update(g, p, zero);
  }
  CHECK(p == std::vector<double>{1.0, -2.0, 3.0});
  CHECK(g.g2 == zero);
  CHECK(a.step == 50);
}

TEST_CASE("optimizers reject non-finite gradients") {
  AdamState a(2, 0.1);
  std::vector<double> p{0.0, 0.0};
  const std::vector<double> bad{0.0, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_WITH_AS(adam_update(a, p, bad), doctest::Contains("index 1"), NumericError);
  AdagradState g(2, 0.1);
  CHECK_THROWS_AS(adagrad_update(g, p, bad), NumericError);
  CHECK_THROWS_AS(adagrad_update(g, p, std::vector<double>{1.0}), Error);
}

TEST_CASE("adagrad first step") {
  AdagradState s(1, 0.5);
  std::vector<double> p{0.0};
  adagrad_update(s, p, std::vector<double>{2.0});
  CHECK(p[0] == doctest::Approx(-0.5).epsilon(1e-8));  // 0.5 * 2 / sqrt(4)
  CHECK(p[0] == doctest::Approx(-1.0 / (2.0 + 1e-8)).epsilon(1e-15));  // epsilon in the denominator
  CHECK(s.g2[0] == 4.0);
}

TEST_CASE("adagrad step shrinks for repeated gradients") {
  AdagradState s(1, 0.5);
  std::vector<double> p{0.0};
  double prev_step = std::numeric_limits<double>::infinity();
  double prev_g2 = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double before = p[0];
    adagrad_update(s, p, std::vector<double>{1.5});
    const double step = std::abs(p[0] - before);
    CHECK(step < prev_step);
    CHECK(s.g2[0] >= prev_g2);
    prev_step = step;
    prev_g2 = s.g2[0];
  }
}

TEST_CASE("both optimizers converge on a one-dimensional quadratic") {
  // loss = (p - 3)^2 / 2, gradient p - 3.
  AdamState adam(1, 0.1);
  std::vector<double> p{0.0};
  for (int i = 0; i < 200; ++i) adam_update(adam, p, std::vector<double>{p[0] - 3.0});
  CHECK(std::abs(p[0] - 3.0) < 0.05);

  AdagradState ada(1, 1.0);
  std::vector<double> q{0.0};
  for (int i = 0; i < 200; ++i) adagrad_update(ada, q, std::vector<double>{q[0] - 3.0});
  CHECK(std::abs(q[0] - 3.0) < 0.05);
}

TEST_CASE("check_gradient") {
  const LossFn loss = [](std::span<const double> p) {
    double s = 0.0;
    for (double v : p) s += 0.5 * v * v;
    return s;
  };
  const GradFn good = [](std::span<const double> p) { return std::vector<double>(p.begin(), p.end()); };
  const GradFn bad = [](std::span<const double> p) {
    std::vector<double> g(p.begin(), p.end());
    for (double& v : g) v *= 2.0;
    return g;
  };
  const std::vector<double> params{0.7, -1.3, 2.1, 0.25};
  CHECK(check_gradient(loss, good, params, 1e-5) < 1e-7);
  // |2p - p| / max(|2p|, |p|) = 1/2 for every coordinate.
  CHECK(check_gradient(loss, bad, params, 1e-5) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(check_gradient(loss, good, std::vector<double>{}, 1e-5) == 0.0);
}
