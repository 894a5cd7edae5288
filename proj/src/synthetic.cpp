#include "dropwatch/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "dropwatch/error.hpp"

namespace dropwatch {

namespace {

class Noise {
 public:
  Noise(double stddev, std::uint64_t seed) : stddev_(stddev), rng_(seed) {
    if (!(stddev >= 0.0) || !std::isfinite(stddev)) {
      throw Error("noise standard deviation must be finite and non-negative");
    }
  }
  double operator()() { return stddev_ > 0.0 ? dist_(rng_) * stddev_ : 0.0; }

 private:
  double stddev_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace

std::string to_string(SyntheticKind kind) {
  return kind == SyntheticKind::sine ? "sine" : "stepwise_sine";
}

SyntheticKind parse_synthetic_kind(std::string_view text) {
  if (text == "sine") return SyntheticKind::sine;
  if (text == "stepwise_sine" || text == "stepwise") return SyntheticKind::stepwise_sine;
  throw Error("unknown synthetic kind '" + std::string(text) + "' (sine|stepwise_sine)");
}

void SyntheticSpec::validate() const {
  if (length < 1) throw Error("synthetic length must be at least 1");
  if (period_points < 2) throw Error("synthetic period must be at least 2");
  if (!(noise_stddev >= 0.0)) throw Error("synthetic noise must be non-negative");
  if (interval_seconds <= 0) throw Error("synthetic interval must be positive");
  if (start_timestamp < 0) throw Error("synthetic start timestamp must be non-negative");
}

double synthetic_clean_value(SyntheticKind kind, std::size_t t, std::size_t period_points) {
  const double phase = static_cast<double>(t % period_points) / static_cast<double>(period_points);
  const double v = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * phase);
  if (kind == SyntheticKind::sine) return v;
  const double level = std::clamp(std::floor(v * 4.0), 0.0, 3.0);
  return (level + 0.5) / 4.0;
}

Series gen(const SyntheticSpec& spec) {
  spec.validate();
  Noise noise(spec.noise_stddev, spec.seed);
  std::vector<double> values(spec.length);
  for (std::size_t t = 0; t < spec.length; ++t) {
    values[t] = synthetic_clean_value(spec.kind, t, spec.period_points) + noise();
  }
  return Series(spec.start_timestamp, spec.interval_seconds, std::move(values));
}

std::pair<Series, LabeledRegions> inject(const Series& s, const AnomalySpec& a) {
  if (a.length == 0 || a.start + a.length > s.size()) {
    throw Error("anomaly span [" + std::to_string(a.start) + ", " +
                std::to_string(a.start + a.length) + ") is outside the series of " +
                std::to_string(s.size()) + " points");
  }
  Noise noise(a.noise_stddev, a.seed);
  std::vector<double> values(s.values().begin(), s.values().end());
  for (std::size_t i = a.start; i < a.start + a.length; ++i) values[i] = a.level + noise();
  return {s.with_values(std::move(values)), LabeledRegions{{a.start, a.start + a.length - 1}}};
}

std::pair<Series, LabeledRegions> missing_peak(const Series& s, std::size_t day_index,
                                               double quiet_level, double noise_stddev,
                                               std::uint64_t seed) {
  constexpr std::int64_t kDay = 86400;
  if (kDay % s.interval_seconds() != 0) {
    throw Error("missing_peak needs an interval that divides one day");
  }
  const auto per_day = static_cast<std::size_t>(kDay / s.interval_seconds());
  const std::size_t first = day_index * per_day;
  if (first + per_day > s.size()) {
    throw Error("day " + std::to_string(day_index) + " is outside the series");
  }
  Noise noise(noise_stddev, seed);
  std::vector<double> values(s.values().begin(), s.values().end());
  std::vector<bool> modified(s.size(), false);
  for (std::size_t i = first; i < first + per_day; ++i) {
    if (values[i] > quiet_level) {
      values[i] = quiet_level + noise();
      modified[i] = true;
    }
  }
  return {s.with_values(std::move(values)), flags_to_regions(modified)};
}

}  // namespace dropwatch
