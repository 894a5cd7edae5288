#include "dropwatch/features.hpp"

#include <algorithm>

#include "dropwatch/error.hpp"

namespace dropwatch {

namespace {

std::size_t hot_index(std::span<const double> onehot) {
  return static_cast<std::size_t>(
      std::distance(onehot.begin(), std::max_element(onehot.begin(), onehot.end())));
}

}  // namespace

std::size_t FeatureRow::weekday() const { return hot_index(weekday_onehot); }
std::size_t FeatureRow::hour() const { return hot_index(hour_onehot); }

void FeatureRow::flatten_into(std::span<double> out) const {
  if (out.size() != width()) throw Error("feature row width mismatch");
  auto it = std::copy(weekday_onehot.begin(), weekday_onehot.end(), out.begin());
  it = std::copy(hour_onehot.begin(), hour_onehot.end(), it);
  *it++ = minute_linear;
  if (derivative) *it = *derivative;
}

std::vector<double> FeatureRow::flatten() const {
  std::vector<double> out(width());
  flatten_into(out);
  return out;
}

FeatureRow encode_time(std::int64_t timestamp) {
  if (timestamp < 0) throw Error("timestamp must be non-negative");
  constexpr std::int64_t kDay = 86400;
  const std::int64_t days = timestamp / kDay;
  const std::int64_t second_of_day = timestamp % kDay;
  FeatureRow row;
  // 1970-01-01 was a Thursday (index 3 with Monday=0).
  row.weekday_onehot[static_cast<std::size_t>((days + 3) % 7)] = 1.0;
  row.hour_onehot[static_cast<std::size_t>(second_of_day / 3600)] = 1.0;
  row.minute_linear = static_cast<double>((second_of_day % 3600) / 60) / 60.0;
  return row;
}

double derivative_feature(std::span<const double> values, std::size_t t) {
  if (t < 2) throw Error("derivative feature needs two past labels (t >= 2)");
  if (t > values.size()) throw Error("derivative feature index out of range");
  return values[t - 1] - values[t - 2];
}

FeatureRow encode_sample(const Series& s, std::size_t index, const FeatureConfig& cfg) {
  FeatureRow row = encode_time(s.timestamp(index));
  if (cfg.use_derivative) row.derivative = derivative_feature(s.values(), index);
  return row;
}

DesignMatrix build_design_matrix(const Series& s, const FeatureConfig& cfg) {
  if (s.size() <= cfg.warmup()) throw Error("series too short for the feature configuration");
  DesignMatrix m;
  m.first_index = cfg.warmup();
  m.rows.reserve(s.size() - m.first_index);
  for (std::size_t i = m.first_index; i < s.size(); ++i) m.rows.push_back(encode_sample(s, i, cfg));
  return m;
}

}  // namespace dropwatch
