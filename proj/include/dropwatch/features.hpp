#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dropwatch/series.hpp"

namespace dropwatch {

inline constexpr std::size_t kTimeFeatureWidth = 7 + 24 + 1;

/// Model input for one sample. Weekday index is Monday=0..Sunday=6 (UTC).
struct FeatureRow {
  std::array<double, 7> weekday_onehot{};
  std::array<double, 24> hour_onehot{};
  double minute_linear = 0.0;  // minute-of-hour / 60
  std::optional<double> derivative;

  std::size_t width() const noexcept { return kTimeFeatureWidth + (derivative ? 1 : 0); }
  std::size_t weekday() const;
  std::size_t hour() const;

  /// Flat layout: weekday[7], hour[24], minute, [derivative].
  std::vector<double> flatten() const;
  void flatten_into(std::span<double> out) const;
};

struct FeatureConfig {
  bool use_derivative = false;

  std::size_t width() const noexcept { return kTimeFeatureWidth + (use_derivative ? 1 : 0); }
  /// Number of leading samples that cannot be encoded.
  std::size_t warmup() const noexcept { return use_derivative ? 2 : 0; }
};

FeatureRow encode_time(std::int64_t timestamp);

/// values[t-1] - values[t-2]; only strictly past labels.
double derivative_feature(std::span<const double> values, std::size_t t);

/// Encodes the sample at `index` of `s`.
FeatureRow encode_sample(const Series& s, std::size_t index, const FeatureConfig& cfg);

/// Rows for indices [first_index, s.size()).
struct DesignMatrix {
  std::size_t first_index = 0;
  std::vector<FeatureRow> rows;

  std::size_t width() const { return rows.empty() ? 0 : rows.front().width(); }
};

DesignMatrix build_design_matrix(const Series& s, const FeatureConfig& cfg);

}  // namespace dropwatch
