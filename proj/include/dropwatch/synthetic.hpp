#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "dropwatch/evaluation.hpp"
#include "dropwatch/series.hpp"

namespace dropwatch {

enum class SyntheticKind { sine, stepwise_sine };

std::string to_string(SyntheticKind kind);
SyntheticKind parse_synthetic_kind(std::string_view text);

/// 2017-04-01T00:00:00Z
inline constexpr std::int64_t kDefaultSyntheticStart = 1491004800;

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::sine;
  std::size_t period_points = 288;
  std::size_t length = 8640;
  double noise_stddev = 0.0;
  std::uint64_t seed = 0;
  std::int64_t start_timestamp = kDefaultSyntheticStart;
  std::int64_t interval_seconds = kDefaultIntervalSeconds;

  void validate() const;
};

/// Noise-free value at sample t: 0.5 + 0.5 sin(2 pi t / P), or that sine
/// quantized to the four levels {0.125, 0.375, 0.625, 0.875}.
double synthetic_clean_value(SyntheticKind kind, std::size_t t, std::size_t period_points);

/// Deterministic for a given spec; Gaussian noise is added, nothing is clamped.
Series gen(const SyntheticSpec& spec);

struct AnomalySpec {
  std::size_t start = 0;
  std::size_t length = 0;
  double level = 0.0;
  double noise_stddev = 0.0;
  std::uint64_t seed = 0;
};

/// Replaces the span with noise around `level` and returns it as the label.
std::pair<Series, LabeledRegions> inject(const Series& s, const AnomalySpec& a);

/// Within day `day_index` (blocks of one day of samples from the series
/// start), pulls every value above `quiet_level` down to it. Labels are the
/// maximal runs of modified samples.
std::pair<Series, LabeledRegions> missing_peak(const Series& s, std::size_t day_index,
                                               double quiet_level, double noise_stddev = 0.0,
                                               std::uint64_t seed = 0);

}  // namespace dropwatch
