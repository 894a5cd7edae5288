#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dropwatch/series.hpp"

namespace dropwatch {

/// One-sided shortfall of the actual value below the prediction.
inline double raw_score(double prediction, double actual) {
  const double d = prediction - actual;
  return d > 0.0 ? d : 0.0;
}

// ---------------------------------------------------------------------------
// Accumulator rule

enum class LocalRule { threshold, variance };

std::string to_string(LocalRule rule);
LocalRule parse_local_rule(std::string_view text);

struct AccumulatorConfig {
  double local_delta = 0.1;
  double not_anomalous_above = 0.3;
  double peak_value = 0.35;
  double fire_threshold = 15.0;
  double variance_multiplier = 20.0;
  LocalRule local_rule = LocalRule::threshold;

  void validate() const;
};

struct AccumulatorState {
  double acc = 0.0;
  bool in_post_peak = false;
  std::optional<double> prev_prediction;
};

/// Actual is more than `local_delta` below the prediction and below the
/// level above which nothing counts as anomalous.
bool local_anomaly_threshold(double prediction, double actual, const AccumulatorConfig& cfg);

/// Drop below the prediction larger than `variance_multiplier` times the
/// rolling variance.
bool local_anomaly_variance(double prediction, double actual, double rolling_variance,
                            const AccumulatorConfig& cfg);

/// Advances the accumulator by one sample and returns whether it fires.
///
/// +1 on a local anomaly, -2 otherwise. A falling edge of the prediction
/// through `peak_value` enters post-peak mode: non-anomalous samples then
/// cost -3 and the floor drops to -fire_threshold. The mode ends when the
/// accumulator climbs from below zero back to zero or above. The ceiling is
/// always 1.5 * fire_threshold.
///
/// `rolling_variance` must be given exactly when the variance rule is active.
bool accumulator_step(AccumulatorState& state, const AccumulatorConfig& cfg, double prediction,
                      double actual, std::optional<double> rolling_variance = std::nullopt);

// ---------------------------------------------------------------------------
// Rolling statistics

/// Fixed-capacity window with O(1) mean and population variance.
class RollingWindow {
 public:
  explicit RollingWindow(std::size_t capacity);

  void push(double x);

  std::size_t capacity() const noexcept { return buffer_.size(); }
  std::size_t size() const noexcept { return count_; }
  bool full() const noexcept { return count_ == buffer_.size(); }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept;

  /// Contents, oldest first.
  std::vector<double> contents() const;

 private:
  void recompute();

  std::vector<double> buffer_;
  std::size_t head_ = 0;   // next write position
  std::size_t count_ = 0;
  std::size_t since_recompute_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;        // sum of squared deviations from mean_
};

// ---------------------------------------------------------------------------
// Gaussian tail probability rule

struct TailProbConfig {
  std::size_t long_window = 2016;
  std::size_t short_window = 10;
  double likelihood_threshold = 1.0 - 1e-4;
  /// Lower bound applied to the long-window standard deviation.
  double sigma_floor = 1e-8;

  void validate() const;
};

/// 1 - Q((mu_short - mu_long) / max(sigma_long, floor)), Q the Gaussian upper tail.
double tail_likelihood(double short_mean, double long_mean, double long_sigma, double sigma_floor);

struct TailProbStep {
  double likelihood = 0.0;
  bool flagged = false;
};

class TailProbState {
 public:
  explicit TailProbState(const TailProbConfig& cfg);

  TailProbStep push(double score, const TailProbConfig& cfg);

  const RollingWindow& long_window() const noexcept { return long_; }
  const RollingWindow& short_window() const noexcept { return short_; }
  std::size_t seen() const noexcept { return seen_; }

 private:
  RollingWindow long_;
  RollingWindow short_;
  std::size_t seen_ = 0;
};

/// Pushes one raw score. The first `long_window` samples are a blind
/// period: likelihood 0 and never flagged.
TailProbStep tailprob_step(TailProbState& state, const TailProbConfig& cfg, double score);

// ---------------------------------------------------------------------------
// Combination and regions

std::vector<bool> intersect(const std::vector<bool>& a, const std::vector<bool>& b);

struct Region {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive

  std::size_t length() const noexcept { return end - start + 1; }
  friend bool operator==(const Region&, const Region&) = default;
};

/// Maximal runs of true values.
std::vector<Region> flags_to_regions(const std::vector<bool>& flags);

// ---------------------------------------------------------------------------
// Full per-stream pipeline

struct DetectorConfig {
  AccumulatorConfig accumulator;
  TailProbConfig tail;
};

struct DetectionRow {
  std::size_t index = 0;
  std::int64_t timestamp = 0;
  double prediction = 0.0;
  double actual = 0.0;
  bool acc_flag = false;
  double tail_likelihood = 0.0;
  bool tail_flag = false;
  bool intersect_flag = false;
};

/// Runs both rules over one stream, one sample at a time.
class StreamDetector {
 public:
  explicit StreamDetector(const DetectorConfig& cfg);

  /// Consumes the next sample in stream order.
  DetectionRow step(std::size_t index, std::int64_t timestamp, double prediction, double actual);

  const AccumulatorState& accumulator() const noexcept { return acc_; }
  const TailProbState& tail() const noexcept { return tail_; }

 private:
  DetectorConfig cfg_;
  AccumulatorState acc_;
  TailProbState tail_;
  RollingWindow recent_actuals_;
};

/// `predictions[k]` belongs to sample `first_index + k` of `actual`.
/// Output indices are `index_offset + sample index`.
std::vector<DetectionRow> detect(const Series& actual, std::span<const double> predictions,
                                 std::size_t first_index, const DetectorConfig& cfg,
                                 std::size_t index_offset = 0);

std::vector<bool> acc_flags(std::span<const DetectionRow> rows);
std::vector<bool> tail_flags(std::span<const DetectionRow> rows);
std::vector<bool> intersect_flags(std::span<const DetectionRow> rows);

/// `index,timestamp,prediction,actual,acc_flag,tail_likelihood,tail_flag,intersect_flag`
/// with a header line; flags are written as 0/1.
void write_flags_csv(std::ostream& out, std::span<const DetectionRow> rows);
std::vector<DetectionRow> read_flags_csv(std::istream& in);
void write_flags_file(const std::string& path, std::span<const DetectionRow> rows);
std::vector<DetectionRow> read_flags_file(const std::string& path);

}  // namespace dropwatch
