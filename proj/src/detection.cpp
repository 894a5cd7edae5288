#include "dropwatch/detection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>

#include "dropwatch/error.hpp"
#include "text_util.hpp"

namespace dropwatch {

std::string to_string(LocalRule rule) {
  return rule == LocalRule::threshold ? "threshold" : "variance";
}

LocalRule parse_local_rule(std::string_view text) {
  if (text == "threshold") return LocalRule::threshold;
  if (text == "variance") return LocalRule::variance;
  throw Error("unknown local rule '" + std::string(text) + "' (threshold|variance)");
}

void AccumulatorConfig::validate() const {
  if (!(local_delta > 0 && not_anomalous_above > 0 && peak_value > 0 && fire_threshold > 0 &&
        variance_multiplier > 0)) {
    throw Error("accumulator parameters must be positive");
  }
  if (peak_value < not_anomalous_above) {
    throw Error("accumulator peak value must be >= the not-anomalous level");
  }
}

bool local_anomaly_threshold(double prediction, double actual, const AccumulatorConfig& cfg) {
  return prediction - actual > cfg.local_delta && actual < cfg.not_anomalous_above;
}

bool local_anomaly_variance(double prediction, double actual, double rolling_variance,
                            const AccumulatorConfig& cfg) {
  if (rolling_variance < 0.0) throw Error("rolling variance must be non-negative");
  return prediction - actual > cfg.variance_multiplier * rolling_variance;
}

bool accumulator_step(AccumulatorState& state, const AccumulatorConfig& cfg, double prediction,
                      double actual, std::optional<double> rolling_variance) {
  const bool variance_rule = cfg.local_rule == LocalRule::variance;
  if (variance_rule != rolling_variance.has_value()) {
    throw Error(variance_rule ? "variance rule needs a rolling variance"
                              : "rolling variance given but the threshold rule is active");
  }

  if (state.prev_prediction && *state.prev_prediction >= cfg.peak_value &&
      prediction < cfg.peak_value) {
    state.in_post_peak = true;
  }
  state.prev_prediction = prediction;

  const bool local = variance_rule
                         ? local_anomaly_variance(prediction, actual, *rolling_variance, cfg)
                         : local_anomaly_threshold(prediction, actual, cfg);
  const double before = state.acc;
  if (local) {
    state.acc += 1.0;
  } else {
    state.acc -= state.in_post_peak ? 3.0 : 2.0;
  }
  if (state.in_post_peak && before < 0.0 && state.acc >= 0.0) state.in_post_peak = false;

  const double floor = state.in_post_peak ? -cfg.fire_threshold : 0.0;
  state.acc = std::clamp(state.acc, floor, 1.5 * cfg.fire_threshold);
  return state.acc >= cfg.fire_threshold;
}

// ---------------------------------------------------------------------------

RollingWindow::RollingWindow(std::size_t capacity) : buffer_(capacity, 0.0) {
  if (capacity == 0) throw Error("rolling window capacity must be positive");
}

void RollingWindow::push(double x) {
  if (count_ < buffer_.size()) {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  } else {
    const double old = buffer_[head_];
    const double old_mean = mean_;
    mean_ += (x - old) / static_cast<double>(count_);
    m2_ += (x - old) * (x - mean_ + old - old_mean);
  }
  buffer_[head_] = x;
  head_ = (head_ + 1) % buffer_.size();
  // Bound floating-point drift of the sliding update.
  constexpr std::size_t kRecomputeEvery = 256;
  if (++since_recompute_ >= std::min(buffer_.size(), kRecomputeEvery)) recompute();
}

double RollingWindow::variance() const noexcept {
  if (count_ == 0) return 0.0;
  return std::max(0.0, m2_ / static_cast<double>(count_));
}

std::vector<double> RollingWindow::contents() const {
  std::vector<double> out;
  out.reserve(count_);
  const std::size_t cap = buffer_.size();
  const std::size_t first = (head_ + cap - count_) % cap;
  for (std::size_t i = 0; i < count_; ++i) out.push_back(buffer_[(first + i) % cap]);
  return out;
}

void RollingWindow::recompute() {
  since_recompute_ = 0;
  if (count_ == 0) return;
  const auto values = contents();
  double sum = 0.0;
  for (double v : values) sum += v;
  mean_ = sum / static_cast<double>(count_);
  double ss = 0.0;
  for (double v : values) ss += (v - mean_) * (v - mean_);
  m2_ = ss;
}

// ---------------------------------------------------------------------------

void TailProbConfig::validate() const {
  if (short_window == 0 || long_window == 0) throw Error("tail windows must be positive");
  if (short_window >= long_window) throw Error("tail short window must be shorter than the long window");
  if (!(likelihood_threshold > 0.0 && likelihood_threshold < 1.0)) {
    throw Error("tail likelihood threshold must lie in (0, 1)");
  }
  if (!(sigma_floor > 0.0)) throw Error("tail sigma floor must be positive");
}

double tail_likelihood(double short_mean, double long_mean, double long_sigma,
                       double sigma_floor) {
  const double z = (short_mean - long_mean) / std::max(long_sigma, sigma_floor);
  // 1 - Q(z) = erfc(-z / sqrt 2) / 2, without cancellation for large z.
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

TailProbState::TailProbState(const TailProbConfig& cfg)
    : long_(cfg.long_window), short_(cfg.short_window) {
  cfg.validate();
}

TailProbStep TailProbState::push(double score, const TailProbConfig& cfg) {
  long_.push(score);
  short_.push(score);
  ++seen_;
  if (seen_ <= cfg.long_window) return {};
  const double l = tail_likelihood(short_.mean(), long_.mean(), std::sqrt(long_.variance()),
                                   cfg.sigma_floor);
  return {l, l >= cfg.likelihood_threshold};
}

TailProbStep tailprob_step(TailProbState& state, const TailProbConfig& cfg, double score) {
  return state.push(score, cfg);
}

// ---------------------------------------------------------------------------

std::vector<bool> intersect(const std::vector<bool>& a, const std::vector<bool>& b) {
  if (a.size() != b.size()) throw Error("intersect: flag sequences differ in length");
  std::vector<bool> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] && b[i];
  return out;
}

std::vector<Region> flags_to_regions(const std::vector<bool>& flags) {
  std::vector<Region> out;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (!flags[i]) continue;
    if (!out.empty() && out.back().end + 1 == i) {
      out.back().end = i;
    } else {
      out.push_back({i, i});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

StreamDetector::StreamDetector(const DetectorConfig& cfg)
    : cfg_(cfg), tail_(cfg.tail), recent_actuals_(cfg.tail.short_window) {
  cfg_.accumulator.validate();
}

DetectionRow StreamDetector::step(std::size_t index, std::int64_t timestamp, double prediction,
                                  double actual) {
  DetectionRow row;
  row.index = index;
  row.timestamp = timestamp;
  row.prediction = prediction;
  row.actual = actual;

  std::optional<double> variance;
  if (cfg_.accumulator.local_rule == LocalRule::variance) {
    // Variance of the samples before this one; the current drop must not mask itself.
    variance = recent_actuals_.variance();
  }
  row.acc_flag = accumulator_step(acc_, cfg_.accumulator, prediction, actual, variance);
  recent_actuals_.push(actual);

  const TailProbStep tail = tail_.push(raw_score(prediction, actual), cfg_.tail);
  row.tail_likelihood = tail.likelihood;
  row.tail_flag = tail.flagged;
  row.intersect_flag = row.acc_flag && row.tail_flag;
  return row;
}

std::vector<DetectionRow> detect(const Series& actual, std::span<const double> predictions,
                                 std::size_t first_index, const DetectorConfig& cfg,
                                 std::size_t index_offset) {
  if (first_index + predictions.size() != actual.size()) {
    throw Error("detect: predictions do not cover the series");
  }
  StreamDetector detector(cfg);
  std::vector<DetectionRow> rows;
  rows.reserve(predictions.size());
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const std::size_t i = first_index + k;
    if (!std::isfinite(predictions[k])) {
      throw NumericError("non-finite prediction at index " + std::to_string(i));
    }
    rows.push_back(detector.step(index_offset + i, actual.timestamp(i), predictions[k], actual[i]));
  }
  return rows;
}

namespace {

template <typename Field>
std::vector<bool> collect(std::span<const DetectionRow> rows, Field field) {
  std::vector<bool> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = rows[i].*field;
  return out;
}

constexpr const char* kFlagsHeader =
    "index,timestamp,prediction,actual,acc_flag,tail_likelihood,tail_flag,intersect_flag";

bool parse_flag(std::string_view s, bool& out) {
  if (s == "0") {
    out = false;
  } else if (s == "1") {
    out = true;
  } else {
    return false;
  }
  return true;
}

}  // namespace

std::vector<bool> acc_flags(std::span<const DetectionRow> rows) {
  return collect(rows, &DetectionRow::acc_flag);
}
std::vector<bool> tail_flags(std::span<const DetectionRow> rows) {
  return collect(rows, &DetectionRow::tail_flag);
}
std::vector<bool> intersect_flags(std::span<const DetectionRow> rows) {
  return collect(rows, &DetectionRow::intersect_flag);
}

void write_flags_csv(std::ostream& out, std::span<const DetectionRow> rows) {
  out << kFlagsHeader << '\n';
  for (const auto& r : rows) {
    out << r.index << ',' << r.timestamp << ',' << detail::format_double(r.prediction) << ','
        << detail::format_double(r.actual) << ',' << (r.acc_flag ? 1 : 0) << ','
        << detail::format_double(r.tail_likelihood) << ',' << (r.tail_flag ? 1 : 0) << ','
        << (r.intersect_flag ? 1 : 0) << '\n';
  }
}

std::vector<DetectionRow> read_flags_csv(std::istream& in) {
  std::vector<DetectionRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = detail::trim(line);
    if (view.empty()) continue;
    if (line_no == 1 && view.starts_with("index")) continue;
    const auto f = detail::split(view, ',');
    if (f.size() != 8) throw ParseError("expected 8 fields in flags record", line_no);
    DetectionRow r;
    std::int64_t index = 0;
    if (!detail::parse_int(f[0], index) || index < 0 || !detail::parse_int(f[1], r.timestamp) ||
        !detail::parse_double(f[2], r.prediction) || !detail::parse_double(f[3], r.actual) ||
        !parse_flag(f[4], r.acc_flag) || !detail::parse_double(f[5], r.tail_likelihood) ||
        !parse_flag(f[6], r.tail_flag) || !parse_flag(f[7], r.intersect_flag)) {
      throw ParseError("malformed flags record", line_no);
    }
    r.index = static_cast<std::size_t>(index);
    if (!rows.empty() && r.index != rows.back().index + 1) {
      throw ParseError("flags indices must be consecutive", line_no);
    }
    rows.push_back(r);
  }
  return rows;
}

void write_flags_file(const std::string& path, std::span<const DetectionRow> rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_flags_csv(out, rows);
  if (!out) throw Error("write failed: " + path);
}

std::vector<DetectionRow> read_flags_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_flags_csv(in);
}

}  // namespace dropwatch
