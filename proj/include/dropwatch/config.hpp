#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dropwatch/detection.hpp"
#include "dropwatch/predictors.hpp"
#include "dropwatch/series.hpp"

namespace dropwatch {

/// Every tunable of a train/detect run. Serialized as flat `key = value`
/// lines; `#` starts a comment. See `RunConfig::keys()` for the full list.
struct RunConfig {
  ModelKind model = ModelKind::fourier;
  std::uint64_t seed = 0;
  std::optional<YearMonth> train_month;
  std::optional<YearMonth> test_month;
  bool csv_header = false;

  double baseline_threshold = kBaselineThreshold;
  /// Accumulator delta used instead of accumulator.local_delta for baseline runs.
  double baseline_local_delta = 0.05;

  FourierTrainConfig fourier;
  MlpTrainConfig mlp;
  DetectorConfig detector;

  static RunConfig parse(std::istream& in);
  static RunConfig parse_text(std::string_view text);
  static RunConfig load(const std::string& path);

  /// Sets one key from its textual value; throws on unknown keys.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  static const std::vector<std::string>& keys();

  std::string to_text() const;

  /// Detector settings for a model kind (baseline overrides the delta).
  DetectorConfig detector_for(ModelKind kind) const;
  FourierTrainConfig fourier_train_config() const;
  MlpTrainConfig mlp_train_config() const;
  void validate() const;
};

/// Independent per-component seed derived from the run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view component);

}  // namespace dropwatch
