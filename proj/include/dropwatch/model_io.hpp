#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dropwatch/predictors.hpp"
#include "dropwatch/series.hpp"

namespace dropwatch {

/// A persisted model plus the normalization fitted on its training month.
///
/// Binary layout, all integers and doubles little-endian:
///
///   magic     8 bytes  "DWMODEL\0"
///   version   u32      1
///   kind      u32      0 baseline | 1 fourier | 2 mlp
///   has_norm  u32      0 | 1
///   norm      f64 min, f64 max (present iff has_norm)
///   baseline: f64 threshold
///   fourier:  i64 period, u64 H, f64[H+1] amplitudes, f64[H+1] phases
///   mlp:      u32 use_derivative, u64 layer_count+1, u64 widths[...],
///             u64 param_count, f64 params[param_count]
struct ModelFile {
  std::unique_ptr<Predictor> model;
  std::optional<NormalizationParams> normalization;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize_model(const Predictor& model,
                                          const std::optional<NormalizationParams>& norm);
ModelFile deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const std::string& path, const Predictor& model,
                const std::optional<NormalizationParams>& norm);
ModelFile load_model(const std::string& path);

}  // namespace dropwatch
