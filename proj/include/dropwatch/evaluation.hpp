#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dropwatch/detection.hpp"

namespace dropwatch {

/// Ground-truth anomaly spans, inclusive, sorted and non-overlapping.
using LabeledRegions = std::vector<Region>;

/// Throws unless spans are ordered, disjoint and inside [0, length).
void validate_labels(const LabeledRegions& labels, std::size_t length);

struct ConfusionMatrix {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t true_negatives = 0;
  std::size_t false_negatives = 0;

  std::size_t total() const noexcept {
    return true_positives + false_positives + true_negatives + false_negatives;
  }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Half-open index range [begin, end).
struct ScoredRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end > begin ? end - begin : 0; }
};

/// Point-level confusion over `range`, skipping indices listed in `excluded`.
ConfusionMatrix confusion(const std::vector<bool>& flags, const LabeledRegions& labels,
                          ScoredRange range, std::span<const std::size_t> excluded = {});

/// Pearson correlation between every pair of equally long streams.
std::vector<std::vector<double>> correlation_matrix(std::span<const std::vector<double>> streams);

struct RuleReport {
  std::string rule;  // accumulator | tail | intersection
  ConfusionMatrix matrix;
  std::vector<Region> regions;
};

struct Report {
  std::vector<RuleReport> rules;
  ScoredRange scored;
  std::size_t scored_points = 0;
  std::optional<double> mse_train;
  std::optional<double> mse_validation;

  const RuleReport& rule(std::string_view name) const;
};

struct SummaryOptions {
  /// Leading rows excluded from scoring (the tail rule's blind window).
  std::size_t skip_leading = 0;
  /// Row positions excluded from scoring (interpolated samples).
  std::vector<std::size_t> excluded;
  std::optional<double> mse_train;
  std::optional<double> mse_validation;
};

/// Scores the three rules of a detection run. `labels` are row positions.
Report summarize(std::span<const DetectionRow> rows, const LabeledRegions& labels,
                 const SummaryOptions& options = {});

std::string report_to_json(const Report& report);
Report report_from_json(std::string_view text);
/// Aligned-column console table.
std::string format_table(const Report& report);

/// `start_index,end_index` per line, inclusive; an optional header line.
LabeledRegions read_labels_csv(std::istream& in);
LabeledRegions read_labels_file(const std::string& path);
void write_labels_csv(std::ostream& out, const LabeledRegions& labels);
void write_labels_file(const std::string& path, const LabeledRegions& labels);

/// Moves labels from an absolute index frame into [0, length) starting at
/// `offset`; spans are clipped, and spans entirely outside are dropped.
LabeledRegions rebase_labels(const LabeledRegions& labels, std::size_t offset, std::size_t length);

}  // namespace dropwatch
