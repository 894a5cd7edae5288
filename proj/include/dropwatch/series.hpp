#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dropwatch {

inline constexpr std::int64_t kDefaultIntervalSeconds = 300;

struct RawPoint {
  std::int64_t timestamp = 0;
  double value = 0.0;
};

/// Uniformly sampled series. Timestamps are implied by
/// `start + i * interval`. Indices that were synthesized to fill gaps in
/// the source data are tracked so that scoring can skip them.
class Series {
 public:
  Series(std::int64_t start_timestamp, std::int64_t interval_seconds,
         std::vector<double> values, std::vector<std::size_t> filled = {});

  std::int64_t start_timestamp() const noexcept { return start_; }
  std::int64_t interval_seconds() const noexcept { return interval_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::int64_t timestamp(std::size_t i) const noexcept {
    return start_ + static_cast<std::int64_t>(i) * interval_;
  }
  std::int64_t end_timestamp() const noexcept { return timestamp(size() - 1); }

  /// Sorted indices that were interpolated during ingestion.
  std::span<const std::size_t> filled_indices() const noexcept { return filled_; }
  bool is_filled(std::size_t i) const;

  /// Contiguous sub-range [first, first + count) keeping gap bookkeeping.
  Series slice(std::size_t first, std::size_t count) const;

  /// Same timestamps, new values.
  Series with_values(std::vector<double> values) const;

 private:
  std::int64_t start_;
  std::int64_t interval_;
  std::vector<double> values_;
  std::vector<std::size_t> filled_;
};

struct NormalizationParams {
  double min = 0.0;
  double max = 1.0;
};

struct CsvOptions {
  bool header = false;
  /// Known sampling interval; inferred from the records when unset.
  std::optional<std::int64_t> interval_seconds;
};

/// Parses `timestamp,value` records. Missing interior samples are filled by
/// linear interpolation and reported through Series::filled_indices().
Series ingest_csv(std::istream& in, const CsvOptions& options = {});
Series ingest_csv_text(std::string_view text, const CsvOptions& options = {});
Series ingest_csv_file(const std::string& path, const CsvOptions& options = {});

/// Writes one `timestamp,value` record per sample with round-trip precision.
void write_csv(std::ostream& out, const Series& s);
void write_csv_file(const std::string& path, const Series& s);

NormalizationParams fit_normalization(const Series& train);
Series normalize(const Series& s, const NormalizationParams& p);
Series denormalize(const Series& s, const NormalizationParams& p);
double normalize_value(double v, const NormalizationParams& p);

struct YearMonth {
  int year = 1970;
  unsigned month = 1;  // 1..12

  friend bool operator==(const YearMonth&, const YearMonth&) = default;
};

/// Parses "YYYY-MM".
YearMonth parse_year_month(std::string_view text);
std::string to_string(const YearMonth& ym);

/// Unix seconds of the first instant of the month (UTC).
std::int64_t month_begin(const YearMonth& ym);
/// Unix seconds of the first instant of the following month (UTC).
std::int64_t month_end(const YearMonth& ym);

/// Points whose timestamp lies in [month_begin, month_end).
Series select_month(const Series& s, const YearMonth& ym);

/// (train, test) restricted to the two calendar months.
std::pair<Series, Series> split_by_month(const Series& s, const YearMonth& train_month,
                                         const YearMonth& test_month);

}  // namespace dropwatch
