#include "dropwatch/series.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "dropwatch/error.hpp"
#include "text_util.hpp"

namespace dropwatch {

Series::Series(std::int64_t start_timestamp, std::int64_t interval_seconds,
               std::vector<double> values, std::vector<std::size_t> filled)
    : start_(start_timestamp),
      interval_(interval_seconds),
      values_(std::move(values)),
      filled_(std::move(filled)) {
  if (interval_ <= 0) throw Error("series interval must be positive");
  if (values_.empty()) throw Error("series must contain at least one value");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error("series value at index " + std::to_string(i) + " is not finite");
    }
  }
  std::sort(filled_.begin(), filled_.end());
  filled_.erase(std::unique(filled_.begin(), filled_.end()), filled_.end());
  if (!filled_.empty() && filled_.back() >= values_.size()) {
    throw Error("filled index out of range");
  }
}

bool Series::is_filled(std::size_t i) const {
  return std::binary_search(filled_.begin(), filled_.end(), i);
}

Series Series::slice(std::size_t first, std::size_t count) const {
  if (count == 0 || first + count > values_.size()) throw Error("series slice out of range");
  std::vector<double> vals(values_.begin() + static_cast<std::ptrdiff_t>(first),
                           values_.begin() + static_cast<std::ptrdiff_t>(first + count));
  std::vector<std::size_t> filled;
  for (std::size_t idx : filled_) {
    if (idx >= first && idx < first + count) filled.push_back(idx - first);
  }
  return Series(timestamp(first), interval_, std::move(vals), std::move(filled));
}

Series Series::with_values(std::vector<double> values) const {
  if (values.size() != values_.size()) throw Error("with_values: length mismatch");
  return Series(start_, interval_, std::move(values), filled_);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::int64_t infer_interval(const std::vector<RawPoint>& points) {
  std::map<std::int64_t, std::size_t> counts;
  for (std::size_t i = 1; i < points.size(); ++i) {
    ++counts[points[i].timestamp - points[i - 1].timestamp];
  }
  // Mode of consecutive differences; ties resolve to the smallest difference.
  std::int64_t best = 0;
  std::size_t best_count = 0;
  for (const auto& [diff, count] : counts) {
    if (count > best_count) {
      best = diff;
      best_count = count;
    }
  }
  return best;
}

}  // namespace

Series ingest_csv(std::istream& in, const CsvOptions& options) {
  std::vector<RawPoint> points;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (options.header && line_no == 1) continue;
    std::string_view view = detail::trim(line);
    if (view.empty()) continue;
    auto fields = detail::split(view, ',');
    if (fields.size() != 2) throw ParseError("expected `timestamp,value`", line_no);
    std::int64_t ts = 0;
    double value = 0.0;
    if (!detail::parse_int(fields[0], ts)) throw ParseError("bad timestamp", line_no);
    if (!detail::parse_double(fields[1], value)) throw ParseError("bad value", line_no);
    if (ts < 0) throw ParseError("negative timestamp", line_no);
    if (!std::isfinite(value)) throw ParseError("value is not finite", line_no);
    if (!points.empty()) {
      if (ts == points.back().timestamp) throw ParseError("duplicate timestamp", line_no);
      if (ts < points.back().timestamp) throw ParseError("non-monotonic timestamp", line_no);
    }
    points.push_back({ts, value});
  }
  if (points.empty()) throw Error("csv contains no records");
  if (options.interval_seconds && *options.interval_seconds <= 0) {
    throw Error("csv interval must be positive");
  }
  if (points.size() == 1) {
    return Series(points[0].timestamp, options.interval_seconds.value_or(kDefaultIntervalSeconds),
                  {points[0].value});
  }

  const std::int64_t interval = options.interval_seconds.value_or(infer_interval(points));
  std::vector<double> values{points[0].value};
  std::vector<std::size_t> filled;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const std::int64_t diff = points[i].timestamp - points[i - 1].timestamp;
    if (diff % interval != 0) {
      throw Error("inconsistent sampling interval before timestamp " +
                  std::to_string(points[i].timestamp) + " (interval " +
                  std::to_string(interval) + ")");
    }
    const std::int64_t steps = diff / interval;
    const double a = points[i - 1].value;
    const double b = points[i].value;
    for (std::int64_t k = 1; k < steps; ++k) {
      const double frac = static_cast<double>(k) / static_cast<double>(steps);
      filled.push_back(values.size());
      values.push_back(a + (b - a) * frac);
    }
    values.push_back(b);
  }
  return Series(points[0].timestamp, interval, std::move(values), std::move(filled));
}

Series ingest_csv_text(std::string_view text, const CsvOptions& options) {
  std::istringstream in{std::string(text)};
  return ingest_csv(in, options);
}

Series ingest_csv_file(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return ingest_csv(in, options);
}

void write_csv(std::ostream& out, const Series& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << s.timestamp(i) << ',' << detail::format_double(s[i]) << '\n';
  }
}

void write_csv_file(const std::string& path, const Series& s) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_csv(out, s);
  if (!out) throw Error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Normalization

NormalizationParams fit_normalization(const Series& train) {
  const auto [lo, hi] = std::minmax_element(train.values().begin(), train.values().end());
  if (!(*hi > *lo)) throw Error("cannot normalize a constant series");
  return {*lo, *hi};
}

double normalize_value(double v, const NormalizationParams& p) {
  return (v - p.min) / (p.max - p.min);
}

Series normalize(const Series& s, const NormalizationParams& p) {
  if (!(p.max > p.min)) throw Error("normalization requires max > min");
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = normalize_value(s[i], p);
  return s.with_values(std::move(out));
}

Series denormalize(const Series& s, const NormalizationParams& p) {
  if (!(p.max > p.min)) throw Error("normalization requires max > min");
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = p.min + s[i] * (p.max - p.min);
  return s.with_values(std::move(out));
}

// ---------------------------------------------------------------------------
// Calendar

YearMonth parse_year_month(std::string_view text) {
  text = detail::trim(text);
  auto parts = detail::split(text, '-');
  std::int64_t year = 0;
  std::int64_t month = 0;
  if (parts.size() != 2 || parts[0].size() != 4 || !detail::parse_int(parts[0], year) ||
      !detail::parse_int(parts[1], month) || month < 1 || month > 12) {
    throw Error("expected a month as YYYY-MM, got '" + std::string(text) + "'");
  }
  return {static_cast<int>(year), static_cast<unsigned>(month)};
}

std::string to_string(const YearMonth& ym) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u", ym.year, ym.month);
  return buf;
}

std::int64_t month_begin(const YearMonth& ym) {
  using namespace std::chrono;
  const sys_days day{year{ym.year} / month{ym.month} / 1};
  return duration_cast<seconds>(day.time_since_epoch()).count();
}

std::int64_t month_end(const YearMonth& ym) {
  YearMonth next = ym.month == 12 ? YearMonth{ym.year + 1, 1} : YearMonth{ym.year, ym.month + 1};
  return month_begin(next);
}

Series select_month(const Series& s, const YearMonth& ym) {
  const std::int64_t lo = month_begin(ym);
  const std::int64_t hi = month_end(ym);
  const std::int64_t step = s.interval_seconds();
  const std::int64_t start = s.start_timestamp();
  // First index with timestamp >= lo, first index with timestamp >= hi.
  auto first_at_or_after = [&](std::int64_t t) -> std::int64_t {
    if (t <= start) return 0;
    return std::min<std::int64_t>((t - start + step - 1) / step,
                                  static_cast<std::int64_t>(s.size()));
  };
  const std::int64_t first = first_at_or_after(lo);
  const std::int64_t last = first_at_or_after(hi);
  if (last <= first) throw Error("month " + to_string(ym) + " has no points in the series");
  return s.slice(static_cast<std::size_t>(first), static_cast<std::size_t>(last - first));
}

std::pair<Series, Series> split_by_month(const Series& s, const YearMonth& train_month,
                                         const YearMonth& test_month) {
  return {select_month(s, train_month), select_month(s, test_month)};
}

}  // namespace dropwatch
