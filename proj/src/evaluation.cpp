#include "dropwatch/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "dropwatch/error.hpp"
#include "text_util.hpp"

namespace dropwatch {

using Json = nlohmann::ordered_json;

void validate_labels(const LabeledRegions& labels, std::size_t length) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Region& r = labels[i];
    if (r.end < r.start) throw Error("label span " + std::to_string(i) + " ends before it starts");
    if (r.end >= length) {
      throw Error("label span (" + std::to_string(r.start) + "," + std::to_string(r.end) +
                  ") is out of range for " + std::to_string(length) + " points");
    }
    if (i > 0 && r.start <= labels[i - 1].end) {
      throw Error("label spans must be sorted and non-overlapping");
    }
  }
}

ConfusionMatrix confusion(const std::vector<bool>& flags, const LabeledRegions& labels,
                          ScoredRange range, std::span<const std::size_t> excluded) {
  if (range.end > flags.size()) throw Error("scored range exceeds the flag sequence");
  validate_labels(labels, flags.size());
  std::vector<bool> in_label(flags.size(), false);
  for (const Region& r : labels) {
    std::fill(in_label.begin() + static_cast<std::ptrdiff_t>(r.start),
              in_label.begin() + static_cast<std::ptrdiff_t>(r.end + 1), true);
  }
  std::vector<bool> skip(flags.size(), false);
  for (std::size_t i : excluded) {
    if (i < skip.size()) skip[i] = true;
  }
  ConfusionMatrix m;
  for (std::size_t i = range.begin; i < range.end; ++i) {
    if (skip[i]) continue;
    if (flags[i]) {
      ++(in_label[i] ? m.true_positives : m.false_positives);
    } else {
      ++(in_label[i] ? m.false_negatives : m.true_negatives);
    }
  }
  return m;
}

std::vector<std::vector<double>> correlation_matrix(std::span<const std::vector<double>> streams) {
  if (streams.size() < 2) throw Error("correlation needs at least two streams");
  const std::size_t n = streams.front().size();
  if (n < 3) throw Error("correlation needs at least three points per stream");
  std::vector<std::vector<double>> centered;
  std::vector<double> norms;
  for (std::size_t k = 0; k < streams.size(); ++k) {
    if (streams[k].size() != n) throw Error("correlation streams must have equal lengths");
    double mean = 0.0;
    for (double v : streams[k]) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> c(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      c[i] = streams[k][i] - mean;
      ss += c[i] * c[i];
    }
    if (!(ss > 0.0)) throw Error("stream " + std::to_string(k) + " is constant; correlation undefined");
    centered.push_back(std::move(c));
    norms.push_back(std::sqrt(ss));
  }
  const std::size_t m = streams.size();
  std::vector<std::vector<double>> r(m, std::vector<double>(m, 1.0));
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += centered[a][i] * centered[b][i];
      const double v = std::clamp(dot / (norms[a] * norms[b]), -1.0, 1.0);
      r[a][b] = v;
      r[b][a] = v;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------

const RuleReport& Report::rule(std::string_view name) const {
  for (const auto& r : rules) {
    if (r.rule == name) return r;
  }
  throw Error("report has no rule '" + std::string(name) + "'");
}

Report summarize(std::span<const DetectionRow> rows, const LabeledRegions& labels,
                 const SummaryOptions& options) {
  Report report;
  report.scored = {std::min(options.skip_leading, rows.size()), rows.size()};
  report.mse_train = options.mse_train;
  report.mse_validation = options.mse_validation;

  const std::pair<const char*, std::vector<bool>> rules[] = {
      {"accumulator", acc_flags(rows)},
      {"tail", tail_flags(rows)},
      {"intersection", intersect_flags(rows)},
  };
  for (const auto& [name, flags] : rules) {
    RuleReport r;
    r.rule = name;
    r.matrix = confusion(flags, labels, report.scored, options.excluded);
    r.regions = flags_to_regions(flags);
    report.scored_points = r.matrix.total();
    report.rules.push_back(std::move(r));
  }
  return report;
}

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> read_optional(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

std::string report_to_json(const Report& report) {
  Json rules = Json::object();
  for (const auto& r : report.rules) {
    Json regions = Json::array();
    for (const auto& g : r.regions) regions.push_back({g.start, g.end});
    rules[r.rule] = {
        {"true_positives", r.matrix.true_positives},
        {"false_positives", r.matrix.false_positives},
        {"true_negatives", r.matrix.true_negatives},
        {"false_negatives", r.matrix.false_negatives},
        {"regions", std::move(regions)},
    };
  }
  Json j = {
      {"scored_range", {report.scored.begin, report.scored.end}},
      {"scored_points", report.scored_points},
      {"mse", {{"train", optional_number(report.mse_train)},
               {"validation", optional_number(report.mse_validation)}}},
      {"rules", std::move(rules)},
  };
  return j.dump(2) + "\n";
}

Report report_from_json(std::string_view text) {
  Report report;
  try {
    const Json j = Json::parse(text);
    report.scored = {j.at("scored_range").at(0).get<std::size_t>(),
                     j.at("scored_range").at(1).get<std::size_t>()};
    report.scored_points = j.at("scored_points").get<std::size_t>();
    report.mse_train = read_optional(j.at("mse").at("train"));
    report.mse_validation = read_optional(j.at("mse").at("validation"));
    for (const auto& [name, r] : j.at("rules").items()) {
      RuleReport rule;
      rule.rule = name;
      rule.matrix.true_positives = r.at("true_positives").get<std::size_t>();
      rule.matrix.false_positives = r.at("false_positives").get<std::size_t>();
      rule.matrix.true_negatives = r.at("true_negatives").get<std::size_t>();
      rule.matrix.false_negatives = r.at("false_negatives").get<std::size_t>();
      for (const auto& g : r.at("regions")) {
        rule.regions.push_back({g.at(0).get<std::size_t>(), g.at(1).get<std::size_t>()});
      }
      report.rules.push_back(std::move(rule));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed report: ") + e.what());
  }
  return report;
}

std::string format_table(const Report& report) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-16s", "Anomaly Rule");
  out << buf;
  for (const auto& r : report.rules) {
    std::snprintf(buf, sizeof buf, "%14s", r.rule.c_str());
    out << buf;
  }
  out << '\n';
  const std::pair<const char*, std::size_t ConfusionMatrix::*> cells[] = {
      {"True Negatives", &ConfusionMatrix::true_negatives},
      {"False Negatives", &ConfusionMatrix::false_negatives},
      {"True Positives", &ConfusionMatrix::true_positives},
      {"False Positives", &ConfusionMatrix::false_positives},
  };
  for (const auto& [label, member] : cells) {
    std::snprintf(buf, sizeof buf, "%-16s", label);
    out << buf;
    for (const auto& r : report.rules) {
      std::snprintf(buf, sizeof buf, "%14zu", r.matrix.*member);
      out << buf;
    }
    out << '\n';
  }
  auto mse = [](const std::optional<double>& v) {
    if (!v) return std::string("N/A");
    char b[32];
    std::snprintf(b, sizeof b, "%.6g", *v);
    return std::string(b);
  };
  out << "MSE train " << mse(report.mse_train) << ", validation " << mse(report.mse_validation)
      << " (" << report.scored_points << " scored points)\n";
  return out.str();
}

// ---------------------------------------------------------------------------

LabeledRegions read_labels_csv(std::istream& in) {
  LabeledRegions labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = detail::trim(line);
    if (view.empty()) continue;
    if (line_no == 1 && view.starts_with("start")) continue;
    const auto f = detail::split(view, ',');
    std::int64_t start = 0;
    std::int64_t end = 0;
    if (f.size() != 2 || !detail::parse_int(f[0], start) || !detail::parse_int(f[1], end)) {
      throw ParseError("expected `start_index,end_index`", line_no);
    }
    if (start < 0 || end < start) throw ParseError("invalid label span", line_no);
    if (!labels.empty() && static_cast<std::size_t>(start) <= labels.back().end) {
      throw ParseError("label spans must be sorted and non-overlapping", line_no);
    }
    labels.push_back({static_cast<std::size_t>(start), static_cast<std::size_t>(end)});
  }
  return labels;
}

LabeledRegions read_labels_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_labels_csv(in);
}

void write_labels_csv(std::ostream& out, const LabeledRegions& labels) {
  for (const auto& r : labels) out << r.start << ',' << r.end << '\n';
}

void write_labels_file(const std::string& path, const LabeledRegions& labels) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_labels_csv(out, labels);
  if (!out) throw Error("write failed: " + path);
}

LabeledRegions rebase_labels(const LabeledRegions& labels, std::size_t offset,
                             std::size_t length) {
  LabeledRegions out;
  if (length == 0) return out;
  const std::size_t last = offset + length - 1;
  for (const auto& r : labels) {
    if (r.end < offset || r.start > last) continue;
    out.push_back({std::max(r.start, offset) - offset, std::min(r.end, last) - offset});
  }
  return out;
}

}  // namespace dropwatch
