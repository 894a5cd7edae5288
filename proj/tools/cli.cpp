#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "dropwatch/config.hpp"
#include "dropwatch/detection.hpp"
#include "dropwatch/error.hpp"
#include "dropwatch/evaluation.hpp"
#include "dropwatch/model_io.hpp"
#include "dropwatch/predictors.hpp"
#include "dropwatch/series.hpp"
#include "dropwatch/svg_plot.hpp"
#include "dropwatch/synthetic.hpp"

namespace dropwatch::cli {

namespace {

namespace fs = std::filesystem;

/// `foo/s.csv` + "labels" -> `foo/s.labels.csv`
std::string sidecar_path(const std::string& path, const std::string& tag) {
  fs::path p(path);
  const std::string ext = p.extension().string();
  p.replace_extension();
  return p.string() + "." + tag + (ext.empty() ? ".csv" : ext);
}

std::vector<std::string> split_colon(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  return parts;
}

double parse_number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Error("bad " + what + " '" + text + "'");
  }
}

std::size_t parse_index(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size() || v < 0) throw std::invalid_argument(text);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw Error("bad " + what + " '" + text + "'");
  }
}

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;  // key=value
  std::string output;
};

void add_common(CLI::App* cmd, CommonOptions& common, bool output_required = true) {
  cmd->add_option("--config", common.config_path, "Run configuration (key = value lines)");
  cmd->add_option("--seed", common.seed, "Seed overriding the configuration");
  cmd->add_option("--set", common.overrides, "Override a configuration key (key=value)");
  auto* o = cmd->add_option("-o,--output", common.output, "Output path");
  if (output_required) o->required();
}

RunConfig load_config(const CommonOptions& common) {
  RunConfig cfg = common.config_path.empty() ? RunConfig{} : RunConfig::load(common.config_path);
  for (const auto& kv : common.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (common.seed) cfg.seed = *common.seed;
  cfg.validate();
  return cfg;
}

std::size_t offset_in(const Series& full, const Series& part) {
  return static_cast<std::size_t>((part.start_timestamp() - full.start_timestamp()) /
                                  full.interval_seconds());
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  CommonOptions common;
  std::string kind = "sine";
  std::size_t period = 288;
  std::size_t length = 8640;
  double noise = 0.0;
  std::int64_t start = kDefaultSyntheticStart;
  std::int64_t interval = kDefaultIntervalSeconds;
  std::vector<std::string> injections;     // start:end:level (end inclusive)
  double inject_noise = 0.0;
  std::vector<std::string> missing_peaks;  // day:quiet_level
  double peak_noise = 0.0;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SyntheticSpec spec;
  spec.kind = parse_synthetic_kind(a.kind);
  spec.period_points = a.period;
  spec.length = a.length;
  spec.noise_stddev = a.noise;
  spec.seed = a.common.seed.value_or(0);
  spec.start_timestamp = a.start;
  spec.interval_seconds = a.interval;
  Series s = gen(spec);

  LabeledRegions labels;
  std::uint64_t component = 0;
  for (const auto& text : a.injections) {
    const auto parts = split_colon(text);
    if (parts.size() != 3) throw Error("--inject expects start:end:level, got '" + text + "'");
    const std::size_t start = parse_index(parts[0], "injection start");
    const std::size_t end = parse_index(parts[1], "injection end");
    if (end < start) throw Error("--inject end precedes start in '" + text + "'");
    AnomalySpec anomaly{start, end - start + 1, parse_number(parts[2], "injection level"),
                        a.inject_noise, derive_seed(spec.seed, "inject" + std::to_string(component++))};
    auto [modified, spans] = inject(s, anomaly);
    s = std::move(modified);
    labels.insert(labels.end(), spans.begin(), spans.end());
  }
  for (const auto& text : a.missing_peaks) {
    const auto parts = split_colon(text);
    if (parts.size() != 2) throw Error("--missing-peak expects day:level, got '" + text + "'");
    auto [modified, spans] =
        missing_peak(s, parse_index(parts[0], "day"), parse_number(parts[1], "quiet level"),
                     a.peak_noise, derive_seed(spec.seed, "peak" + std::to_string(component++)));
    s = std::move(modified);
    labels.insert(labels.end(), spans.begin(), spans.end());
  }

  write_csv_file(a.common.output, s);
  out << "wrote " << s.size() << " points to " << a.common.output << '\n';
  if (!a.injections.empty() || !a.missing_peaks.empty()) {
    std::sort(labels.begin(), labels.end(),
              [](const Region& x, const Region& y) { return x.start < y.start; });
    validate_labels(labels, s.size());
    const std::string path = sidecar_path(a.common.output, "labels");
    write_labels_file(path, labels);
    out << "wrote " << labels.size() << " label spans to " << path << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  CommonOptions common;
  std::string data;
  std::string model;
  std::string train_month;
  std::string test_month;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_config(a.common);
  if (!a.model.empty()) cfg.model = parse_model_kind(a.model);
  if (!a.train_month.empty()) cfg.train_month = parse_year_month(a.train_month);
  if (!a.test_month.empty()) cfg.test_month = parse_year_month(a.test_month);
  if (!cfg.train_month) throw Error("no training month: set train_month or pass --train-month");

  const Series data = ingest_csv_file(a.data, CsvOptions{cfg.csv_header});
  const Series train_raw = select_month(data, *cfg.train_month);
  const NormalizationParams norm = fit_normalization(train_raw);
  const Series train = normalize(train_raw, norm);

  std::unique_ptr<Predictor> model;
  std::optional<double> train_mse;
  switch (cfg.model) {
    case ModelKind::baseline:
      model = std::make_unique<BaselineModel>(cfg.baseline_threshold);
      break;
    case ModelKind::fourier: {
      FourierFit fit = fourier_train(train, cfg.fourier_train_config());
      for (const auto& w : fit.warnings) err << "warning: " << w << '\n';
      train_mse = fit.train_mse;
      model = std::make_unique<FourierModel>(std::move(fit.model));
      break;
    }
    case ModelKind::mlp: {
      MlpFit fit = mlp_train(train, cfg.mlp_train_config());
      train_mse = fit.train_mse;
      model = std::make_unique<MlpModel>(std::move(fit.model));
      break;
    }
  }
  save_model(a.common.output, *model, norm);

  out << "model " << to_string(cfg.model) << " trained on " << to_string(*cfg.train_month) << " ("
      << train.size() << " points)\n";
  out << "train_mse " << (train_mse ? std::to_string(*train_mse) : std::string("N/A")) << '\n';
  if (cfg.test_month) {
    const Series test = normalize(select_month(data, *cfg.test_month), norm);
    out << "validation_mse " << prediction_mse(*model, test) << '\n';
  }
  out << "saved " << a.common.output << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct DetectArgs {
  CommonOptions common;
  std::string model;
  std::string data;
  std::string test_month;
};

int cmd_detect(const DetectArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_config(a.common);
  if (!a.test_month.empty()) cfg.test_month = parse_year_month(a.test_month);
  if (!cfg.test_month) throw Error("no test month: set test_month or pass --test-month");

  const ModelFile file = load_model(a.model);
  if (!file.normalization) throw Error("model file " + a.model + " has no normalization parameters");
  const Predictor& model = *file.model;

  const Series data = ingest_csv_file(a.data, CsvOptions{cfg.csv_header});
  const Series test_raw = select_month(data, *cfg.test_month);
  const Series test = normalize(test_raw, *file.normalization);
  const std::size_t offset = offset_in(data, test);

  const DetectorConfig det = cfg.detector_for(model.kind());
  if (test.size() <= model.warmup()) throw Error("test month too short for the model");
  if (test.size() - model.warmup() <= det.tail.long_window) {
    err << "warning: test month has " << test.size() << " points; the tail rule needs more than "
        << det.tail.long_window << " and will not flag anything\n";
  }

  const std::vector<double> predictions = model.predict_series(test);
  const auto rows = detect(test, predictions, model.warmup(), det, offset);
  write_flags_file(a.common.output, rows);

  std::vector<std::size_t> gaps;
  for (std::size_t i : test.filled_indices()) {
    if (i >= model.warmup()) gaps.push_back(offset + i);
  }
  if (!gaps.empty()) {
    const std::string path = sidecar_path(a.common.output, "gaps");
    std::ofstream g(path);
    if (!g) throw Error("cannot write " + path);
    for (std::size_t i : gaps) g << i << '\n';
    err << "note: " << gaps.size() << " interpolated points listed in " << path << '\n';
  }

  std::size_t counts[3] = {0, 0, 0};
  for (const auto& r : rows) {
    counts[0] += r.acc_flag;
    counts[1] += r.tail_flag;
    counts[2] += r.intersect_flag;
  }
  out << "rows " << rows.size() << ", flagged accumulator " << counts[0] << ", tail " << counts[1]
      << ", intersection " << counts[2] << '\n';
  out << "validation_mse " << prediction_mse(model, test) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  CommonOptions common;
  std::string flags;
  std::string labels;
  std::string gaps;
  std::optional<std::size_t> skip;
  std::optional<double> train_mse;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const RunConfig cfg = load_config(a.common);
  const auto rows = read_flags_file(a.flags);
  if (rows.empty()) throw Error("flags file " + a.flags + " has no rows");
  const std::size_t first = rows.front().index;
  const std::size_t last = rows.back().index;

  LabeledRegions labels;
  if (!a.labels.empty()) {
    const LabeledRegions absolute = read_labels_file(a.labels);
    for (const auto& r : absolute) {
      if (r.start > last) {
        throw Error("label span (" + std::to_string(r.start) + "," + std::to_string(r.end) +
                    ") lies beyond the last flagged index " + std::to_string(last) +
                    "; are the flags and labels files from the same series?");
      }
    }
    labels = rebase_labels(absolute, first, rows.size());
  }

  SummaryOptions opts;
  opts.skip_leading = a.skip.value_or(cfg.detector.tail.long_window);
  opts.mse_train = a.train_mse;
  double se = 0.0;
  for (const auto& r : rows) se += (r.prediction - r.actual) * (r.prediction - r.actual);
  opts.mse_validation = se / static_cast<double>(rows.size());

  std::string gaps_path = a.gaps;
  if (gaps_path.empty() && fs::exists(sidecar_path(a.flags, "gaps"))) {
    gaps_path = sidecar_path(a.flags, "gaps");
  }
  if (!gaps_path.empty()) {
    std::ifstream g(gaps_path);
    if (!g) throw Error("cannot open " + gaps_path);
    std::string line;
    while (std::getline(g, line)) {
      if (line.empty()) continue;
      const std::size_t idx = parse_index(line, "gap index");
      if (idx >= first && idx <= last) opts.excluded.push_back(idx - first);
    }
  }

  const Report report = summarize(rows, labels, opts);
  if (!a.common.output.empty()) {
    std::ofstream f(a.common.output);
    if (!f) throw Error("cannot write " + a.common.output);
    f << report_to_json(report);
  }
  out << format_table(report);
  return 0;
}

// ---------------------------------------------------------------------------

struct PlotArgs {
  CommonOptions common;
  std::string flags;
  std::string rule = "intersection";
  std::string title;
  int width = 1200;
  int height = 400;
};

int cmd_plot(const PlotArgs& a, std::ostream& out) {
  const auto rows = read_flags_file(a.flags);
  PlotOptions opts;
  opts.shade = parse_plot_rule(a.rule);
  opts.title = a.title;
  opts.width = a.width;
  opts.height = a.height;
  const std::string svg = render_svg(rows, opts);
  std::ofstream f(a.common.output, std::ios::binary);
  if (!f) throw Error("cannot write " + a.common.output);
  f << svg;
  if (!f) throw Error("write failed: " + a.common.output);
  out << "wrote " << a.common.output << '\n';
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Detect sustained drops in periodic time series", "dropwatch"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic series (and labels)");
  add_common(s, synth.common);
  s->add_option("--kind", synth.kind, "sine | stepwise_sine")
      ->check(CLI::IsMember({"sine", "stepwise_sine", "stepwise"}));
  s->add_option("--period", synth.period, "Period in samples");
  s->add_option("--length", synth.length, "Number of samples");
  s->add_option("--noise", synth.noise, "Gaussian noise standard deviation");
  s->add_option("--start", synth.start, "Unix timestamp of the first sample");
  s->add_option("--interval", synth.interval, "Seconds between samples");
  s->add_option("--inject", synth.injections, "Anomaly start:end:level (end inclusive)");
  s->add_option("--inject-noise", synth.inject_noise, "Noise around injected levels");
  s->add_option("--missing-peak", synth.missing_peaks, "Flatten a day's peak: day:quiet_level");
  s->add_option("--peak-noise", synth.peak_noise, "Noise around the flattened level");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a model on the training month");
  add_common(t, train.common);
  t->add_option("--data", train.data, "Input CSV")->required();
  t->add_option("--model", train.model, "baseline | fourier | mlp");
  t->add_option("--train-month", train.train_month, "YYYY-MM");
  t->add_option("--test-month", train.test_month, "YYYY-MM, reports validation MSE");

  DetectArgs det;
  auto* d = app.add_subcommand("detect", "Run the detection rules over the test month");
  add_common(d, det.common);
  d->add_option("--model", det.model, "Model file")->required();
  d->add_option("--data", det.data, "Input CSV")->required();
  d->add_option("--test-month", det.test_month, "YYYY-MM");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a flags file against labels");
  add_common(e, ev.common, false);
  e->add_option("--flags", ev.flags, "Flags CSV")->required();
  e->add_option("--labels", ev.labels, "Labels CSV (start_index,end_index)");
  e->add_option("--gaps", ev.gaps, "Interpolated indices to exclude");
  e->add_option("--skip", ev.skip, "Leading rows excluded from scoring (default tail.long_window)");
  e->add_option("--train-mse", ev.train_mse, "Training MSE to include in the report");

  PlotArgs plot;
  auto* p = app.add_subcommand("plot", "Render a flags file as SVG");
  add_common(p, plot.common);
  p->add_option("--flags", plot.flags, "Flags CSV")->required();
  p->add_option("--rule", plot.rule, "Shaded rule: accumulator | tail | intersection");
  p->add_option("--title", plot.title, "Chart title");
  p->add_option("--width", plot.width, "Width in pixels");
  p->add_option("--height", plot.height, "Height in pixels");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*s) return cmd_synth(synth, out);
    if (*t) return cmd_train(train, out, err);
    if (*d) return cmd_detect(det, out, err);
    if (*e) return cmd_eval(ev, out);
    if (*p) return cmd_plot(plot, out);
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace dropwatch::cli
