#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cli.hpp"
#include "dropwatch/config.hpp"
#include "dropwatch/detection.hpp"
#include "dropwatch/error.hpp"
#include "dropwatch/evaluation.hpp"
#include "dropwatch/features.hpp"
#include "dropwatch/model_io.hpp"
#include "dropwatch/predictors.hpp"
#include "dropwatch/series.hpp"
#include "dropwatch/svg_plot.hpp"
#include "dropwatch/synthetic.hpp"

namespace py = pybind11;
using namespace dropwatch;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<bool> to_array(const std::vector<bool>& v) {
  py::array_t<bool> out(static_cast<py::ssize_t>(v.size()));
  auto* p = out.mutable_data();
  for (std::size_t i = 0; i < v.size(); ++i) p[i] = v[i];
  return out;
}

std::vector<double> to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw py::value_error("expected a one-dimensional array");
  return {a.data(), a.data() + a.size()};
}

YearMonth month_arg(const py::object& m) {
  if (py::isinstance<YearMonth>(m)) return m.cast<YearMonth>();
  return parse_year_month(m.cast<std::string>());
}

/// Detection rows as a dict of equally long numpy columns.
py::dict rows_to_columns(const std::vector<DetectionRow>& rows) {
  const auto n = static_cast<py::ssize_t>(rows.size());
  py::array_t<std::int64_t> index(n), timestamp(n);
  py::array_t<double> prediction(n), actual(n), likelihood(n);
  for (py::ssize_t i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    index.mutable_at(i) = static_cast<std::int64_t>(r.index);
    timestamp.mutable_at(i) = r.timestamp;
    prediction.mutable_at(i) = r.prediction;
    actual.mutable_at(i) = r.actual;
    likelihood.mutable_at(i) = r.tail_likelihood;
  }
  py::dict d;
  d["index"] = index;
  d["timestamp"] = timestamp;
  d["prediction"] = prediction;
  d["actual"] = actual;
  d["acc_flag"] = to_array(acc_flags(rows));
  d["tail_likelihood"] = likelihood;
  d["tail_flag"] = to_array(tail_flags(rows));
  d["intersect_flag"] = to_array(intersect_flags(rows));
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sustained-drop detection for periodic time series";

  py::register_exception<Error>(m, "Error", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", m.attr("Error").ptr());
  py::register_exception<NumericError>(m, "NumericError", m.attr("Error").ptr());

  // -- series ---------------------------------------------------------------
  py::class_<YearMonth>(m, "YearMonth")
      .def(py::init([](const std::string& s) { return parse_year_month(s); }))
      .def_readonly("year", &YearMonth::year)
      .def_readonly("month", &YearMonth::month)
      .def("begin", [](const YearMonth& ym) { return month_begin(ym); })
      .def("end", [](const YearMonth& ym) { return month_end(ym); })
      .def("__str__", [](const YearMonth& ym) { return to_string(ym); })
      .def("__repr__", [](const YearMonth& ym) { return "YearMonth('" + to_string(ym) + "')"; })
      .def(py::self == py::self);

  py::class_<Series>(m, "Series")
      .def(py::init([](std::int64_t start, std::int64_t interval, const py::array_t<double, py::array::c_style | py::array::forcecast>& values) {
             return Series(start, interval, to_vector(values));
           }),
           py::arg("start_timestamp"), py::arg("interval_seconds"), py::arg("values"))
      .def_property_readonly("start_timestamp", &Series::start_timestamp)
      .def_property_readonly("interval_seconds", &Series::interval_seconds)
      .def_property_readonly("values", [](const Series& s) {
        return to_array(std::vector<double>(s.values().begin(), s.values().end()));
      })
      .def_property_readonly("timestamps", [](const Series& s) {
        py::array_t<std::int64_t> out(static_cast<py::ssize_t>(s.size()));
        for (std::size_t i = 0; i < s.size(); ++i) out.mutable_at(static_cast<py::ssize_t>(i)) = s.timestamp(i);
        return out;
      })
      .def_property_readonly("filled_indices", [](const Series& s) {
        return std::vector<std::size_t>(s.filled_indices().begin(), s.filled_indices().end());
      })
      .def("slice", &Series::slice, py::arg("first"), py::arg("count"))
      .def("__len__", &Series::size)
      .def("__getitem__", [](const Series& s, std::size_t i) {
        if (i >= s.size()) throw py::index_error();
        return s[i];
      })
      .def("__repr__", [](const Series& s) {
        return "Series(start_timestamp=" + std::to_string(s.start_timestamp()) + ", interval_seconds=" +
               std::to_string(s.interval_seconds()) + ", size=" + std::to_string(s.size()) + ")";
      });

  py::class_<NormalizationParams>(m, "NormalizationParams")
      .def(py::init<>())
      .def(py::init([](double lo, double hi) { return NormalizationParams{lo, hi}; }), py::arg("min"), py::arg("max"))
      .def_readwrite("min", &NormalizationParams::min)
      .def_readwrite("max", &NormalizationParams::max);

  m.def("ingest_csv_text",
        [](const std::string& text, bool header, std::optional<std::int64_t> interval) {
          return ingest_csv_text(text, CsvOptions{header, interval});
        },
        py::arg("text"), py::arg("header") = false, py::arg("interval_seconds") = py::none());
  m.def("ingest_csv_file",
        [](const std::string& path, bool header, std::optional<std::int64_t> interval) {
          return ingest_csv_file(path, CsvOptions{header, interval});
        },
        py::arg("path"), py::arg("header") = false, py::arg("interval_seconds") = py::none());
  m.def("write_csv_file", &write_csv_file, py::arg("path"), py::arg("series"));
  m.def("fit_normalization", &fit_normalization, py::arg("train"));
  m.def("normalize", &normalize, py::arg("series"), py::arg("params"));
  m.def("denormalize", &denormalize, py::arg("series"), py::arg("params"));
  m.def("select_month", [](const Series& s, const py::object& ym) { return select_month(s, month_arg(ym)); },
        py::arg("series"), py::arg("month"));
  m.def("split_by_month",
        [](const Series& s, const py::object& train, const py::object& test) {
          return split_by_month(s, month_arg(train), month_arg(test));
        },
        py::arg("series"), py::arg("train_month"), py::arg("test_month"));

  // -- features -------------------------------------------------------------
  m.def("encode_time", [](std::int64_t ts) { return to_array(encode_time(ts).flatten()); }, py::arg("timestamp"));
  m.def("design_matrix",
        [](const Series& s, bool derivative) {
          const DesignMatrix dm = build_design_matrix(s, FeatureConfig{derivative});
          const auto width = static_cast<py::ssize_t>(FeatureConfig{derivative}.width());
          py::array_t<double> out({static_cast<py::ssize_t>(dm.rows.size()), width});
          auto* p = out.mutable_data();
          for (const auto& row : dm.rows) {
            const auto flat = row.flatten();
            p = std::copy(flat.begin(), flat.end(), p);
          }
          return py::make_tuple(dm.first_index, out);
        },
        py::arg("series"), py::arg("derivative") = false,
        "Returns (first_index, rows) where row k describes sample first_index + k.");

  // -- predictors -----------------------------------------------------------
  py::enum_<ModelKind>(m, "ModelKind")
      .value("baseline", ModelKind::baseline)
      .value("fourier", ModelKind::fourier)
      .value("mlp", ModelKind::mlp);

  py::class_<Predictor>(m, "Predictor")
      .def_property_readonly("kind", &Predictor::kind)
      .def_property_readonly("warmup", &Predictor::warmup)
      .def("predict", &Predictor::predict, py::arg("series"), py::arg("index"))
      .def("predict_series", [](const Predictor& p, const Series& s) { return to_array(p.predict_series(s)); },
           py::arg("series"));

  py::class_<BaselineModel, Predictor>(m, "BaselineModel")
      .def(py::init<double>(), py::arg("threshold") = kBaselineThreshold)
      .def_property_readonly("threshold", &BaselineModel::threshold);

  py::class_<FourierModel, Predictor>(m, "FourierModel")
      .def(py::init<std::int64_t, std::vector<double>, std::vector<double>>(), py::arg("period_points"),
           py::arg("amplitudes"), py::arg("phases"))
      .def("predict_index", &FourierModel::predict_index, py::arg("t"))
      .def_property_readonly("period_points", &FourierModel::period_points)
      .def_property_readonly("harmonics", &FourierModel::harmonics)
      .def_property_readonly("amplitudes", [](const FourierModel& f) {
        return to_array(std::vector<double>(f.amplitudes().begin(), f.amplitudes().end()));
      })
      .def_property_readonly("phases", [](const FourierModel& f) {
        return to_array(std::vector<double>(f.phases().begin(), f.phases().end()));
      });

  py::class_<MlpModel, Predictor>(m, "MlpModel")
      .def_property_readonly("widths", [](const MlpModel& mm) {
        return std::vector<std::size_t>(mm.widths().begin(), mm.widths().end());
      })
      .def_property_readonly("params", [](const MlpModel& mm) {
        return to_array(std::vector<double>(mm.params().begin(), mm.params().end()));
      })
      .def_property_readonly("uses_derivative", [](const MlpModel& mm) { return mm.features().use_derivative; });

  m.def("fourier_train",
        [](const Series& train, std::int64_t period, std::size_t harmonics, double lr, std::size_t steps,
           double init_scale, std::uint64_t seed) {
          FourierFit fit = [&] {
            py::gil_scoped_release release;
            return fourier_train(train, {period, harmonics, lr, steps, init_scale, seed});
          }();
          py::dict d;
          d["train_mse"] = fit.train_mse;
          d["loss_history"] = to_array(fit.loss_history);
          d["warnings"] = fit.warnings;
          return py::make_tuple(std::move(fit.model), d);
        },
        py::arg("train"), py::arg("period_points") = 2016, py::arg("harmonics") = 448,
        py::arg("learning_rate") = 0.5, py::arg("steps") = 3000, py::arg("init_scale") = 0.1, py::arg("seed") = 0,
        "Returns (model, info) with info keys train_mse, loss_history, warnings.");

  m.def("mlp_train",
        [](const Series& train, std::size_t hidden_layers, std::size_t hidden_units, double lr, std::size_t batch,
           std::size_t steps, std::uint64_t seed, bool derivative) {
          MlpTrainConfig cfg{hidden_layers, hidden_units, lr, batch, steps, seed, FeatureConfig{derivative}};
          MlpFit fit = [&] {
            py::gil_scoped_release release;
            return mlp_train(train, cfg);
          }();
          py::dict d;
          d["train_mse"] = fit.train_mse;
          d["loss_history"] = to_array(fit.loss_history);
          return py::make_tuple(std::move(fit.model), d);
        },
        py::arg("train"), py::arg("hidden_layers") = 10, py::arg("hidden_units") = 200,
        py::arg("learning_rate") = 1e-4, py::arg("batch_size") = 200, py::arg("steps") = 1200, py::arg("seed") = 0,
        py::arg("derivative") = false, "Returns (model, info) with info keys train_mse, loss_history.");

  m.def("prediction_mse", &prediction_mse, py::arg("model"), py::arg("series"));

  m.def("save_model",
        [](const std::string& path, const Predictor& model, std::optional<NormalizationParams> norm) {
          save_model(path, model, norm);
        },
        py::arg("path"), py::arg("model"), py::arg("normalization") = py::none());
  m.def("load_model",
        [](const std::string& path) {
          ModelFile f = load_model(path);
          py::object model;
          switch (f.model->kind()) {
            case ModelKind::baseline: model = py::cast(static_cast<const BaselineModel&>(*f.model)); break;
            case ModelKind::fourier: model = py::cast(static_cast<const FourierModel&>(*f.model)); break;
            case ModelKind::mlp: model = py::cast(static_cast<const MlpModel&>(*f.model)); break;
          }
          return py::make_tuple(model, f.normalization);
        },
        py::arg("path"), "Returns (model, normalization or None).");

  // -- detection ------------------------------------------------------------
  py::enum_<LocalRule>(m, "LocalRule")
      .value("threshold", LocalRule::threshold)
      .value("variance", LocalRule::variance);

  py::class_<AccumulatorConfig>(m, "AccumulatorConfig")
      .def(py::init<>())
      .def_readwrite("local_delta", &AccumulatorConfig::local_delta)
      .def_readwrite("not_anomalous_above", &AccumulatorConfig::not_anomalous_above)
      .def_readwrite("peak_value", &AccumulatorConfig::peak_value)
      .def_readwrite("fire_threshold", &AccumulatorConfig::fire_threshold)
      .def_readwrite("variance_multiplier", &AccumulatorConfig::variance_multiplier)
      .def_readwrite("local_rule", &AccumulatorConfig::local_rule);

  py::class_<TailProbConfig>(m, "TailProbConfig")
      .def(py::init<>())
      .def_readwrite("long_window", &TailProbConfig::long_window)
      .def_readwrite("short_window", &TailProbConfig::short_window)
      .def_readwrite("likelihood_threshold", &TailProbConfig::likelihood_threshold)
      .def_readwrite("sigma_floor", &TailProbConfig::sigma_floor);

  py::class_<DetectorConfig>(m, "DetectorConfig")
      .def(py::init<>())
      .def_readwrite("accumulator", &DetectorConfig::accumulator)
      .def_readwrite("tail", &DetectorConfig::tail);

  py::class_<AccumulatorState>(m, "AccumulatorState")
      .def(py::init<>())
      .def_readonly("acc", &AccumulatorState::acc)
      .def_readonly("in_post_peak", &AccumulatorState::in_post_peak);

  m.def("raw_score", &raw_score, py::arg("prediction"), py::arg("actual"));
  m.def("accumulator_step", &accumulator_step, py::arg("state"), py::arg("config"), py::arg("prediction"),
        py::arg("actual"), py::arg("rolling_variance") = py::none());
  m.def("tail_likelihood", &tail_likelihood, py::arg("short_mean"), py::arg("long_mean"), py::arg("long_sigma"),
        py::arg("sigma_floor") = 1e-8);
  m.def("intersect", &intersect, py::arg("a"), py::arg("b"));
  m.def("flags_to_regions",
        [](const std::vector<bool>& flags) {
          std::vector<std::pair<std::size_t, std::size_t>> out;
          for (const auto& r : flags_to_regions(flags)) out.emplace_back(r.start, r.end);
          return out;
        },
        py::arg("flags"));

  m.def("detect",
        [](const Series& actual, const py::array_t<double, py::array::c_style | py::array::forcecast>& predictions,
           std::size_t first_index, const DetectorConfig& cfg, std::size_t index_offset) {
          const auto preds = to_vector(predictions);
          return rows_to_columns(detect(actual, preds, first_index, cfg, index_offset));
        },
        py::arg("actual"), py::arg("predictions"), py::arg("first_index") = 0,
        py::arg("config") = DetectorConfig{}, py::arg("index_offset") = 0,
        "Runs both rules; returns a dict of numpy columns named like the flags CSV.");

  // -- evaluation -----------------------------------------------------------
  py::class_<ConfusionMatrix>(m, "ConfusionMatrix")
      .def_readonly("true_positives", &ConfusionMatrix::true_positives)
      .def_readonly("false_positives", &ConfusionMatrix::false_positives)
      .def_readonly("true_negatives", &ConfusionMatrix::true_negatives)
      .def_readonly("false_negatives", &ConfusionMatrix::false_negatives)
      .def("total", &ConfusionMatrix::total)
      .def("__repr__", [](const ConfusionMatrix& c) {
        std::ostringstream s;
        s << "ConfusionMatrix(tp=" << c.true_positives << ", fp=" << c.false_positives
          << ", tn=" << c.true_negatives << ", fn=" << c.false_negatives << ")";
        return s.str();
      });

  auto to_regions = [](const std::vector<std::pair<std::size_t, std::size_t>>& spans) {
    LabeledRegions labels;
    for (const auto& [a, b] : spans) labels.push_back({a, b});
    return labels;
  };

  m.def("confusion",
        [to_regions](const std::vector<bool>& flags, const std::vector<std::pair<std::size_t, std::size_t>>& labels,
                     std::optional<std::pair<std::size_t, std::size_t>> scored, const std::vector<std::size_t>& excluded) {
          const ScoredRange range = scored ? ScoredRange{scored->first, scored->second} : ScoredRange{0, flags.size()};
          return confusion(flags, to_regions(labels), range, excluded);
        },
        py::arg("flags"), py::arg("labels"), py::arg("scored_range") = py::none(),
        py::arg("excluded") = std::vector<std::size_t>{});

  m.def("correlation_matrix",
        [](const std::vector<std::vector<double>>& streams) { return correlation_matrix(streams); },
        py::arg("streams"));

  m.def("summarize",
        [to_regions](const py::dict& columns, const std::vector<std::pair<std::size_t, std::size_t>>& labels,
                     std::size_t skip_leading, const std::vector<std::size_t>& excluded) {
          const auto acc = columns["acc_flag"].cast<std::vector<bool>>();
          const auto tail = columns["tail_flag"].cast<std::vector<bool>>();
          const auto both = columns["intersect_flag"].cast<std::vector<bool>>();
          if (tail.size() != acc.size() || both.size() != acc.size()) throw Error("flag columns differ in length");
          std::vector<DetectionRow> rows(acc.size());
          for (std::size_t i = 0; i < rows.size(); ++i) {
            rows[i].index = i;
            rows[i].acc_flag = acc[i];
            rows[i].tail_flag = tail[i];
            rows[i].intersect_flag = both[i];
          }
          SummaryOptions opt;
          opt.skip_leading = skip_leading;
          opt.excluded = excluded;
          return report_to_json(summarize(rows, to_regions(labels), opt));
        },
        py::arg("columns"), py::arg("labels"), py::arg("skip_leading") = 2016,
        py::arg("excluded") = std::vector<std::size_t>{},
        "Scores the three rules; labels are row positions. Returns the JSON report text.");

  // -- synthetic ------------------------------------------------------------
  m.def("gen",
        [](const std::string& kind, std::size_t period, std::size_t length, double noise, std::uint64_t seed,
           std::int64_t start, std::int64_t interval) {
          return gen({parse_synthetic_kind(kind), period, length, noise, seed, start, interval});
        },
        py::arg("kind") = "sine", py::arg("period_points") = 288, py::arg("length") = 8640,
        py::arg("noise_stddev") = 0.0, py::arg("seed") = 0, py::arg("start_timestamp") = kDefaultSyntheticStart,
        py::arg("interval_seconds") = kDefaultIntervalSeconds);

  auto spans_of = [](const LabeledRegions& labels) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& r : labels) out.emplace_back(r.start, r.end);
    return out;
  };
  m.def("inject",
        [spans_of](const Series& s, std::size_t start, std::size_t length, double level, double noise,
                   std::uint64_t seed) {
          auto [out, labels] = inject(s, {start, length, level, noise, seed});
          return py::make_tuple(std::move(out), spans_of(labels));
        },
        py::arg("series"), py::arg("start"), py::arg("length"), py::arg("level"), py::arg("noise_stddev") = 0.0,
        py::arg("seed") = 0);
  m.def("missing_peak",
        [spans_of](const Series& s, std::size_t day, double quiet, double noise, std::uint64_t seed) {
          auto [out, labels] = missing_peak(s, day, quiet, noise, seed);
          return py::make_tuple(std::move(out), spans_of(labels));
        },
        py::arg("series"), py::arg("day_index"), py::arg("quiet_level"), py::arg("noise_stddev") = 0.0,
        py::arg("seed") = 0);

  // -- plotting and the command line ---------------------------------------
  m.def("render_svg_file",
        [](const std::string& flags_path, const std::string& rule, const std::string& title, int width, int height) {
          const auto rows = read_flags_file(flags_path);
          return render_svg(rows, {width, height, parse_plot_rule(rule), title});
        },
        py::arg("flags_path"), py::arg("rule") = "intersection", py::arg("title") = "", py::arg("width") = 1200,
        py::arg("height") = 400, "Renders a flags CSV file to SVG text.");

  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          std::ostringstream out, err;
          int code = 0;
          {
            py::gil_scoped_release release;
            code = cli::run(args, out, err);
          }
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs one command line in-process; returns (exit_code, stdout, stderr).");

  m.attr("config_keys") = py::cast(RunConfig::keys());
}
