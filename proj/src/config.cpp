#include "dropwatch/config.hpp"

#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

#include "dropwatch/error.hpp"
#include "text_util.hpp"

namespace dropwatch {

namespace {

struct Field {
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

// Messages omit the key; RunConfig::set prefixes it.
double to_double(std::string_view v) {
  double out = 0.0;
  if (!detail::parse_double(v, out)) throw Error("expects a number, got '" + std::string(v) + "'");
  return out;
}

std::uint64_t to_count(std::string_view v) {
  std::int64_t out = 0;
  if (!detail::parse_int(v, out) || out < 0) {
    throw Error("expects a non-negative integer, got '" + std::string(v) + "'");
  }
  return static_cast<std::uint64_t>(out);
}

bool to_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error("expects true/false, got '" + std::string(v) + "'");
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

template <typename T>
Field real(T RunConfig::*outer, double T::*inner) {
  return {[=](RunConfig& c, std::string_view v) { (c.*outer).*inner = to_double(v); },
          [=](const RunConfig& c) { return detail::format_double((c.*outer).*inner); }};
}

template <typename T, typename U>
Field count(T RunConfig::*outer, U T::*inner) {
  return {[=](RunConfig& c, std::string_view v) {
            (c.*outer).*inner = static_cast<U>(to_count(v));
          },
          [=](const RunConfig& c) { return std::to_string((c.*outer).*inner); }};
}

const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table = [] {
    std::map<std::string, Field, std::less<>> t;
    t["model"] = {[](RunConfig& c, std::string_view v) { c.model = parse_model_kind(v); },
                  [](const RunConfig& c) { return to_string(c.model); }};
    t["seed"] = {[](RunConfig& c, std::string_view v) { c.seed = to_count(v); },
                 [](const RunConfig& c) { return std::to_string(c.seed); }};
    t["train_month"] = {
        [](RunConfig& c, std::string_view v) { c.train_month = parse_year_month(v); },
        [](const RunConfig& c) { return c.train_month ? to_string(*c.train_month) : ""; }};
    t["test_month"] = {
        [](RunConfig& c, std::string_view v) { c.test_month = parse_year_month(v); },
        [](const RunConfig& c) { return c.test_month ? to_string(*c.test_month) : ""; }};
    t["csv.header"] = {[](RunConfig& c, std::string_view v) { c.csv_header = to_bool(v); },
                       [](const RunConfig& c) { return from_bool(c.csv_header); }};

    t["baseline.threshold"] = {
        [](RunConfig& c, std::string_view v) { c.baseline_threshold = to_double(v); },
        [](const RunConfig& c) { return detail::format_double(c.baseline_threshold); }};
    t["baseline.local_delta"] = {
        [](RunConfig& c, std::string_view v) {
          c.baseline_local_delta = to_double(v);
        },
        [](const RunConfig& c) { return detail::format_double(c.baseline_local_delta); }};

    t["fourier.period"] = count(&RunConfig::fourier, &FourierTrainConfig::period_points);
    t["fourier.harmonics"] = count(&RunConfig::fourier, &FourierTrainConfig::harmonics);
    t["fourier.learning_rate"] = real(&RunConfig::fourier, &FourierTrainConfig::learning_rate);
    t["fourier.steps"] = count(&RunConfig::fourier, &FourierTrainConfig::steps);
    t["fourier.init_scale"] = real(&RunConfig::fourier, &FourierTrainConfig::init_scale);

    t["mlp.hidden_layers"] = count(&RunConfig::mlp, &MlpTrainConfig::hidden_layers);
    t["mlp.hidden_units"] = count(&RunConfig::mlp, &MlpTrainConfig::hidden_units);
    t["mlp.learning_rate"] = real(&RunConfig::mlp, &MlpTrainConfig::learning_rate);
    t["mlp.batch_size"] = count(&RunConfig::mlp, &MlpTrainConfig::batch_size);
    t["mlp.steps"] = count(&RunConfig::mlp, &MlpTrainConfig::steps);
    t["features.derivative"] = {
        [](RunConfig& c, std::string_view v) {
          c.mlp.features.use_derivative = to_bool(v);
        },
        [](const RunConfig& c) { return from_bool(c.mlp.features.use_derivative); }};

    t["accumulator.local_rule"] = {
        [](RunConfig& c, std::string_view v) { c.detector.accumulator.local_rule = parse_local_rule(v); },
        [](const RunConfig& c) { return to_string(c.detector.accumulator.local_rule); }};
    auto acc = [](double AccumulatorConfig::*m) -> Field {
      return {[=](RunConfig& c, std::string_view v) { c.detector.accumulator.*m = to_double(v); },
              [=](const RunConfig& c) { return detail::format_double(c.detector.accumulator.*m); }};
    };
    t["accumulator.local_delta"] = acc(&AccumulatorConfig::local_delta);
    t["accumulator.not_anomalous_above"] = acc(&AccumulatorConfig::not_anomalous_above);
    t["accumulator.peak_value"] = acc(&AccumulatorConfig::peak_value);
    t["accumulator.fire_threshold"] = acc(&AccumulatorConfig::fire_threshold);
    t["accumulator.variance_multiplier"] = acc(&AccumulatorConfig::variance_multiplier);

    auto tail_count = [](std::size_t TailProbConfig::*m) -> Field {
      return {[=](RunConfig& c, std::string_view v) { c.detector.tail.*m = to_count(v); },
              [=](const RunConfig& c) { return std::to_string(c.detector.tail.*m); }};
    };
    auto tail_real = [](double TailProbConfig::*m) -> Field {
      return {[=](RunConfig& c, std::string_view v) { c.detector.tail.*m = to_double(v); },
              [=](const RunConfig& c) { return detail::format_double(c.detector.tail.*m); }};
    };
    t["tail.long_window"] = tail_count(&TailProbConfig::long_window);
    t["tail.short_window"] = tail_count(&TailProbConfig::short_window);
    t["tail.likelihood_threshold"] = tail_real(&TailProbConfig::likelihood_threshold);
    t["tail.sigma_floor"] = tail_real(&TailProbConfig::sigma_floor);
    return t;
  }();
  return table;
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [k, _] : fields()) out.push_back(k);
    return out;
  }();
  return names;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw Error("unknown config key '" + std::string(key) + "'");
  try {
    it->second.set(*this, detail::trim(value));
  } catch (const Error& e) {
    throw Error("config key '" + std::string(key) + "': " + e.what());
  }
}

std::string RunConfig::get(std::string_view key) const {
  const auto it = fields().find(key);
  if (it == fields().end()) throw Error("unknown config key '" + std::string(key) + "'");
  return it->second.get(*this);
}

RunConfig RunConfig::parse(std::istream& in) {
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = detail::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected `key = value`", line_no);
    try {
      cfg.set(detail::trim(view.substr(0, eq)), view.substr(eq + 1));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return cfg;
}

RunConfig RunConfig::parse_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse(in);
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path);
  return parse(in);
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  for (const auto& [key, field] : fields()) {
    const std::string value = field.get(*this);
    if (!value.empty()) out << key << " = " << value << '\n';
  }
  return out.str();
}

DetectorConfig RunConfig::detector_for(ModelKind kind) const {
  DetectorConfig d = detector;
  if (kind == ModelKind::baseline) d.accumulator.local_delta = baseline_local_delta;
  return d;
}

FourierTrainConfig RunConfig::fourier_train_config() const {
  FourierTrainConfig c = fourier;
  c.seed = derive_seed(seed, "fourier");
  return c;
}

MlpTrainConfig RunConfig::mlp_train_config() const {
  MlpTrainConfig c = mlp;
  c.seed = derive_seed(seed, "mlp");
  return c;
}

void RunConfig::validate() const {
  detector.accumulator.validate();
  detector_for(ModelKind::baseline).accumulator.validate();
  detector.tail.validate();
  if (fourier.period_points < 1 || fourier.steps == 0 || !(fourier.learning_rate > 0)) {
    throw Error("fourier settings out of range");
  }
  if (mlp.hidden_units == 0 || mlp.batch_size == 0 || mlp.steps == 0 || !(mlp.learning_rate > 0)) {
    throw Error("mlp settings out of range");
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view component) {
  // FNV-1a over the component name, mixed with splitmix64.
  std::uint64_t h = 1469598103934665603ULL;
  for (char ch : component) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ULL;
  }
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL + h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace dropwatch
