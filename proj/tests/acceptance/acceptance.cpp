// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dropwatch/detection.hpp"
#include "dropwatch/evaluation.hpp"
#include "dropwatch/optim.hpp"
#include "dropwatch/predictors.hpp"
#include "dropwatch/series.hpp"
#include "dropwatch/synthetic.hpp"

using namespace dropwatch;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr std::size_t kApril = 8640;
constexpr std::size_t kMay = 8928;
const YearMonth kTrainMonth{2017, 4};
const YearMonth kTestMonth{2017, 5};

/// Normalized train/test months of a two-month series plus labels in the
/// test month's frame.
struct Scenario {
  std::string name;
  Series train;
  Series test;
  LabeledRegions labels;
};

Scenario make_scenario(std::string name, const Series& full, const LabeledRegions& global_labels) {
  const auto [train_raw, test_raw] = split_by_month(full, kTrainMonth, kTestMonth);
  const NormalizationParams norm = fit_normalization(train_raw);
  return {std::move(name), normalize(train_raw, norm), normalize(test_raw, norm),
          rebase_labels(global_labels, kApril, test_raw.size())};
}

Series two_months(SyntheticKind kind, double noise, std::uint64_t seed) {
  return gen({.kind = kind, .period_points = 288, .length = kApril + kMay, .noise_stddev = noise, .seed = seed});
}

// Day 40 is 2017-05-11, past the tail rule's first week in May.
constexpr std::size_t kPeakDay = 40;

Scenario missing_peak_scenario() {
  const Series clean = two_months(SyntheticKind::sine, 0.01, 11);
  const auto [damaged, labels] = missing_peak(clean, kPeakDay, 0.15, 0.01, 12);
  return make_scenario("sine/missing-peak", damaged, labels);
}

std::vector<DetectionRow> run_detector(const Predictor& model, const Series& test, const DetectorConfig& cfg) {
  return detect(test, model.predict_series(test), model.warmup(), cfg);
}

/// Labels shifted into the row frame of a run that skipped `warmup` samples.
LabeledRegions row_labels(const LabeledRegions& labels, std::size_t warmup, std::size_t rows) {
  return rebase_labels(labels, warmup, rows);
}

ScoredRange scored_range(std::size_t rows, const DetectorConfig& cfg) {
  return {std::min(cfg.tail.long_window, rows), rows};
}

std::size_t count(const std::vector<bool>& f) { return static_cast<std::size_t>(std::count(f.begin(), f.end(), true)); }

DetectorConfig config_for(ModelKind kind, LocalRule rule = LocalRule::threshold) {
  DetectorConfig cfg;
  cfg.accumulator.local_rule = rule;
  if (kind == ModelKind::baseline) cfg.accumulator.local_delta = 0.05;
  return cfg;
}

// ---------------------------------------------------------------------------

Outcome check_a1() {
  const auto t0 = Clock::now();
  const Scenario sc = make_scenario("sine", two_months(SyntheticKind::sine, 0.0, 0), {});
  FourierTrainConfig cfg;
  cfg.period_points = 288;
  cfg.harmonics = 2;
  cfg.learning_rate = 0.5;
  cfg.steps = 3000;
  const FourierFit fit = fourier_train(sc.train, cfg);
  const double held_out = prediction_mse(fit.model, sc.test);
  const double secs = seconds_since(t0);
  return {fit.train_mse < 1e-3 && held_out < 2e-3 && secs < 30.0,
          fmt("train MSE %.3g (< 1e-3), held-out MSE %.3g (< 2e-3), %.1f s (< 30 s)", fit.train_mse, held_out, secs)};
}

struct MlpRun {
  Outcome outcome;
  std::optional<MlpModel> model;
};

MlpRun check_a2() {
  const auto t0 = Clock::now();
  const Scenario sc = make_scenario("stepwise", two_months(SyntheticKind::stepwise_sine, 0.02, 21), {});
  MlpTrainConfig cfg;  // 10 x 200, ReLU6, Adam 1e-4, batch 200, 1200 steps
  cfg.seed = 5;
  MlpFit fit = mlp_train(sc.train, cfg);
  const double held_out = prediction_mse(fit.model, sc.test);
  const double secs = seconds_since(t0);
  return {{held_out < 0.01 && secs < 300.0,
           fmt("train MSE %.3g, held-out MSE %.3g (< 0.01), %.1f s (< 300 s)", fit.train_mse, held_out, secs)},
          std::move(fit.model)};
}

Outcome check_a3(const FourierModel& model, const Scenario& sc) {
  const DetectorConfig cfg = config_for(ModelKind::fourier);
  const auto rows = run_detector(model, sc.test, cfg);
  const auto flags = intersect_flags(rows);
  const auto labels = row_labels(sc.labels, model.warmup(), rows.size());

  bool overlap = false;
  std::size_t outside = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (!flags[i]) continue;
    bool inside = false;
    bool near = false;
    for (const auto& r : labels) {
      inside |= i >= r.start && i <= r.end;
      near |= i + 12 >= r.start && i <= r.end + 12;
    }
    overlap |= inside;
    outside += !near;
  }
  return {overlap && outside <= 5,
          fmt("intersection flags %zu, overlaps label: %s, flagged outside label +/-12: %zu (<= 5)", count(flags),
              overlap ? "yes" : "no", outside)};
}

/// Trained models shared by the detection criteria.
struct Models {
  FourierModel weekly;
  FourierModel daily;
  std::optional<MlpModel> mlp;
};

struct RunCase {
  std::string name;
  std::vector<DetectionRow> rows;
  LabeledRegions labels;  // row frame
};

std::vector<RunCase> run_matrix(const Models& models, const Scenario& peak) {
  std::vector<Scenario> sine_scenarios;
  sine_scenarios.push_back(make_scenario("sine/clean", two_months(SyntheticKind::sine, 0.02, 31), {}));
  sine_scenarios.push_back(peak);
  {
    const Series s = two_months(SyntheticKind::sine, 0.02, 32);
    const auto [hit, labels] = inject(s, {.start = kApril + 3000, .length = 150, .level = 0.0, .noise_stddev = 0.01, .seed = 33});
    sine_scenarios.push_back(make_scenario("sine/outage", hit, labels));
  }
  std::vector<Scenario> step_scenarios;
  step_scenarios.push_back(make_scenario("stepwise/clean", two_months(SyntheticKind::stepwise_sine, 0.02, 41), {}));
  {
    const Series s = two_months(SyntheticKind::stepwise_sine, 0.02, 42);
    const auto [hit, labels] = inject(s, {.start = kApril + 4000, .length = 200, .level = 0.05, .noise_stddev = 0.01, .seed = 43});
    step_scenarios.push_back(make_scenario("stepwise/outage", hit, labels));
  }

  const BaselineModel baseline;
  std::vector<std::pair<std::string, const Predictor*>> sine_models{
      {"baseline", &baseline}, {"fourier-weekly", &models.weekly}, {"fourier-daily", &models.daily}};
  std::vector<std::pair<std::string, const Predictor*>> step_models{{"baseline", &baseline}};
  if (models.mlp) step_models.push_back({"mlp", &*models.mlp});

  std::vector<RunCase> runs;
  auto add = [&](const std::vector<Scenario>& scs, const auto& ms) {
    for (const auto& sc : scs) {
      for (const auto& [mname, m] : ms) {
        for (LocalRule rule : {LocalRule::threshold, LocalRule::variance}) {
          auto rows = run_detector(*m, sc.test, config_for(m->kind(), rule));
          runs.push_back({sc.name + " " + mname + " " + to_string(rule), std::move(rows),
                          row_labels(sc.labels, m->warmup(), sc.test.size() - m->warmup())});
        }
      }
    }
  };
  add(sine_scenarios, sine_models);
  add(step_scenarios, step_models);
  return runs;
}

Outcome check_a4(const std::vector<RunCase>& runs) {
  std::size_t bad = 0;
  std::string first_bad;
  for (const auto& run : runs) {
    const auto acc = acc_flags(run.rows);
    const auto tail = tail_flags(run.rows);
    const auto both = intersect_flags(run.rows);
    bool ok = true;
    for (std::size_t i = 0; i < both.size(); ++i) ok &= !both[i] || (acc[i] && tail[i]);
    const ScoredRange range = scored_range(run.rows.size(), {});
    const auto fa = confusion(acc, run.labels, range).false_positives;
    const auto ft = confusion(tail, run.labels, range).false_positives;
    const auto fi = confusion(both, run.labels, range).false_positives;
    ok &= fi <= std::min(fa, ft);
    if (!ok && bad++ == 0) first_bad = run.name;
  }
  return {bad == 0, bad == 0 ? fmt("%zu runs: subset and FP ordering hold", runs.size())
                             : fmt("%zu of %zu runs violate, first: %s", bad, runs.size(), first_bad.c_str())};
}

Outcome check_a5(const std::vector<RunCase>& runs) {
  std::size_t inputs = 0;
  std::size_t violations = 0;
  auto scan = [&](const std::vector<bool>& tail) {
    ++inputs;
    for (std::size_t i = 0; i < std::min<std::size_t>(2016, tail.size()); ++i) violations += tail[i];
  };
  for (const auto& run : runs) scan(tail_flags(run.rows));

  // Adversarial fuzz: large shortfalls from the very first sample.
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> actual(5000), pred(5000);
    for (std::size_t i = 0; i < actual.size(); ++i) {
      pred[i] = u(rng);
      actual[i] = (i < 50 * static_cast<std::size_t>(trial) || u(rng) < 0.5) ? 0.0 : u(rng);
      if (trial % 3 == 0) actual[i] = i > 2000 - 10 ? 0.0 : pred[i];
    }
    scan(tail_flags(detect(Series(0, 300, actual), pred, 0, {})));
  }
  return {violations == 0, fmt("%zu inputs, flags among the first 2016 points: %zu", inputs, violations)};
}

Outcome check_a6() {
  std::size_t flags = 0;
  std::size_t inputs = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.5, 1.5);
    std::vector<double> v(10000);
    for (double& x : v) x = u(rng);
    for (LocalRule rule : {LocalRule::threshold, LocalRule::variance}) {
      DetectorConfig cfg;
      cfg.accumulator.local_rule = rule;
      for (const auto& r : detect(Series(0, 300, v), v, 0, cfg)) flags += r.acc_flag + r.tail_flag;
      ++inputs;
    }
  }
  return {flags == 0, fmt("%zu inputs of 10000 points, flags raised: %zu", inputs, flags)};
}

Outcome check_a7() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  // Fourier: every amplitude and phase of the default weekly model on one week of data.
  // Several phase gradients are ~1e-8 against a loss near 1, so the step is
  // large enough that cancellation in the difference quotient stays below the
  // tolerance; truncation error at this step is O(h^2) = 1e-6.
  const Series week = gen({.kind = SyntheticKind::sine, .length = 2016, .noise_stddev = 0.02, .seed = 78});
  std::vector<std::int64_t> idx(week.size());
  for (std::size_t i = 0; i < week.size(); ++i) idx[i] = absolute_sample_index(week, i);
  const FourierObjective obj(idx, week.values(), 2016, 448);
  std::vector<double> params(obj.num_params());
  for (double& p : params) p = 0.1 * u(rng);
  const double fourier_err = optim::check_gradient(
      [&](std::span<const double> p) { return obj.loss(p); },
      [&](std::span<const double> p) {
        std::vector<double> g(p.size());
        obj.loss_and_gradient(p, g);
        return g;
      },
      params, 1e-3);

  // MLP: input, one hidden layer, output; 20 random coordinates.
  std::normal_distribution<double> g(0.0, 0.3);
  const std::vector<std::size_t> widths{32, 200, 1};
  std::vector<double> w(MlpModel::param_count(widths));
  for (double& x : w) x = g(rng);
  std::vector<double> x, y;
  const Series day = gen({.kind = SyntheticKind::stepwise_sine, .length = 200, .noise_stddev = 0.02, .seed = 79});
  for (std::size_t i = 0; i < day.size(); ++i) {
    const auto row = encode_time(day.timestamp(i)).flatten();
    x.insert(x.end(), row.begin(), row.end());
    y.push_back(day[i]);
  }
  std::vector<std::size_t> probes;
  std::uniform_int_distribution<std::size_t> pick(0, w.size() - 1);
  while (probes.size() < 20) probes.push_back(pick(rng));
  std::vector<double> sub(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) sub[i] = w[probes[i]];
  auto full = [&](std::span<const double> s) {
    std::vector<double> p = w;
    for (std::size_t i = 0; i < probes.size(); ++i) p[probes[i]] = s[i];
    return p;
  };
  std::vector<double> grad(w.size());
  const double mlp_err = optim::check_gradient(
      [&](std::span<const double> s) { return mlp_loss_and_gradient(widths, full(s), x, y, grad); },
      [&](std::span<const double> s) {
        mlp_loss_and_gradient(widths, full(s), x, y, grad);
        std::vector<double> out(probes.size());
        for (std::size_t i = 0; i < probes.size(); ++i) out[i] = grad[probes[i]];
        return out;
      },
      sub);
  return {fourier_err < 1e-4 && mlp_err < 1e-4,
          fmt("Fourier (%zu params) max rel err %.3g, MLP (20 probes) max rel err %.3g (< 1e-4)", params.size(),
              fourier_err, mlp_err)};
}

Outcome check_a8() {
  std::mt19937_64 rng(88);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const TailProbConfig cfg;
  TailProbState st(cfg);
  for (int i = 0; i < 10000; ++i) {
    // Scores with bursts and long quiet stretches.
    const double s = (i / 700) % 2 ? std::abs(g(rng)) * 5.0 : (u(rng) < 0.1 ? u(rng) : 0.0);
    tailprob_step(st, cfg, s);
  }
  double worst = 0.0;
  for (const RollingWindow* w : {&st.long_window(), &st.short_window()}) {
    const auto v = w->contents();
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    worst = std::max({worst, std::abs(mean - w->mean()), std::abs(var - w->variance())});
  }
  return {worst <= 1e-9, fmt("max deviation from brute force %.3g (<= 1e-9)", worst)};
}

Outcome check_a9() {
  bool ok = true;
  AccumulatorConfig cfg;
  cfg.fire_threshold = 3;
  const double pred = 0.2;

  AccumulatorState st;
  std::vector<double> trace;
  std::vector<bool> fired;
  for (int i = 0; i < 3; ++i) {
    fired.push_back(accumulator_step(st, cfg, pred, 0.0));
    trace.push_back(st.acc);
  }
  ok &= trace == std::vector<double>{1, 2, 3} && fired == std::vector<bool>{false, false, true};

  st = {};
  trace.clear();
  fired.clear();
  for (double actual : {0.0, pred, 0.0}) {
    fired.push_back(accumulator_step(st, cfg, pred, actual));
    trace.push_back(st.acc);
  }
  ok &= trace == std::vector<double>{1, 0, 1} && fired == std::vector<bool>{false, false, false};

  st = {};
  const AccumulatorConfig defaults;
  const bool f1 = accumulator_step(st, defaults, 0.4, 0.4);
  const double a1 = st.acc;
  const bool f2 = accumulator_step(st, defaults, 0.2, 0.2);
  ok &= !f1 && a1 == 0 && !f2 && st.acc == -3;
  const bool traces = ok;

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t out_of_bounds = 0;
  for (int trial = 0; trial < 10; ++trial) {
    AccumulatorConfig c;
    c.fire_threshold = 1.0 + 30.0 * u(rng);
    AccumulatorState s;
    for (int i = 0; i < 10000; ++i) {
      const double p = u(rng);
      accumulator_step(s, c, p, u(rng) < 0.7 ? p * u(rng) : u(rng));
      out_of_bounds += s.acc < -c.fire_threshold || s.acc > 1.5 * c.fire_threshold;
    }
  }
  ok &= out_of_bounds == 0;
  return {ok, fmt("hand traces %s, fuzz steps out of bounds: %zu", traces ? "reproduced" : "MISMATCH", out_of_bounds)};
}

Outcome check_a10(const FourierModel& fourier, const Scenario& sc) {
  // The baseline run's flag set is everything any of its rules raised; the
  // error comparison must hold under every rule.
  const BaselineModel baseline;
  auto score = [&](const Predictor& m) {
    const DetectorConfig cfg = config_for(m.kind());
    const auto rows = run_detector(m, sc.test, cfg);
    const auto labels = row_labels(sc.labels, m.warmup(), rows.size());
    SummaryOptions opt;
    opt.skip_leading = cfg.tail.long_window;
    std::size_t flagged = 0;
    for (const auto& r : rows) flagged += r.acc_flag || r.tail_flag;
    return std::pair{summarize(rows, labels, opt), flagged};
  };
  const auto [base, base_flags] = score(baseline);
  const auto [four, four_flags] = score(fourier);
  bool worse = true;
  std::string detail = fmt("baseline flagged points %zu;", base_flags);
  for (const char* rule : {"accumulator", "tail", "intersection"}) {
    const auto& b = base.rule(rule).matrix;
    const auto& f = four.rule(rule).matrix;
    const std::size_t be = b.false_positives + b.false_negatives;
    const std::size_t fe = f.false_positives + f.false_negatives;
    worse &= be > fe;
    detail += fmt(" %s FP+FN baseline %zu (FP %zu FN %zu) vs Fourier %zu;", rule, be, b.false_positives,
                  b.false_negatives, fe);
  }
  detail.pop_back();
  return {base_flags > 0 && worse, detail};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const char* id, const char* what, const Outcome& o) {
    std::printf("%s %s %s: %s\n", o.pass ? "PASS" : "FAIL", id, what, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };

  report("A1", "Fourier fits periodic data", check_a1());
  MlpRun mlp = check_a2();
  report("A2", "MLP fits rule-changing data", mlp.outcome);

  const Scenario peak = missing_peak_scenario();
  FourierTrainConfig weekly_cfg;  // weekly period, 448 harmonics
  weekly_cfg.seed = 3;
  const Models models{
      fourier_train(peak.train, weekly_cfg).model,
      fourier_train(peak.train, {.period_points = 288, .harmonics = 4, .seed = 4}).model,
      std::move(mlp.model),
  };
  report("A3", "missing peak is detected", check_a3(models.weekly, peak));

  const auto runs = run_matrix(models, peak);
  report("A4", "intersection reduces false positives", check_a4(runs));
  report("A5", "tail rule blind window", check_a5(runs));
  report("A6", "perfect predictor is silent", check_a6());
  report("A7", "analytic gradients match finite differences", check_a7());
  report("A8", "rolling statistics match brute force", check_a8());
  report("A9", "accumulator state machine", check_a9());
  report("A10", "baseline is worse than the learned model", check_a10(models.weekly, peak));

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
