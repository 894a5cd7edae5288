#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "dropwatch/detection.hpp"
#include "dropwatch/evaluation.hpp"
#include "dropwatch/model_io.hpp"
#include "dropwatch/series.hpp"

using namespace dropwatch;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

double reported(const std::string& out, const std::string& key) {
  const auto pos = out.find(key + " ");
  REQUIRE(pos != std::string::npos);
  return std::stod(out.substr(pos + key.size() + 1));
}

/// Fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("dropwatch_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& f) const { return (dir / f).string(); }
};

}  // namespace

TEST_CASE("synth writes the requested length and label sidecar") {
  Scratch tmp("synth");
  auto r = run({"synth", "--kind", "sine", "--period", "288", "--length", "8640", "--seed", "7", "-o", tmp / "s.csv"});
  REQUIRE(r.code == 0);
  CHECK(count_lines(slurp(tmp / "s.csv")) == 8640);
  CHECK_FALSE(fs::exists(tmp / "s.labels.csv"));

  r = run({"synth", "--length", "8640", "--inject", "4000:4100:0.0", "-o", tmp / "s.csv"});
  REQUIRE(r.code == 0);
  CHECK(slurp(tmp / "s.labels.csv") == "4000,4100\n");

  r = run({"synth", "--kind", "bogus", "-o", tmp / "x.csv"});
  CHECK(r.code != 0);
  CHECK_FALSE(fs::exists(tmp / "x.csv"));

  r = run({"synth", "--length", "100", "--inject", "90:120:0", "-o", tmp / "y.csv"});
  CHECK(r.code == 1);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("baseline training persists the fixed threshold") {
  Scratch tmp("baseline");
  REQUIRE(run({"synth", "--length", "17568", "-o", tmp / "s.csv"}).code == 0);
  const auto r = run({"train", "--model", "baseline", "--data", tmp / "s.csv", "--train-month", "2017-04",
                      "-o", tmp / "b.model"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("train_mse N/A") != std::string::npos);
  const ModelFile m = load_model(tmp / "b.model");
  REQUIRE(m.model->kind() == ModelKind::baseline);
  CHECK(static_cast<const BaselineModel&>(*m.model).threshold() == 0.065);
}

TEST_CASE("missing months are reported by name") {
  Scratch tmp("month");
  REQUIRE(run({"synth", "--length", "8640", "-o", tmp / "s.csv"}).code == 0);
  const auto r = run({"train", "--data", tmp / "s.csv", "--train-month", "2017-06", "-o", tmp / "m.model"});
  CHECK(r.code == 1);
  CHECK(r.err.find("2017-06") != std::string::npos);
  CHECK_FALSE(fs::exists(tmp / "m.model"));
}

TEST_CASE("full pipeline on a missing-peak scenario") {
  Scratch tmp("pipeline");
  // April and May 2017; day 40 is 2017-05-11, after the tail rule's first week.
  REQUIRE(run({"synth", "--length", "17568", "--missing-peak", "40:0.15", "-o", tmp / "s.csv"}).code == 0);

  const std::vector<std::string> train_args{"train", "--data", tmp / "s.csv", "--train-month", "2017-04",
                                            "--test-month", "2017-05", "--seed", "3", "-o", tmp / "m.model"};
  auto r = run(train_args);
  REQUIRE(r.code == 0);
  CHECK(reported(r.out, "train_mse") < 1e-3);
  const std::string model_bytes = slurp(tmp / "m.model");
  REQUIRE(run(train_args).code == 0);
  CHECK(slurp(tmp / "m.model") == model_bytes);

  r = run({"detect", "--model", tmp / "m.model", "--data", tmp / "s.csv", "--test-month", "2017-05",
           "-o", tmp / "flags.csv"});
  REQUIRE(r.code == 0);
  const auto rows = read_flags_file(tmp / "flags.csv");
  REQUIRE(rows.size() == 8928);
  CHECK(rows.front().index == 8640);
  for (std::size_t i = 0; i < 2016; ++i) REQUIRE_FALSE(rows[i].tail_flag);

  r = run({"eval", "--flags", tmp / "flags.csv", "--labels", tmp / "s.labels.csv", "-o", tmp / "report.json"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("intersection") != std::string::npos);
  const Report report = report_from_json(slurp(tmp / "report.json"));
  REQUIRE(report.rules.size() == 3);
  CHECK(report.rule("intersection").matrix.true_positives > 0);
  CHECK(report.scored_points == 8928 - 2016);

  r = run({"plot", "--flags", tmp / "flags.csv", "--title", "May", "-o", tmp / "a.svg"});
  REQUIRE(r.code == 0);
  REQUIRE(run({"plot", "--flags", tmp / "flags.csv", "--title", "May", "-o", tmp / "b.svg"}).code == 0);
  const std::string svg = slurp(tmp / "a.svg");
  CHECK(svg == slurp(tmp / "b.svg"));
  CHECK(count_of(svg, "<polyline") == 2);
  CHECK(count_of(svg, "<rect") == report.rule("intersection").regions.size());
}

TEST_CASE("eval examples") {
  Scratch tmp("eval");
  std::vector<DetectionRow> rows(3000);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].index = 100 + i;
    rows[i].acc_flag = i % 50 == 0;
  }
  write_flags_file(tmp / "f.csv", rows);

  auto r = run({"eval", "--flags", tmp / "f.csv", "-o", tmp / "r.json"});
  REQUIRE(r.code == 0);
  const Report report = report_from_json(slurp(tmp / "r.json"));
  REQUIRE(report.rules.size() == 3);
  for (const auto& rule : report.rules) {
    CHECK(rule.matrix.true_positives == 0);
    CHECK(rule.matrix.false_negatives == 0);
  }
  CHECK(report.rule("accumulator").matrix.false_positives > 0);

  {
    std::ofstream bad(tmp / "bad.csv");
    bad << "2200,2300\n2400;2500\n";
  }
  r = run({"eval", "--flags", tmp / "f.csv", "--labels", tmp / "bad.csv"});
  CHECK(r.code == 1);
  CHECK(r.err.find("line 2") != std::string::npos);

  {
    std::ofstream far(tmp / "far.csv");
    far << "900000,900010\n";
  }
  r = run({"eval", "--flags", tmp / "f.csv", "--labels", tmp / "far.csv"});
  CHECK(r.code == 1);
}

TEST_CASE("perfect predictor fixture produces no flags") {
  Scratch tmp("perfect");
  // April spans [0, 1] so May's constant 0.065 normalizes onto the baseline exactly.
  std::vector<double> v;
  for (std::size_t i = 0; i < 8640; ++i) v.push_back(static_cast<double>(i % 2));
  for (std::size_t i = 0; i < 8928; ++i) v.push_back(0.065);
  write_csv_file(tmp / "p.csv", Series(1491004800, 300, v));
  REQUIRE(run({"train", "--model", "baseline", "--data", tmp / "p.csv", "--train-month", "2017-04",
               "-o", tmp / "b.model"}).code == 0);
  const auto r = run({"detect", "--model", tmp / "b.model", "--data", tmp / "p.csv", "--test-month",
                      "2017-05", "-o", tmp / "f.csv"});
  REQUIRE(r.code == 0);
  const auto rows = read_flags_file(tmp / "f.csv");
  REQUIRE(rows.size() == 8928);
  for (const auto& row : rows) {
    REQUIRE_FALSE(row.acc_flag);
    REQUIRE_FALSE(row.tail_flag);
  }

  REQUIRE(run({"plot", "--flags", tmp / "f.csv", "-o", tmp / "p.svg"}).code == 0);
  CHECK(count_of(slurp(tmp / "p.svg"), "<rect") == 0);
}

TEST_CASE("short test month warns and keeps the tail rule silent") {
  Scratch tmp("short");
  // April plus the first three days of May.
  REQUIRE(run({"synth", "--length", std::to_string(8640 + 3 * 288), "--noise", "0.02", "--seed", "1",
               "--inject", "8700:8800:0", "-o", tmp / "s.csv"}).code == 0);
  REQUIRE(run({"train", "--data", tmp / "s.csv", "--train-month", "2017-04", "--set", "fourier.period=288",
               "--set", "fourier.harmonics=4", "-o", tmp / "m.model"}).code == 0);
  const auto r = run({"detect", "--model", tmp / "m.model", "--data", tmp / "s.csv", "--test-month",
                      "2017-05", "-o", tmp / "f.csv"});
  REQUIRE(r.code == 0);
  CHECK(r.err.find("warning") != std::string::npos);
  const auto rows = read_flags_file(tmp / "f.csv");
  bool any_acc = false;
  for (const auto& row : rows) {
    REQUIRE_FALSE(row.tail_flag);
    any_acc |= row.acc_flag;
  }
  CHECK(any_acc);
}

TEST_CASE("gaps in the input are excluded from scoring") {
  Scratch tmp("gaps");
  std::ostringstream csv;
  for (std::size_t i = 0; i < 8640 + 8928; ++i) {
    if (i == 9000 || i == 9001) continue;
    csv << 1491004800 + 300 * static_cast<std::int64_t>(i) << ',' << (i % 288 < 144 ? 1.0 : 0.2) << '\n';
  }
  {
    std::ofstream f(tmp / "g.csv");
    f << csv.str();
  }
  REQUIRE(run({"train", "--model", "baseline", "--data", tmp / "g.csv", "--train-month", "2017-04",
               "-o", tmp / "b.model"}).code == 0);
  auto r = run({"detect", "--model", tmp / "b.model", "--data", tmp / "g.csv", "--test-month", "2017-05",
                "-o", tmp / "f.csv"});
  REQUIRE(r.code == 0);
  CHECK(slurp(tmp / "f.gaps.csv") == "9000\n9001\n");
  r = run({"eval", "--flags", tmp / "f.csv", "--skip", "0", "-o", tmp / "r.json"});
  REQUIRE(r.code == 0);
  CHECK(report_from_json(slurp(tmp / "r.json")).scored_points == 8928 - 2);
}

TEST_CASE("config files and overrides feed the run") {
  Scratch tmp("config");
  {
    std::ofstream f(tmp / "run.cfg");
    f << "model = fourier\ntrain_month = 2017-04\nfourier.period = 288\nfourier.harmonics = 2\n";
  }
  REQUIRE(run({"synth", "--length", "8640", "-o", tmp / "s.csv"}).code == 0);
  auto r = run({"train", "--config", tmp / "run.cfg", "--data", tmp / "s.csv", "-o", tmp / "m.model"});
  REQUIRE(r.code == 0);
  const ModelFile m = load_model(tmp / "m.model");
  const auto& f = static_cast<const FourierModel&>(*m.model);
  CHECK(f.period_points() == 288);
  CHECK(f.harmonics() == 2);

  r = run({"train", "--config", tmp / "run.cfg", "--set", "fourier.bogus=1", "--data", tmp / "s.csv",
           "-o", tmp / "m2.model"});
  CHECK(r.code == 1);
  CHECK(r.err.find("fourier.bogus") != std::string::npos);
}
