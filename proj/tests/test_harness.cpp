#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "coalab/error.hpp"
#include "coalab/harness.hpp"
#include "doctest.h"

using namespace coalab;
namespace fs = std::filesystem;

namespace {

ExperimentConfig config(ExperimentKind kind, std::vector<std::int64_t> grid, std::size_t reps) {
  ExperimentConfig c;
  c.measure = "atom:0.5:1";
  c.kind = kind;
  c.n_grid = std::move(grid);
  c.reps = reps;
  c.seed = 11;
  c.threads = 2;
  return c;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("coalab_test_" + name);
  fs::remove_all(p);
  return p;
}

nlohmann::ordered_json read_json(const fs::path& f) {
  std::ifstream in(f);
  return nlohmann::ordered_json::parse(in);
}

}  // namespace

TEST_CASE("config validation") {
  auto c = config(ExperimentKind::lln, {10, 100}, 10);
  CHECK_NOTHROW(validate(c));
  c.reps = 1;
  CHECK_THROWS_AS(validate(c), SemanticError);
  c = config(ExperimentKind::lln, {100, 10}, 10);
  CHECK_THROWS_AS(validate(c), SemanticError);
  c = config(ExperimentKind::lln, {1, 10}, 10);
  CHECK_THROWS_AS(validate(c), SemanticError);
  c = config(ExperimentKind::simulate, {10, 20}, 10);
  CHECK_THROWS_AS(validate(c), SemanticError);
  c = config(ExperimentKind::coupling, {10}, 10);
  c.delta = -0.1;
  CHECK_THROWS_AS(validate(c), SemanticError);
  c = config(ExperimentKind::passage, {}, 10);
  c.z = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(validate(c), SemanticError);

  auto back = config_from_json(to_json(config(ExperimentKind::clt, {10, 20}, 7)));
  CHECK(back.kind == ExperimentKind::clt);
  CHECK(back.n_grid == std::vector<std::int64_t>{10, 20});
  CHECK(back.reps == 7);
  CHECK(back.seed == 11);
}

TEST_CASE("number formatting") {
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(std::stod(format_number(0.1)) == 0.1);
  CHECK(json_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(json_number(2.5) == 2.5);
}

TEST_CASE("CSV round trip reproduces the summary") {
  for (auto kind : {ExperimentKind::simulate, ExperimentKind::lln, ExperimentKind::clt}) {
    CAPTURE(to_string(kind));
    auto c = config(kind, kind == ExperimentKind::simulate ? std::vector<std::int64_t>{30}
                                                            : std::vector<std::int64_t>{20, 200, 2000},
                    200);
    const auto r = run_experiment(c);
    const auto dir = scratch(std::string("roundtrip_") + to_string(kind));
    write_outputs(r, dir, false);
    const auto table = read_csv(dir / "samples.csv");
    CHECK(table.columns == r.samples.columns);
    CHECK(table.rows == r.samples.rows);
    const auto cfg = config_from_json(read_json(dir / "config.echo"));
    CHECK(summarize_samples(cfg, table).dump() == read_json(dir / "summary.json").dump());
    if (kind == ExperimentKind::clt) CHECK(fs::exists(dir / "qq.csv"));
    fs::remove_all(dir);
  }
}

TEST_CASE("samples do not depend on the thread count") {
  for (auto kind : {ExperimentKind::lln, ExperimentKind::coupling}) {
    auto c = config(kind, {20, 500}, 40);
    c.threads = 1;
    const auto one = run_experiment(c);
    c.threads = 4;
    const auto four = run_experiment(c);
    CHECK(one.samples.rows == four.samples.rows);
    CHECK(one.summary.dump() == four.summary.dump());
  }
}

TEST_CASE("existing output is not overwritten without force") {
  const auto dir = scratch("force");
  const auto r = run_experiment(config(ExperimentKind::simulate, {10}, 20));
  write_outputs(r, dir, false);
  CHECK_THROWS_AS(write_outputs(r, dir, false), Error);
  CHECK_NOTHROW(write_outputs(r, dir, true));
  fs::remove_all(dir);
}

TEST_CASE("simulate summary and the oracle gate") {
  const auto r = run_experiment(config(ExperimentKind::simulate, {50}, 4000));
  CHECK(r.samples.columns == std::vector<std::string>{"replicate", "tau"});
  CHECK(r.samples.rows.size() == 4000);
  CHECK(r.summary["oracle_gap_se"].get<double>() < 4.0);
  CHECK(r.summary["p05"].get<double>() <= r.summary["p50"].get<double>());
}

TEST_CASE("experiments that need finite moments") {
  auto c = config(ExperimentKind::clt, {10, 100}, 20);
  c.measure = "atom:0:1";
  CHECK_THROWS_AS(run_experiment(c), DomainError);
  c.measure = "density:uniform:1";
  CHECK_THROWS_AS(run_experiment(c), DomainError);
  c.kind = ExperimentKind::coupling;
  CHECK_THROWS_AS(run_experiment(c), DomainError);
}

TEST_CASE("lln reference without a finite mean") {
  auto c = config(ExperimentKind::lln, {20, 200}, 20);
  c.measure = "density:beta:1:1:1";
  const auto r = run_experiment(c);
  CHECK(r.summary["reference"].get<double>() == 0.0);
}

TEST_CASE("coupling and passage outputs") {
  auto c = config(ExperimentKind::coupling, {100, 1000}, 50);
  const auto r = run_experiment(c);
  CHECK(r.samples.columns == std::vector<std::string>{"replicate", "n", "tau", "sup_gap", "y_at_tau"});
  for (const auto& row : r.samples.rows) CHECK(row[3] >= 0.0);
  CHECK(r.summary.contains("sup_gap_p95_ratio"));

  auto p = config(ExperimentKind::passage, {}, 200);
  p.z = 10.0;
  p.x = 0.0;
  const auto pr = run_experiment(p);
  CHECK(pr.samples.columns == std::vector<std::string>{"replicate", "z", "x", "T"});
  for (const auto& row : pr.samples.rows) CHECK(row[3] > 0.0);
  CHECK(pr.summary.contains("beta_z"));
  CHECK(std::abs(pr.summary["rel_gap"].get<double>()) < 0.2);
}
