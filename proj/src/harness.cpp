#include "coalab/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <variant>

#include "coalab/asymptotics.hpp"
#include "coalab/coalescent.hpp"
#include "coalab/error.hpp"
#include "coalab/functionals.hpp"
#include "coalab/parallel.hpp"
#include "coalab/stats.hpp"
#include "coalab/subordinator.hpp"

#ifndef COALAB_VERSION
#define COALAB_VERSION "unknown"
#endif

namespace coalab {

using json = nlohmann::ordered_json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::int64_t kOracleMax = 200;

std::string hex(std::uint64_t v) {
  char buf[17];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, 16);
  return std::string(buf, end);
}

std::string key(std::int64_t n, const char* what) { return "n" + std::to_string(n) + "_" + what; }

void put_moments(json& s, const std::string& prefix, const std::vector<double>& x,
                 std::initializer_list<int> levels = {5, 50, 95}) {
  const auto m = summarize(x);
  s[prefix + "mean"] = json_number(m.mean);
  s[prefix + "variance"] = json_number(m.variance);
  s[prefix + "std_error"] = json_number(m.std_error);
  for (int q : levels) {
    char name[8];
    std::snprintf(name, sizeof name, "p%02d", q);
    s[prefix + name] = json_number(percentile(x, q / 100.0));
  }
}

double value_of(const Functional& f) { return f.infinite() ? kInf : f.value; }

/// γ of a measure made of one log_gamma density and nothing else.
std::optional<double> pure_log_gamma(const LambdaMeasure& m) {
  if (m.atom_at_zero() > 0 || m.atom_at_one() > 0 || !m.interior_atoms().empty() || m.densities().size() != 1)
    return std::nullopt;
  if (const auto* lg = std::get_if<LogGammaDensity>(&m.densities().front())) return lg->gamma;
  return std::nullopt;
}

double delta_for(const ExperimentConfig& cfg, const LambdaMeasure& m) {
  return cfg.delta ? *cfg.delta : default_delta(m);
}

/// Rows of `t` whose column `col` equals v.
std::vector<double> select(const SampleTable& t, const std::string& col, double v, const std::string& out) {
  const auto a = t.column(col), b = t.column(out);
  std::vector<double> r;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] == v) r.push_back(b[i]);
  return r;
}

void oracle_gate(const LambdaMeasure& m, std::int64_t n, const std::vector<double>& tau) {
  if (n > kOracleMax) return;
  const double exact = exact_expected_absorption(m, n)[static_cast<std::size_t>(n)];
  const auto s = summarize(tau);
  if (std::abs(s.mean - exact) > 4.0 * s.std_error)
    throw Error("oracle gate failed at n=" + std::to_string(n) + ": sample mean " + format_number(s.mean) +
                ", exact " + format_number(exact) + ", standard error " + format_number(s.std_error));
}

void put_oracle(json& s, const LambdaMeasure& m, std::int64_t n, const std::vector<double>& tau) {
  if (n > kOracleMax) return;
  const double exact = exact_expected_absorption(m, n)[static_cast<std::size_t>(n)];
  const auto t = summarize(tau);
  s[key(n, "oracle")] = json_number(exact);
  s[key(n, "oracle_gap_se")] = json_number(std::abs(t.mean - exact) / t.std_error);
}

/// reps rows at block count n; replicate j uses stream (seed, offset + j).
template <class Row>
SampleTable sample_n(const ExperimentConfig& cfg, std::int64_t n, std::uint64_t offset,
                     std::vector<std::string> columns, Row&& row) {
  SampleTable t;
  t.columns = std::move(columns);
  t.rows.resize(cfg.reps);
  parallel_for(cfg.reps, cfg.threads, [&](std::size_t j) {
    const std::uint64_t rep = offset + j;
    Rng rng(cfg.seed, rep);
    t.rows[j] = row(n, rep, rng);
  });
  return t;
}

/// One sample_n per grid point (grid point i starts at replicate i*reps),
/// with the oracle gate run on the tau column before moving on.
template <class Row>
SampleTable sample_grid(const ExperimentConfig& cfg, const LambdaMeasure& m, std::vector<std::string> columns,
                        Row&& row) {
  SampleTable t;
  t.columns = columns;
  for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
    auto part = sample_n(cfg, cfg.n_grid[i], i * cfg.reps, columns, row);
    oracle_gate(m, cfg.n_grid[i], part.column("tau"));
    for (auto& r : part.rows) t.rows.push_back(std::move(r));
  }
  return t;
}

}  // namespace

const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::simulate: return "simulate";
    case ExperimentKind::lln: return "lln";
    case ExperimentKind::clt: return "clt";
    case ExperimentKind::coupling: return "coupling";
    case ExperimentKind::passage: return "passage";
  }
  return "?";
}

const char* software_version() { return "coalab " COALAB_VERSION; }

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, end);
}

json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

std::vector<double> SampleTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw Error("no column " + name);
  const auto c = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.reps < 2) throw SemanticError("reps must be >= 2");
  if (cfg.kind == ExperimentKind::passage) {
    if (!std::isfinite(cfg.z) || !std::isfinite(cfg.x)) throw SemanticError("z and x must be finite");
    return;
  }
  if (cfg.n_grid.empty()) throw SemanticError("n grid is empty");
  for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
    if (cfg.n_grid[i] < 2) throw SemanticError("every n must be >= 2");
    if (i > 0 && cfg.n_grid[i] <= cfg.n_grid[i - 1]) throw SemanticError("n grid must be strictly increasing");
  }
  if (cfg.delta && !(*cfg.delta > 0.0)) throw SemanticError("delta must be positive");
  if (cfg.kind == ExperimentKind::simulate && cfg.n_grid.size() != 1) throw SemanticError("simulate takes one n");
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["measure"] = cfg.measure;
  j["kind"] = to_string(cfg.kind);
  j["n_grid"] = cfg.n_grid;
  j["reps"] = cfg.reps;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["delta"] = cfg.delta ? json(*cfg.delta) : json(nullptr);
  if (cfg.kind == ExperimentKind::passage) {
    j["z"] = cfg.z;
    j["x"] = cfg.x;
  }
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.measure = j.at("measure").get<std::string>();
  const auto kind = j.at("kind").get<std::string>();
  bool found = false;
  for (auto k : {ExperimentKind::simulate, ExperimentKind::lln, ExperimentKind::clt, ExperimentKind::coupling,
                 ExperimentKind::passage}) {
    if (kind == to_string(k)) {
      cfg.kind = k;
      found = true;
    }
  }
  if (!found) throw SemanticError("unknown experiment kind " + kind);
  cfg.n_grid = j.at("n_grid").get<std::vector<std::int64_t>>();
  cfg.reps = j.at("reps").get<std::size_t>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.threads = j.at("threads").get<unsigned>();
  if (!j.at("delta").is_null()) cfg.delta = j.at("delta").get<double>();
  if (j.contains("z")) cfg.z = j.at("z").get<double>();
  if (j.contains("x")) cfg.x = j.at("x").get<double>();
  return cfg;
}

json summarize_samples(const ExperimentConfig& cfg, const SampleTable& t) {
  const auto m = parse_measure(cfg.measure);
  json s;
  s["kind"] = to_string(cfg.kind);
  s["measure"] = cfg.measure;
  s["measure_fingerprint"] = hex(m.fingerprint());
  s["software"] = software_version();
  s["seed"] = std::to_string(cfg.seed);
  s["reps"] = cfg.reps;

  switch (cfg.kind) {
    case ExperimentKind::simulate: {
      const auto n = cfg.n_grid.front();
      const auto tau = t.column("tau");
      s["n"] = n;
      put_moments(s, "", tau);
      if (n <= kOracleMax) {
        const double exact = exact_expected_absorption(m, n)[static_cast<std::size_t>(n)];
        s["oracle"] = json_number(exact);
        s["oracle_gap_se"] = json_number(std::abs(summarize(tau).mean - exact) / summarize(tau).std_error);
      }
      break;
    }
    case ExperimentKind::lln: {
      const double mu_v = value_of(mu(m));
      const double ref = std::isinf(mu_v) ? 0.0 : 1.0 / mu_v;
      s["statistic"] = "tau_n/log(n)";
      s["reference"] = json_number(ref);
      double last_gap = kInf;
      bool monotone = true;
      for (auto n : cfg.n_grid) {
        const auto stat = select(t, "n", static_cast<double>(n), "stat");
        put_moments(s, key(n, ""), stat);
        const double gap = std::abs(summarize(stat).mean - ref);
        s[key(n, "gap")] = json_number(gap);
        if (ref > 0) s[key(n, "rel_gap")] = json_number(gap / ref);
        monotone = monotone && gap < last_gap;
        last_gap = gap;
        put_oracle(s, m, n, select(t, "n", static_cast<double>(n), "tau"));
      }
      s["trend_monotone"] = monotone ? 1.0 : 0.0;
      if (auto g = pure_log_gamma(m); g && *g <= 1.0) {
        s["exploratory"] = "tau_n/(log n)^gamma for log_gamma with gamma <= 1; no acceptance target";
        for (auto n : cfg.n_grid)
          s[key(n, "exploratory_mean")] =
              json_number(summarize(select(t, "n", static_cast<double>(n), "stat_exploratory")).mean);
      }
      break;
    }
    case ExperimentKind::clt: {
      const auto p = clt_params(m);
      const Asymptotics a(m);
      s["statistic"] = "(tau_n - b_n)/sqrt(log n)";
      s["target_variance"] = json_number(p.variance);
      s["kappa"] = json_number(a.kappa());
      double last_gap = kInf;
      bool monotone = true;
      for (auto n : cfg.n_grid) {
        const auto stat = select(t, "n", static_cast<double>(n), "stat");
        const auto sm = summarize(stat);
        put_moments(s, key(n, ""), stat);
        s[key(n, "b_n")] = json_number(a.b_n(static_cast<double>(n)));
        if (std::log(static_cast<double>(n)) < a.kappa()) s[key(n, "b_n_empty")] = 1.0;
        s[key(n, "variance_ratio")] = json_number(sm.variance / p.variance);
        s[key(n, "mean_z")] = json_number(sm.mean / sm.std_error);
        const auto ks = ks_normal(stat, p.variance);
        s[key(n, "ks_d")] = json_number(ks.d);
        s[key(n, "ks_p")] = json_number(ks.p_value);
        const double gap = std::abs(sm.variance - p.variance);
        monotone = monotone && gap < last_gap;
        last_gap = gap;
        put_oracle(s, m, n, select(t, "n", static_cast<double>(n), "tau"));
      }
      s["variance_trend_monotone"] = monotone ? 1.0 : 0.0;
      break;
    }
    case ExperimentKind::coupling: {
      const double delta = delta_for(cfg, m);
      const JumpMeasure jm(m, delta);
      s["delta"] = json_number(delta);
      s["m_delta"] = json_number(jm.compensator_drift());
      s["v_delta"] = json_number(jm.removed_variance());
      double lo = kInf, hi = 0.0;
      for (auto n : cfg.n_grid) {
        const auto gap = select(t, "n", static_cast<double>(n), "sup_gap");
        put_moments(s, key(n, "sup_gap_"), gap, {50, 90, 95, 99});
        put_moments(s, key(n, "y_at_tau_"), select(t, "n", static_cast<double>(n), "y_at_tau"), {50, 90, 95, 99});
        const double p95 = percentile(gap, 0.95);
        lo = std::min(lo, p95);
        hi = std::max(hi, p95);
        put_oracle(s, m, n, select(t, "n", static_cast<double>(n), "tau"));
      }
      s["sup_gap_p95_ratio"] = json_number(hi / lo);
      s["sup_gap_p95_stable"] = hi < 1.5 * lo ? 1.0 : 0.0;
      break;
    }
    case ExperimentKind::passage: {
      const double delta = delta_for(cfg, m);
      const JumpMeasure jm(m, delta);
      s["delta"] = json_number(delta);
      s["m_delta"] = json_number(jm.compensator_drift());
      s["v_delta"] = json_number(jm.removed_variance());
      s["z"] = cfg.z;
      s["x"] = cfg.x;
      const auto T = t.column("T");
      put_moments(s, "", T);
      const double mu_v = value_of(mu(m));
      s["mean_over_z"] = json_number(summarize(T).mean / cfg.z);
      s["reference"] = json_number(1.0 / mu_v);
      s["rel_gap"] = json_number(std::abs(summarize(T).mean / cfg.z * mu_v - 1.0));
      const auto s2 = sigma2(m);
      if (cfg.x == 0.0 && !s2.infinite()) {
        const Asymptotics a(m);
        const double beta = a.beta(cfg.z);
        const double var = s2.value / (mu_v * mu_v * mu_v);
        std::vector<double> st;
        for (double v : T) st.push_back((v - beta) / std::sqrt(cfg.z));
        s["beta_z"] = json_number(beta);
        s["target_variance"] = json_number(var);
        put_moments(s, "standardized_", st);
        const auto ks = ks_normal(st, var);
        s["ks_d"] = json_number(ks.d);
        s["ks_p"] = json_number(ks.p_value);
      }
      break;
    }
  }
  return s;
}

ExperimentResult run_lln(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto m = parse_measure(cfg.measure);
  const CoalescentSimulator sim(m);
  const auto gamma = pure_log_gamma(m);
  const bool exploratory = gamma && *gamma <= 1.0;
  std::vector<std::string> cols{"replicate", "n", "tau", "stat"};
  if (exploratory) cols.push_back("stat_exploratory");
  ExperimentResult r;
  r.config = cfg;
  r.samples = sample_grid(cfg, m, cols, [&](std::int64_t n, std::uint64_t rep, Rng& rng) {
    const double tau = sim.absorption_time(n, rng);
    const double L = std::log(static_cast<double>(n));
    std::vector<double> row{static_cast<double>(rep), static_cast<double>(n), tau, tau / L};
    if (exploratory) row.push_back(tau / std::pow(L, *gamma));
    return row;
  });
  r.summary = summarize_samples(cfg, r.samples);
  return r;
}

ExperimentResult run_clt(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto m = parse_measure(cfg.measure);
  const auto params = clt_params(m);  // domain check before any simulation
  const Asymptotics a(m);
  const CoalescentSimulator sim(m);
  std::vector<double> b(cfg.n_grid.size());
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = a.b_n(static_cast<double>(cfg.n_grid[i]));
  ExperimentResult r;
  r.config = cfg;
  r.samples = sample_grid(cfg, m, {"replicate", "n", "tau", "stat"}, [&](std::int64_t n, std::uint64_t rep, Rng& rng) {
    const double tau = sim.absorption_time(n, rng);
    const double bn = b[rep / cfg.reps];
    return std::vector<double>{static_cast<double>(rep), static_cast<double>(n), tau,
                               (tau - bn) / std::sqrt(std::log(static_cast<double>(n)))};
  });
  r.qq.columns = {"n", "prob", "sample_quantile", "normal_quantile"};
  const double sd = std::sqrt(params.variance);
  for (auto n : cfg.n_grid) {
    const auto stat = select(r.samples, "n", static_cast<double>(n), "stat");
    for (int k = 1; k < 100; ++k) {
      const double p = k / 100.0;
      r.qq.rows.push_back({static_cast<double>(n), p, percentile(stat, p), sd * normal_quantile(p)});
    }
  }
  r.summary = summarize_samples(cfg, r.samples);
  return r;
}

ExperimentResult run_coupling(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto m = parse_measure(cfg.measure);
  const double y_max = std::log(static_cast<double>(cfg.n_grid.back())) + 10.0;
  const SubordinatorEngine eng(m, delta_for(cfg, m), y_max);
  ExperimentResult r;
  r.config = cfg;
  r.samples = sample_grid(cfg, m, {"replicate", "n", "tau", "sup_gap", "y_at_tau"},
                          [&](std::int64_t n, std::uint64_t rep, Rng& rng) {
                            const auto c = eng.coupled(n, rng);
                            return std::vector<double>{static_cast<double>(rep), static_cast<double>(n), c.tau,
                                                       c.sup_gap, c.y_at_tau};
                          });
  r.summary = summarize_samples(cfg, r.samples);
  return r;
}

ExperimentResult run_passage(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto m = parse_measure(cfg.measure);
  const SubordinatorEngine eng(m, delta_for(cfg, m), std::max(cfg.z, 0.0) + 10.0);
  ExperimentResult r;
  r.config = cfg;
  r.samples.columns = {"replicate", "z", "x", "T"};
  const auto T = eng.passage_sample(cfg.z, cfg.x, cfg.reps, cfg.seed, cfg.threads);
  for (std::size_t j = 0; j < T.size(); ++j) r.samples.rows.push_back({static_cast<double>(j), cfg.z, cfg.x, T[j]});
  r.summary = summarize_samples(cfg, r.samples);
  return r;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::lln: return run_lln(cfg);
    case ExperimentKind::clt: return run_clt(cfg);
    case ExperimentKind::coupling: return run_coupling(cfg);
    case ExperimentKind::passage: return run_passage(cfg);
    case ExperimentKind::simulate: break;
  }
  validate(cfg);
  const auto m = parse_measure(cfg.measure);
  const CoalescentSimulator sim(m);
  ExperimentResult r;
  r.config = cfg;
  r.samples = sample_grid(cfg, m, {"replicate", "tau"}, [&](std::int64_t n, std::uint64_t rep, Rng& rng) {
    return std::vector<double>{static_cast<double>(rep), sim.absorption_time(n, rng)};
  });
  r.summary = summarize_samples(cfg, r.samples);
  return r;
}

void write_csv(const SampleTable& t, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw Error("cannot write " + file.string());
  for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_number(row[c]);
    out << '\n';
  }
}

SampleTable read_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot read " + file.string());
  SampleTable t;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty CSV file", 0);
  std::stringstream header(line);
  for (std::string col; std::getline(header, col, ',');) t.columns.push_back(col);
  std::size_t offset = line.size() + 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t comma = std::min(line.find(',', pos), line.size());
      const std::string_view cell(line.data() + pos, comma - pos);
      double v;
      if (cell == "inf") {
        v = kInf;
      } else if (cell == "-inf") {
        v = -kInf;
      } else if (cell == "nan") {
        v = std::numeric_limits<double>::quiet_NaN();
      } else {
        auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || end != cell.data() + cell.size()) throw ParseError("bad CSV number", offset + pos);
      }
      row.push_back(v);
      pos = comma + 1;
    }
    if (row.size() != t.columns.size()) throw ParseError("CSV row has the wrong number of fields", offset);
    t.rows.push_back(std::move(row));
    offset += line.size() + 1;
  }
  return t;
}

void write_outputs(const ExperimentResult& r, const std::filesystem::path& dir, bool force) {
  namespace fs = std::filesystem;
  if (fs::exists(dir) && !fs::is_empty(dir) && !force)
    throw Error("output directory " + dir.string() + " is not empty (use --force to overwrite)");
  fs::create_directories(dir);
  {
    std::ofstream echo(dir / "config.echo");
    echo << to_json(r.config).dump(2) << '\n';
  }
  write_csv(r.samples, dir / "samples.csv");
  if (!r.qq.rows.empty()) write_csv(r.qq, dir / "qq.csv");
  std::ofstream summary(dir / "summary.json");
  summary << r.summary.dump(2) << '\n';
}

}  // namespace coalab
