#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "coalab/asymptotics.hpp"
#include "coalab/coalescent.hpp"
#include "coalab/error.hpp"
#include "coalab/functionals.hpp"
#include "coalab/harness.hpp"
#include "coalab/parallel.hpp"
#include "coalab/rates.hpp"

using namespace coalab;
using json = nlohmann::ordered_json;

namespace {

json functional_json(const Functional& f) { return f.infinite() ? json("inf") : json(f.value); }

const char* cause_name(const Functional& f) {
  switch (f.cause) {
    case InfinityCause::none: return "finite";
    case InfinityCause::atom: return "atom";
    case InfinityCause::divergence: return "divergence (growth rule)";
  }
  return "?";
}

void cmd_functionals(const std::string& spec, double tol) {
  const auto m = parse_measure(spec);
  const quad::Tolerance t{tol, tol * 1e-2};
  json out;
  out["measure"] = spec;
  for (const auto& f : {total_mass(m, t), mu(m, t), sigma2(m, t), dust_integral(m, t)}) {
    out[f.kind] = functional_json(f);
    out[f.kind + "_cause"] = cause_name(f);
  }
  const auto d = dust_integral(m, t);
  if (!d.infinite()) {
    out["f_0"] = f_eval(m, 0.0, t);
    const auto mu_f = mu(m, t);
    if (!mu_f.infinite()) {
      out["kappa"] = kappa(m);
      const auto s2 = sigma2(m, t);
      if (!s2.infinite()) out["clt_variance"] = clt_params(m).variance;
      const auto c = prop2_c(m);
      out["small_p_constant"] = c.c;
      out["small_p_constant_converged"] = c.converged;
    }
  }
  const auto cdi = cdi_diagnostic(m, 4096);
  out["cdi_partial_sum_4096"] = cdi.partial_sum;
  out["cdi_verdict_heuristic"] = to_string(cdi.verdict);
  std::cout << out.dump(2) << '\n';
}

void cmd_rates(const std::string& spec, std::int64_t b, std::int64_t k) {
  const auto m = parse_measure(spec);
  if (b < 2) throw DomainError("need b >= 2");
  std::cout << "b,k,lambda_bk,rate,probability\n";
  if (k > 0) {
    if (k < 2 || k > b) throw DomainError("need 2 <= k <= b");
    const auto pmf = merger_size_pmf(m, b);
    const double lam = lambda_bk(m, b, k);
    const auto table = merger_rate_table(m, b);
    std::cout << b << ',' << k << ',' << format_number(lam) << ',' << format_number(table.rates[k - 2]) << ','
              << format_number(pmf[k - 2]) << '\n';
    return;
  }
  const auto table = merger_rate_table(m, b);
  for (std::int64_t j = 2; j <= b; ++j)
    std::cout << b << ',' << j << ',' << format_number(lambda_bk(m, b, j)) << ','
              << format_number(table.rates[j - 2]) << ',' << format_number(table.rates[j - 2] / table.total) << '\n';
}

void cmd_oracle(const std::string& spec, std::int64_t n_max) {
  const auto e = exact_expected_absorption(parse_measure(spec), n_max);
  std::cout << "n,expected_tau\n";
  for (std::int64_t n = 2; n <= n_max; ++n) std::cout << n << ',' << format_number(e[n]) << '\n';
}

void cmd_bn(const std::string& spec, const std::vector<double>& ns, int order) {
  const auto m = parse_measure(spec);
  const Asymptotics a(m);
  const auto c = prop2_c(m);
  if (!c.converged) std::cerr << "small-p constant does not settle: no sqrt(log n) centering; use b_n directly\n";
  std::cout << "n,log_n,kappa,b_n";
  for (int j = 0; j <= order; ++j) std::cout << ",term" << j;
  std::cout << ",c_estimate\n";
  for (double n : ns) {
    if (!(n >= 2)) throw DomainError("every n must be >= 2");
    const auto e = a.expansion(n, order);
    std::cout << format_number(n) << ',' << format_number(std::log(n)) << ',' << format_number(a.kappa()) << ','
              << format_number(a.b_n(n));
    for (double t : e.terms) std::cout << ',' << format_number(t);
    std::cout << ',' << (c.converged ? format_number(c.c) : std::string("diverged")) << '\n';
  }
}

void run_and_write(const ExperimentConfig& cfg, const std::string& out, bool force) {
  // Refuse before spending time on the simulation.
  if (std::filesystem::exists(out) && !std::filesystem::is_empty(out) && !force)
    throw Error("output directory " + out + " is not empty (use --force to overwrite)");
  const auto r = run_experiment(cfg);
  write_outputs(r, out, force);
  std::cout << r.summary.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lambda-coalescent absorption times: functionals, exact oracle, simulation and limit experiments"};
  app.require_subcommand(1);

  std::string spec, out;
  double tol = 1e-10;
  std::int64_t b = 0, k = 0, n_max = 0, n = 0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  std::vector<std::int64_t> grid;
  std::vector<double> n_list;
  std::optional<double> delta;
  double z = 0, x = 0;
  int order = 2;
  bool force = false, dump_path = false;

  auto* functionals = app.add_subcommand("functionals", "mu, sigma^2, dust, f(0), kappa and related constants");
  functionals->add_option("--measure", spec, "measure spec")->required();
  functionals->add_option("--tol", tol, "relative quadrature tolerance");

  auto* rates = app.add_subcommand("rates", "merger rates at b blocks");
  rates->add_option("--measure", spec)->required();
  rates->add_option("--b", b)->required();
  rates->add_option("--k", k, "single merger size");

  auto* oracle = app.add_subcommand("oracle", "exact E[tau_n] for n = 2..N");
  oracle->add_option("--measure", spec)->required();
  oracle->add_option("--n-max", n_max)->required();

  auto* simulate = app.add_subcommand("simulate", "absorption-time sample");
  simulate->add_option("--measure", spec)->required();
  simulate->add_option("--n", n)->required();
  simulate->add_option("--reps", reps)->required();
  simulate->add_option("--seed", seed)->required();
  simulate->add_option("--out", out)->required();
  simulate->add_flag("--force", force, "overwrite the output directory");
  simulate->add_flag("--dump-path", dump_path, "also write path.csv for replicate 0");

  std::vector<CLI::App*> grid_cmds;
  for (const char* name : {"lln", "clt", "coupling"}) {
    auto* c = app.add_subcommand(name, std::string(name) + " experiment over a grid of n");
    c->add_option("--measure", spec)->required();
    c->add_option("--n-grid", grid)->required()->delimiter(',');
    c->add_option("--reps", reps)->required();
    c->add_option("--seed", seed)->required();
    c->add_option("--delta", delta, "small-jump truncation level");
    c->add_option("--out", out)->required();
    c->add_flag("--force", force, "overwrite the output directory");
    grid_cmds.push_back(c);
  }

  auto* passage = app.add_subcommand("passage", "passage times of the drifted subordinator");
  passage->add_option("--measure", spec)->required();
  passage->add_option("--z", z)->required();
  passage->add_option("--x", x)->required();
  passage->add_option("--reps", reps)->required();
  passage->add_option("--seed", seed)->required();
  passage->add_option("--delta", delta, "small-jump truncation level");
  passage->add_option("--out", out)->required();
  passage->add_flag("--force", force, "overwrite the output directory");

  auto* bn = app.add_subcommand("bn", "centering constants b_n and their expansion");
  bn->add_option("--measure", spec)->required();
  bn->add_option("--n-list", n_list)->required()->delimiter(',');
  bn->add_option("--order", order);

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg;
    cfg.measure = spec;
    cfg.reps = reps;
    cfg.seed = seed;
    cfg.threads = default_threads();
    cfg.delta = delta;
    if (*functionals) {
      cmd_functionals(spec, tol);
    } else if (*rates) {
      cmd_rates(spec, b, k);
    } else if (*oracle) {
      cmd_oracle(spec, n_max);
    } else if (*bn) {
      cmd_bn(spec, n_list, order);
    } else if (*simulate) {
      cfg.kind = ExperimentKind::simulate;
      cfg.n_grid = {n};
      run_and_write(cfg, out, force);
      if (dump_path) {
        const auto path = CoalescentSimulator(parse_measure(spec)).simulate_path(n, seed, 0);
        SampleTable t;
        t.columns = {"t", "b_before", "k", "p"};
        for (const auto& e : path.events)
          t.rows.push_back({e.t, static_cast<double>(e.blocks_before), static_cast<double>(e.k), e.p});
        write_csv(t, std::filesystem::path(out) / "path.csv");
      }
    } else if (*passage) {
      cfg.kind = ExperimentKind::passage;
      cfg.z = z;
      cfg.x = x;
      run_and_write(cfg, out, force);
    } else {
      for (auto* c : grid_cmds) {
        if (!*c) continue;
        const std::string name = c->get_name();
        cfg.kind = name == "lln" ? ExperimentKind::lln : name == "clt" ? ExperimentKind::clt : ExperimentKind::coupling;
        cfg.n_grid = grid;
        run_and_write(cfg, out, force);
      }
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const SemanticError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
