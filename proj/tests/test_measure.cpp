#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "coalab/error.hpp"
#include "coalab/functionals.hpp"
#include "coalab/measure.hpp"
#include "doctest.h"

using namespace coalab;
using std::numbers::ln2;
using std::numbers::pi;

namespace {

// Independent oracle: ∫_0^1 g(p) Λ(dp) / p^2 with Λ(dp) = dens(u) dp, u = log(1/p),
// split at 1/2. The left half is mapped by p = e^{-u} and handled by exp_sinh
// (g_over_p_at_zero is the limit of g(p)/p once p underflows), the right half
// by tanh_sinh.
template <class G, class D>
double oracle_integral(G g, D dens, double g_over_p_at_zero) {
  boost::math::quadrature::exp_sinh<double> es;
  boost::math::quadrature::tanh_sinh<double> ts;
  const double left = es.integrate(
      [&](double u) {
        const double p = std::exp(-u);
        const double d = dens(u);
        if (d == 0.0) return 0.0;
        return (p > 1e-280 ? g(p) / p : g_over_p_at_zero) * d;
      },
      ln2, std::numeric_limits<double>::infinity());
  const double right = ts.integrate([&](double p) { return g(p) * dens(-std::log(p)) / (p * p); }, 0.5, 1.0);
  return left + right;
}

auto log_gamma_density(double gamma) {
  return [gamma](double u) { return std::pow(1.0 + u, -gamma); };
}

bool rel_close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::abs(b); }

std::string write_table(const std::string& body) {
  auto path = std::filesystem::temp_directory_path() / "coalab_table_density.txt";
  std::ofstream(path) << body;
  return path.string();
}

}  // namespace

TEST_CASE("parse_measure builds the documented examples") {
  auto half = parse_measure("atom:0.5:1.0");
  REQUIRE(half.interior_atoms().size() == 1);
  CHECK(half.interior_atoms()[0].location == 0.5);
  CHECK(half.interior_atoms()[0].mass == 1.0);
  CHECK(half.total_mass() == 1.0);

  auto kingman = parse_measure("atom:0:1.0");
  CHECK(kingman.atom_at_zero() == 1.0);
  CHECK(kingman.interior_atoms().empty());

  auto lg = parse_measure("density:log_gamma:1.5");
  REQUIRE(lg.densities().size() == 1);
  CHECK(std::get<LogGammaDensity>(lg.densities()[0]).gamma == 1.5);

  auto mixed = parse_measure("atom:0:0.3+density:uniform:1.0");
  CHECK(mixed.atom_at_zero() == 0.3);
  CHECK(mixed.total_mass() == doctest::Approx(1.3).epsilon(1e-12));

  auto exp_notation = parse_measure("atom:5e-1:1e+0+atom:1:2");
  CHECK(exp_notation.interior_atoms()[0].location == 0.5);
  CHECK(exp_notation.atom_at_one() == 2.0);
}

TEST_CASE("parse_measure reports syntax errors with a position") {
  try {
    parse_measure("atom:0.5:1+bogus");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position() == 11);
  }
  CHECK_THROWS_AS(parse_measure(""), ParseError);
  CHECK_THROWS_AS(parse_measure("atom:0.5"), ParseError);
  CHECK_THROWS_AS(parse_measure("atom:x:1"), ParseError);
  CHECK_THROWS_AS(parse_measure("density:cauchy:1"), ParseError);
  CHECK_THROWS_AS(parse_measure("atom:0.5:1+"), ParseError);
}

TEST_CASE("parse_measure rejects semantic violations") {
  CHECK_THROWS_AS(parse_measure("atom:1.5:1"), SemanticError);
  CHECK_THROWS_AS(parse_measure("atom:-0.1:1"), SemanticError);
  CHECK_THROWS_AS(parse_measure("atom:0.5:-1"), SemanticError);
  CHECK_THROWS_AS(parse_measure("atom:0.5:0"), SemanticError);
  CHECK_THROWS_AS(parse_measure("atom:0.5:1+atom:0.5:2"), SemanticError);
  CHECK_THROWS_AS(parse_measure("density:uniform:0"), SemanticError);
  CHECK_THROWS_AS(parse_measure("density:beta:0:1:1"), SemanticError);
  CHECK_THROWS_AS(parse_measure("density:table:/nonexistent/table.txt"), SemanticError);
  CHECK_THROWS_AS(parse_measure("density:table:" + write_table("0 0.5 0\n0.5 1 0\n")), SemanticError);
  CHECK_THROWS_AS(parse_measure("density:table:" + write_table("0 0.6 1\n0.5 1 1\n")), SemanticError);
}

TEST_CASE("total mass of densities matches independent quadrature") {
  for (double gamma : {-1.0, 0.0, 1.0, 1.5, 2.0, 3.0}) {
    boost::math::quadrature::exp_sinh<double> es;
    const double oracle =
        es.integrate([gamma](double u) { return std::pow(1.0 + u, -gamma) * std::exp(-u); }, 0.0,
                     std::numeric_limits<double>::infinity());
    auto m = parse_measure("density:log_gamma:" + std::to_string(gamma));
    CHECK(rel_close(m.total_mass(), oracle, 1e-9));
  }
  CHECK(rel_close(parse_measure("density:beta:0.5:2:3").total_mass(), 3.0, 1e-9));
  CHECK(rel_close(parse_measure("density:uniform:2.5").total_mass(), 2.5, 1e-12));
  auto table = parse_measure("density:table:" + write_table("# cells\n0.1, 0.2, 3\n0.5 1.0 2\n"));
  CHECK(rel_close(table.total_mass(), 0.3 + 1.0, 1e-10));
}

TEST_CASE("closed forms for the atom at one half") {
  auto m = parse_measure("atom:0.5:1.0");
  CHECK(rel_close(mu(m).value, 4 * ln2, 1e-12));
  CHECK(rel_close(sigma2(m).value, 4 * ln2 * ln2, 1e-12));
  CHECK(rel_close(dust_integral(m).value, 2.0, 1e-12));
  CHECK(rel_close(f_eval(m, 0.0), 2.0, 1e-12));
  CHECK(rel_close(f_eval(m, ln2), 1.5, 1e-12));
  for (double y : {-3.0, -1.0, 0.5, 2.0, 10.0}) {
    const double x = std::exp(y);
    CHECK(rel_close(f_eval(m, y), 4 * (1 - std::pow(2.0, -x)) / x, 1e-12));
  }
}

TEST_CASE("interior atoms give exact sums") {
  auto m = parse_measure("atom:0.2:0.7+atom:0.9:0.3");
  auto term = [](double p, double w, double g) { return w * g / (p * p); };
  const double mu_exact = term(0.2, 0.7, -std::log1p(-0.2)) + term(0.9, 0.3, -std::log1p(-0.9));
  const double s2_exact = term(0.2, 0.7, std::pow(std::log1p(-0.2), 2)) + term(0.9, 0.3, std::pow(std::log1p(-0.9), 2));
  CHECK(rel_close(mu(m).value, mu_exact, 1e-14));
  CHECK(rel_close(sigma2(m).value, s2_exact, 1e-14));
  CHECK(rel_close(dust_integral(m).value, 0.7 / 0.2 + 0.3 / 0.9, 1e-14));
}

TEST_CASE("atoms at the endpoints force infinite functionals") {
  auto kingman = parse_measure("atom:0:1.0");
  CHECK(mu(kingman).cause == InfinityCause::atom);
  CHECK(std::isinf(mu(kingman).value));
  CHECK(sigma2(kingman).infinite());
  CHECK(dust_integral(kingman).infinite());
  CHECK_THROWS_AS(f_eval(kingman, 0.0), DomainError);

  auto star = parse_measure("atom:1:1.0");
  CHECK(mu(star).cause == InfinityCause::atom);
  CHECK(sigma2(star).infinite());
  CHECK(dust_integral(star).value == 1.0);
  CHECK(f_eval(star, 2.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
}

TEST_CASE("uniform measure: divergence detection and the finite second moment") {
  auto bs = parse_measure("density:uniform:1.0");
  auto d = dust_integral(bs);
  CHECK(d.cause == InfinityCause::divergence);
  CHECK(mu(bs).cause == InfinityCause::divergence);
  // ∫ log²(1-p) dp / p² = π²/3.
  auto s2 = sigma2(bs);
  CHECK_FALSE(s2.infinite());
  CHECK(rel_close(s2.value, pi * pi / 3.0, 1e-9));
}

TEST_CASE("log_gamma functionals against independent quadrature") {
  SUBCASE("dust for gamma = 3/2 is exactly 2") {
    CHECK(rel_close(dust_integral(parse_measure("density:log_gamma:1.5")).value, 2.0, 1e-9));
  }
  for (double gamma : {1.5, 2.0, 3.0}) {
    auto m = parse_measure("density:log_gamma:" + std::to_string(gamma));
    auto dens = log_gamma_density(gamma);
    const double mu_oracle = oracle_integral([](double p) { return -std::log1p(-p); }, dens, 1.0);
    const double s2_oracle = oracle_integral([](double p) { return std::pow(std::log1p(-p), 2); }, dens, 0.0);
    const double dust_oracle = oracle_integral([](double p) { return p; }, dens, 1.0);
    CHECK(rel_close(mu(m).value, mu_oracle, 1e-8));
    CHECK(rel_close(sigma2(m).value, s2_oracle, 1e-8));
    CHECK(rel_close(dust_integral(m).value, dust_oracle, 1e-8));
    for (double y : {-2.0, 0.0, 1.0, 4.0}) {
      const double x = std::exp(y);
      const double f_oracle = oracle_integral([x](double p) { return -std::expm1(x * std::log1p(-p)) / x; }, dens, 1.0);
      CHECK(rel_close(f_eval(m, y), f_oracle, 1e-8));
    }
  }
  CHECK(mu(parse_measure("density:log_gamma:1.0")).cause == InfinityCause::divergence);
  CHECK(dust_integral(parse_measure("density:log_gamma:0.5")).cause == InfinityCause::divergence);
}

TEST_CASE("beta and table densities against independent quadrature") {
  auto m = parse_measure("density:beta:2.5:1.5:0.8");
  const double lbeta = std::lgamma(2.5) + std::lgamma(1.5) - std::lgamma(4.0);
  auto dens = [&](double u) { return 0.8 * std::exp(-1.5 * u + 0.5 * std::log1p(-std::exp(-u)) - lbeta); };
  CHECK(rel_close(mu(m).value, oracle_integral([](double p) { return -std::log1p(-p); }, dens, 1.0), 1e-8));
  CHECK(rel_close(dust_integral(m).value, oracle_integral([](double p) { return p; }, dens, 1.0), 1e-8));

  auto t = parse_measure("density:table:" + write_table("0.1 0.3 2\n0.6 0.8 1\n"));
  // ∫ dp/p over the cells.
  CHECK(rel_close(dust_integral(t).value, 2 * std::log(3.0) + std::log(0.8 / 0.6), 1e-10));
  // ∫ -log(1-p)/p² dp has antiderivative log(1-p)/p - log(1-p) + log p ... checked numerically.
  boost::math::quadrature::tanh_sinh<double> ts;
  auto g = [](double p) { return -std::log1p(-p) / (p * p); };
  const double mu_oracle = 2 * ts.integrate(g, 0.1, 0.3) + ts.integrate(g, 0.6, 0.8);
  CHECK(rel_close(mu(t).value, mu_oracle, 1e-10));
}

TEST_CASE("f(0) equals the dust integral and f decreases") {
  std::vector<std::string> specs = {"atom:0.5:1.0", "density:log_gamma:2", "density:log_gamma:1.5",
                                    "density:beta:2:1:1", "atom:0.3:1+density:log_gamma:3",
                                    "atom:1:0.5+density:beta:3:2:1"};
  for (const auto& spec : specs) {
    CAPTURE(spec);
    auto m = parse_measure(spec);
    DriftFunction f(m);
    const double f0 = f(0.0);
    CHECK(rel_close(f0, f.dust(), 1e-9));
    double prev = f(-4.0);
    for (double y = -3.5; y <= 40.0; y += 0.5) {
      const double v = f(y);
      CHECK(v > 0.0);
      CHECK(v < prev);
      prev = v;
    }
  }
}

TEST_CASE("f vanishes at infinity") {
  // Mass bounded away from 0: f(40) is below 1e-3 f(0).
  for (const char* spec : {"atom:0.5:1.0", "density:beta:2:1:1", "atom:1:0.5+density:beta:3:2:1", "atom:0.01:1"}) {
    CAPTURE(spec);
    auto m = parse_measure(spec);
    CHECK(f_eval(m, 40.0) < 1e-3 * f_eval(m, 0.0));
  }
  // For (1 + log 1/p)^-gamma dp the decay is only polynomial,
  // f(y) ~ (1 + y)^(1 - gamma) / (gamma - 1).
  for (double gamma : {1.5, 2.0, 3.0}) {
    CAPTURE(gamma);
    auto m = parse_measure("density:log_gamma:" + std::to_string(gamma));
    for (double y : {40.0, 400.0}) {
      const double asymptote = std::pow(1.0 + y, 1.0 - gamma) / (gamma - 1.0);
      CHECK(f_eval(m, y) == doctest::Approx(asymptote).epsilon(0.05));
    }
  }
}

TEST_CASE("small_p_tail examples") {
  auto lg15 = parse_measure("density:log_gamma:1.5");
  auto lg2 = parse_measure("density:log_gamma:2");
  for (double L : {10.0, 100.0, 1000.0, 10000.0}) {
    CHECK(rel_close(small_p_tail_log(lg15, L), std::sqrt(L) * 2.0 / std::sqrt(1.0 + L), 1e-9));
    CHECK(rel_close(small_p_tail_log(lg2, L), std::sqrt(L) / (1.0 + L), 1e-9));
  }
  CHECK(rel_close(small_p_tail(lg15, std::exp(-10.0)), std::sqrt(10.0) * 2.0 / std::sqrt(11.0), 1e-9));
  CHECK(small_p_tail(parse_measure("atom:0.5:1.0"), 0.1) == 0.0);
  CHECK(small_p_tail(parse_measure("atom:0.05:1.0"), 0.1) == doctest::Approx(std::sqrt(std::log(10.0)) * 20.0));
  CHECK_THROWS_AS(small_p_tail(parse_measure("atom:0:1"), 0.1), DomainError);
  CHECK_THROWS_AS(small_p_tail(lg15, 1.5), DomainError);
}

TEST_CASE("halving the tolerance moves values by less than the error estimate") {
  for (const char* spec : {"density:log_gamma:2", "density:beta:2:2:1", "density:log_gamma:3"}) {
    CAPTURE(spec);
    auto m = parse_measure(spec);
    quad::Tolerance tol{1e-8, 1e-10};
    for (auto fn : {&mu, &sigma2, &dust_integral}) {
      auto a = fn(m, tol);
      auto b = fn(m, tol.halved());
      CHECK(std::abs(a.value - b.value) <= std::max(a.abs_error, 1e-15 * std::abs(a.value)));
    }
  }
}

TEST_CASE("drift table matches direct quadrature") {
  for (const char* spec : {"atom:0.5:1.0", "density:log_gamma:2"}) {
    CAPTURE(spec);
    auto m = parse_measure(spec);
    DriftTable table(m, 15.0);
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> ud(-5.0, 15.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const double y = ud(gen);
      const double exact = table.exact(y);
      worst = std::max(worst, std::abs(table(y) - exact) / exact);
    }
    CHECK(worst < 1e-8);
    CHECK(table(-50.0) == table.floor_value());
    CHECK(table(20.0) == doctest::Approx(table.exact(20.0)).epsilon(1e-12));
  }
}

TEST_CASE("fingerprint identifies the measure, not its spelling") {
  CHECK(parse_measure("atom:0.5:1").fingerprint() == parse_measure("atom:5e-1:1.0").fingerprint());
  CHECK(parse_measure("atom:0.5:1").fingerprint() != parse_measure("atom:0.5:2").fingerprint());
  CHECK(parse_measure("density:log_gamma:2").fingerprint() != parse_measure("density:log_gamma:1.5").fingerprint());
}
