#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <numbers>

#include "coalab/error.hpp"
#include "coalab/measure.hpp"
#include "coalab/rates.hpp"
#include "doctest.h"

using namespace coalab;

namespace {

using big = boost::multiprecision::cpp_bin_float_50;

big h_oracle(double p, double b) {
  const big P = p, Q = big(1) - P, B = b;
  return (1 - pow(Q, B) - B * P * pow(Q, B - 1)) / (P * P);
}

big gamma_oracle(double p, double b) {
  const big P = p, Q = big(1) - P, B = b;
  return (B * P - 1 + pow(Q, B)) / (P * P);
}

double beta_fn(double a, double b) { return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b)); }

double harmonic(int n) {
  double h = 0;
  for (int k = 1; k <= n; ++k) h += 1.0 / k;
  return h;
}

const std::vector<std::string> kBuiltins = {"atom:0:1",          "atom:1:1",          "atom:0.5:1",
                                            "density:uniform:1", "density:log_gamma:2", "density:beta:2:3:1",
                                            "atom:0:0.3+density:uniform:1"};

}  // namespace

TEST_CASE("h_b(p)/p^2 is accurate from p = 1e-300 to 1 - 1e-12 and b up to 1e8") {
  for (double b : {2.0, 3.0, 10.0, 1e3, 1e6, 1e8}) {
    for (double p : {1e-15, 1e-12, 1e-10, 1.1e-9, 1e-7, 3e-6, 1e-4, 1e-3, 0.01, 0.3, 0.5, 0.9, 0.999999}) {
      CAPTURE(b);
      CAPTURE(p);
      const double exact = static_cast<double>(h_oracle(p, b));
      CHECK(h_over_p2(point_at_p(p), b) == doctest::Approx(exact).epsilon(1e-11));
      const double g_exact = static_cast<double>(gamma_oracle(p, b));
      CHECK(gamma_weight(point_at_p(p), b) == doctest::Approx(g_exact).epsilon(1e-11));
    }
    // Limit C(b,2) once p underflows.
    CHECK(h_over_p2(point_at_s(-800.0), b) == doctest::Approx(b * (b - 1) / 2).epsilon(1e-14));
    CHECK(gamma_weight(point_at_s(-800.0), b) == doctest::Approx(b * (b - 1) / 2).epsilon(1e-14));
  }
}

TEST_CASE("lambda_bk examples") {
  auto kingman = parse_measure("atom:0:1.0");
  CHECK(lambda_bk(kingman, 10, 2) == 1.0);
  CHECK(lambda_bk(kingman, 10, 3) == 0.0);
  auto bs = parse_measure("density:uniform:1");
  CHECK(lambda_bk(bs, 3, 2) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(lambda_bk(bs, 3, 3) == doctest::Approx(0.5).epsilon(1e-10));
  for (auto [b, k] : {std::pair{10, 4}, {50, 2}, {50, 25}, {1000, 2}, {1000, 17}, {1000, 1000}}) {
    CAPTURE(b);
    CAPTURE(k);
    CHECK(lambda_bk(bs, b, k) == doctest::Approx(beta_fn(k - 1, b - k + 1)).epsilon(1e-8));
  }
  auto half = parse_measure("atom:0.5:1.0");
  CHECK(lambda_bk(half, 4, 3) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(lambda_bk(half, 4, 5), DomainError);
  CHECK_THROWS_AS(lambda_bk(half, 4, 1), DomainError);
}

TEST_CASE("total_merger_rate examples") {
  CHECK(total_merger_rate(parse_measure("atom:0:1"), 4) == 6.0);
  CHECK(total_merger_rate(parse_measure("atom:0.5:1"), 3) == doctest::Approx(2.0).epsilon(1e-15));
  for (int b : {2, 5, 100}) CHECK(total_merger_rate(parse_measure("atom:1:1"), b) == 1.0);
  auto bs = parse_measure("density:uniform:1");
  for (int b : {2, 7, 100, 10000}) CHECK(total_merger_rate(bs, b) == doctest::Approx(b - 1.0).epsilon(1e-9));
}

TEST_CASE("merger_size_pmf examples") {
  auto k5 = merger_size_pmf(parse_measure("atom:0:1"), 5);
  CHECK(k5[0] == 1.0);
  for (std::size_t i = 1; i < k5.size(); ++i) CHECK(k5[i] == 0.0);
  auto h3 = merger_size_pmf(parse_measure("atom:0.5:1"), 3);
  REQUIRE(h3.size() == 2);
  CHECK(h3[0] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(h3[1] == doctest::Approx(0.25).epsilon(1e-14));
  auto s7 = merger_size_pmf(parse_measure("atom:1:1"), 7);
  CHECK(s7.back() == 1.0);
}

TEST_CASE("rate table invariants on built-in measures") {
  for (const auto& spec : kBuiltins) {
    CAPTURE(spec);
    auto m = parse_measure(spec);
    for (int b = 2; b <= 12; ++b) {
      auto t = merger_rate_table(m, b);
      double sum = 0.0;
      for (double r : t.rates) {
        CHECK(r >= 0.0);
        sum += r;
      }
      CHECK(t.total == doctest::Approx(sum).epsilon(1e-12));
      CHECK(t.total > 0.0);
      CHECK(total_merger_rate(m, b) == doctest::Approx(sum).epsilon(1e-8));
      auto pmf = merger_size_pmf(m, b);
      double psum = 0.0;
      for (double p : pmf) {
        CHECK(p >= 0.0);
        psum += p;
      }
      CHECK(psum == doctest::Approx(1.0).epsilon(1e-9));
    }
    for (auto [b, k] : {std::pair{3, 2}, {5, 3}, {8, 8}, {20, 2}, {20, 11}, {60, 30}}) {
      CHECK(lambda_bk(m, b + 1, k) <= lambda_bk(m, b, k) * (1 + 1e-12) + 1e-300);
    }
    for (int b = 2; b <= 100; ++b) CHECK(gamma_b(m, b) >= total_merger_rate(m, b) * (1 - 1e-12));
  }
}

TEST_CASE("stepping a weighted rate row down matches direct quadrature") {
  for (const char* spec : {"density:uniform:1", "atom:0.3:1+atom:0:0.5", "density:log_gamma:2"}) {
    CAPTURE(spec);
    auto m = parse_measure(spec);
    auto row20 = merger_rate_table(m, 20).rates;
    auto row19 = step_down_row(row20);
    auto direct = merger_rate_table(m, 19).rates;
    REQUIRE(row19.size() == direct.size());
    for (std::size_t i = 0; i < direct.size(); ++i)
      CHECK(row19[i] == doctest::Approx(direct[i]).epsilon(1e-9).scale(1e-300));
  }
}

TEST_CASE("gamma_b closed forms") {
  auto bs = parse_measure("density:uniform:1");
  for (int b : {2, 10, 500}) CHECK(gamma_b(bs, b) == doctest::Approx(b * (harmonic(b) - 1)).epsilon(1e-9));
  CHECK(gamma_b(parse_measure("atom:0:1"), 10) == 45.0);
  CHECK(gamma_b(parse_measure("atom:1:1"), 10) == 9.0);
}

TEST_CASE("coming-down diagnostic") {
  auto kingman = cdi_diagnostic(parse_measure("atom:0:1"), 1000);
  CHECK(kingman.partial_sum == doctest::Approx(2.0 * (1.0 - 1.0 / 1000)).epsilon(1e-12));
  CHECK(kingman.verdict == CdiVerdict::comes_down);
  CHECK(cdi_diagnostic(parse_measure("atom:0.5:1"), 1000).verdict == CdiVerdict::stays_infinite);
  CHECK(cdi_diagnostic(parse_measure("density:uniform:1"), 1000).verdict == CdiVerdict::stays_infinite);
  // Beta(a, 2 - a) with a = 0.2 comes down; γ_b grows like b^(2-a).
  CHECK(cdi_diagnostic(parse_measure("density:beta:0.2:1.8:1"), 1000).verdict == CdiVerdict::comes_down);
}
