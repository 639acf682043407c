#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "coalab/error.hpp"
#include "coalab/rng.hpp"
#include "coalab/stats.hpp"
#include "doctest.h"

using namespace coalab;

namespace {

// Kolmogorov CDF through the theta-function form, a series independent of
// the one used for the survival function.
double kolmogorov_cdf_theta(double t) {
  double sum = 0.0;
  for (int k = 1; k <= 50; ++k) {
    const double j = 2.0 * k - 1.0;
    sum += std::exp(-j * j * std::numbers::pi * std::numbers::pi / (8.0 * t * t));
  }
  return std::sqrt(2.0 * std::numbers::pi) / t * sum;
}

}  // namespace

TEST_CASE("summary and percentiles") {
  std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  auto s = summarize(x);
  CHECK(s.mean == 5.5);
  CHECK(s.variance == doctest::Approx(55.0 / 6.0));
  CHECK(s.std_error == doctest::Approx(std::sqrt(55.0 / 60.0)));
  CHECK(s.min == 1);
  CHECK(s.max == 10);
  // R: quantile(1:10, c(0, .25, .5, .9, 1)) = 1, 3.25, 5.5, 9.1, 10.
  CHECK(percentile(x, 0.0) == 1.0);
  CHECK(percentile(x, 0.25) == doctest::Approx(3.25));
  CHECK(percentile(x, 0.5) == doctest::Approx(5.5));
  CHECK(percentile(x, 0.9) == doctest::Approx(9.1));
  CHECK(percentile(x, 1.0) == 10.0);
  CHECK_THROWS_AS(summarize({1.0}), DomainError);
  CHECK_THROWS_AS(percentile({}, 0.5), DomainError);
}

TEST_CASE("Kolmogorov series") {
  for (double t : {0.4, 0.6, 0.8, 1.0, 1.36, 1.63, 2.5})
    CHECK(kolmogorov_survival(t) == doctest::Approx(1.0 - kolmogorov_cdf_theta(t)).epsilon(1e-9));
  CHECK(kolmogorov_survival(1.3581) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(kolmogorov_survival(0.0) == 1.0);
}

TEST_CASE("normal quantile") {
  boost::math::normal n;
  for (double p : {1e-10, 1e-4, 0.02, 0.3, 0.5, 0.77, 0.99, 1 - 1e-9})
    CHECK(normal_quantile(p) == doctest::Approx(boost::math::quantile(n, p)).epsilon(1e-12));
}

TEST_CASE("KS test against the normal") {
  CHECK_THROWS_AS(ks_normal({}, 1.0), DomainError);
  CHECK_THROWS_AS(ks_normal({0.1}, 0.0), DomainError);
  CHECK(ks_normal(std::vector<double>(100, 3.0), 1.0).d >= 0.5);
  CHECK(ks_normal(std::vector<double>(100, 0.0), 1.0).d >= 0.5);

  const double v = 0.09;
  int passed = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Rng rng(555, trial);
    std::normal_distribution<double> dist(0.0, std::sqrt(v));
    std::vector<double> x(10000);
    for (auto& e : x) e = dist(rng);
    passed += ks_normal(x, v).p_value > 0.01;
  }
  CHECK(passed >= 95);

  Rng rng(9);
  std::normal_distribution<double> wide(0.0, 1.2);
  std::vector<double> x(5000);
  for (auto& e : x) e = wide(rng);
  CHECK(ks_normal(x, 1.0).p_value < 1e-4);
}
