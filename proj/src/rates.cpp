#include "coalab/rates.hpp"

#include <cmath>
#include <numeric>

#include "coalab/error.hpp"

namespace coalab {

namespace {

double log_choose(double n, double k) { return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1); }

// Kernel for C p^(a) (1-p)^(c) with a, c >= 0 integers (as doubles), i.e.
// g(p)/p^2 for g = C p^(a+2) (1-p)^c. Peak of the s-integrand marked.
Kernel power_kernel(double log_c, double a, double c) {
  Kernel k;
  k.weight = [=](const PPoint& pt) { return std::exp(log_c + a * pt.log_p + c * pt.log_q); };
  k.line = [=](const PPoint& pt, double s) {
    return s <= 0.0 ? std::exp(log_c + (a + 1) * pt.log_p + c * pt.log_q)
                    : std::exp(log_c + a * pt.log_p + (c + 1) * pt.log_q);
  };
  const double C = std::exp(log_c);
  k.at_zero = a == 0.0 ? C : 0.0;
  k.at_one = c == 0.0 ? C : 0.0;
  const double peak = s_of_p((a + 1) / (a + c + 1));
  if (std::isfinite(peak))
    for (double d : {-6.0, -2.0, -0.5, 0.0, 0.5, 2.0, 6.0}) k.breakpoints.push_back(peak + d);
  return k;
}

// Features of h_b and γ-type integrands sit near p = 1/b.
std::vector<double> near_inverse_b(double b) {
  const double s0 = std::log(2.0 / b);
  return {s0 - 5.0, s0 - 1.0, s0, s0 + 1.0, s0 + 5.0};
}

double required(const Functional& f) {
  if (f.infinite()) throw DomainError(f.kind + " is infinite");
  return f.value;
}

void check_bk(std::int64_t b, std::int64_t k) {
  if (b < 2) throw DomainError("need b >= 2");
  if (k < 2 || k > b) throw DomainError("need 2 <= k <= b");
}

}  // namespace

double h_over_p2(const PPoint& pt, double b) {
  const double b1 = b - 1.0;
  const double x = b1 * pt.p;
  if (x < 1e-3) {
    // A/p^2 where A = (b-1) log(1-p) + log(1 + (b-1)p) = Σ_{j>=2} [(-1)^(j+1) x^j - (b-1) p^j]/j.
    double a_over_p2 = 0.0;
    double xpow = 1.0, ppow = 1.0;  // x^(j-2), p^(j-2)
    for (int j = 2; j < 40; ++j) {
      const double sign = (j % 2 == 1) ? 1.0 : -1.0;
      const double term = (sign * b1 * b1 * xpow - b1 * ppow) / j;
      a_over_p2 += term;
      xpow *= x;
      ppow *= pt.p;
      // Odd terms vanish at b = 2, so bound the next term instead of testing this one.
      if ((b1 * b1 * xpow + b1 * ppow) / (j + 1) <= 1e-17 * std::abs(a_over_p2)) break;
    }
    const double A = a_over_p2 * pt.p * pt.p;
    const double ratio = A == 0.0 ? 1.0 : std::expm1(A) / A;
    return -a_over_p2 * ratio;
  }
  const double A = b1 * pt.log_q + std::log1p(x);
  return -std::expm1(A) / (pt.p * pt.p);
}

double gamma_weight(const PPoint& pt, double b) {
  const double y = b * pt.log_q;
  if (b * pt.p < 1e-3) {
    // (e^y - 1 - y)/p^2 + (y + b p)/p^2, both by series.
    const double y_over_p = -b * neg_log_q_over_p(pt);
    double e_part = 0.0, term = 0.5;
    for (int j = 2; j < 40; ++j) {
      e_part += term;
      term *= y / (j + 1);
      if (std::abs(term) <= 1e-17 * std::abs(e_part)) break;
    }
    e_part *= y_over_p * y_over_p;
    double l_part = 0.0, ppow = 1.0;
    for (int j = 2; j < 60; ++j) {
      const double t = ppow / j;
      l_part += t;
      if (t <= 1e-17 * l_part) break;
      ppow *= pt.p;
    }
    return e_part - b * l_part;
  }
  return (std::expm1(y) + b * pt.p) / (pt.p * pt.p);
}

double lambda_bk(const LambdaMeasure& m, std::int64_t b, std::int64_t k, quad::Tolerance tol) {
  check_bk(b, k);
  auto kern = power_kernel(0.0, static_cast<double>(k - 2), static_cast<double>(b - k));
  return required(integrate_measure(m, kern, "lambda_bk", tol));
}

double total_merger_rate(const LambdaMeasure& m, std::int64_t b, quad::Tolerance tol) {
  check_bk(b, 2);
  const double bd = static_cast<double>(b);
  Kernel k;
  k.weight = [bd](const PPoint& pt) { return h_over_p2(pt, bd); };
  k.line = [bd](const PPoint& pt, double s) { return h_over_p2(pt, bd) * jacobian(pt, s); };
  k.at_zero = bd * (bd - 1.0) / 2.0;
  k.at_one = 1.0;
  k.breakpoints = near_inverse_b(bd);
  return required(integrate_measure(m, k, "total_merger_rate", tol));
}

MergerRateTable merger_rate_table(const LambdaMeasure& m, std::int64_t b, quad::Tolerance tol) {
  check_bk(b, 2);
  MergerRateTable t;
  t.b = b;
  t.rates.resize(static_cast<std::size_t>(b - 1));
  const double bd = static_cast<double>(b);
  for (std::int64_t k = 2; k <= b; ++k) {
    const double kd = static_cast<double>(k);
    auto kern = power_kernel(log_choose(bd, kd), kd - 2.0, bd - kd);
    t.rates[static_cast<std::size_t>(k - 2)] = required(integrate_measure(m, kern, "weighted_rate", tol));
  }
  t.total = std::accumulate(t.rates.begin(), t.rates.end(), 0.0);
  return t;
}

std::vector<double> merger_size_pmf(const LambdaMeasure& m, std::int64_t b, quad::Tolerance tol) {
  auto t = merger_rate_table(m, b, tol);
  if (!(t.total > 0.0)) throw DomainError("total merger rate is zero");
  for (auto& r : t.rates) r /= t.total;
  return t.rates;
}

std::vector<double> step_down_row(const std::vector<double>& above) {
  // above has entries k = 2..b+1 (size b); result has k = 2..b (size b-1).
  const std::size_t size = above.size();
  const double b1 = static_cast<double>(size + 1);  // b + 1
  std::vector<double> row(size - 1);
  for (std::size_t i = 0; i + 1 < size; ++i) {
    const double k = static_cast<double>(i + 2);
    row[i] = above[i] * (b1 - k) / b1 + above[i + 1] * (k + 1) / b1;
  }
  return row;
}

double gamma_b(const LambdaMeasure& m, std::int64_t b, quad::Tolerance tol) {
  check_bk(b, 2);
  const double bd = static_cast<double>(b);
  Kernel k;
  k.weight = [bd](const PPoint& pt) { return gamma_weight(pt, bd); };
  k.line = [bd](const PPoint& pt, double s) { return gamma_weight(pt, bd) * jacobian(pt, s); };
  k.at_zero = bd * (bd - 1.0) / 2.0;
  k.at_one = bd - 1.0;
  k.breakpoints = near_inverse_b(bd);
  return required(integrate_measure(m, k, "gamma_b", tol));
}

const char* to_string(CdiVerdict v) {
  switch (v) {
    case CdiVerdict::comes_down: return "comes_down";
    case CdiVerdict::stays_infinite: return "stays_infinite";
    case CdiVerdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

CdiDiagnostic cdi_diagnostic(const LambdaMeasure& m, std::int64_t B, quad::Tolerance tol) {
  if (B < 2) throw DomainError("need B >= 2");
  CdiDiagnostic out;
  std::vector<double> g(static_cast<std::size_t>(B + 1), 0.0);
  for (std::int64_t b = 2; b <= B; ++b) {
    g[static_cast<std::size_t>(b)] = gamma_b(m, b, tol);
    out.partial_sum += 1.0 / g[static_cast<std::size_t>(b)];
  }
  for (std::int64_t b = B / 2; b >= 2 && out.exponents.size() < 10; b /= 2)
    out.exponents.push_back(std::log2(g[static_cast<std::size_t>(2 * b)] / g[static_cast<std::size_t>(b)]));

  if (out.exponents.size() >= 3) {
    const double lo = std::min({out.exponents[0], out.exponents[1], out.exponents[2]});
    const double hi = std::max({out.exponents[0], out.exponents[1], out.exponents[2]});
    if (lo >= 1.5)
      out.verdict = CdiVerdict::comes_down;
    else if (hi <= 1.25)
      out.verdict = CdiVerdict::stays_infinite;
  }
  return out;
}

}  // namespace coalab
