#include "coalab/asymptotics.hpp"

#include <cmath>
#include <limits>

#include "coalab/error.hpp"
#include "coalab/quadrature.hpp"

namespace coalab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double finite_mu(const LambdaMeasure& m) {
  const auto v = mu(m);
  if (v.infinite()) throw DomainError("mu is infinite");
  return v.value;
}

}  // namespace

Asymptotics::Asymptotics(const LambdaMeasure& m) : f_(m), mu_(finite_mu(m)) {
  const double half = 0.5 * mu_;
  if (f_(0.0) <= half) {
    kappa_ = 0.0;
    return;
  }
  double lo = 0.0, hi = 1.0;
  while (f_(hi) > half) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw DomainError("f stays above mu/2");
  }
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    (f_(mid) > half ? lo : hi) = mid;
  }
  kappa_ = hi;
}

template <class G>
double Asymptotics::integrate_y(G&& g, double a, double b) const {
  if (!std::isfinite(a) || !std::isfinite(b)) throw DomainError("y-integral needs finite limits");
  if (!(b > a)) return 0.0;
  // Dyadic panels: the integrands vary on the scale of y itself.
  std::vector<double> edges{a};
  for (double e = 1.0; e < b; e *= 2.0)
    if (e > a) edges.push_back(e);
  edges.push_back(b);
  const quad::Tolerance tol{1e-11, 1e-13};
  double sum = 0.0, err = 0.0;
  bool ok = true;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const auto r = quad::gauss_kronrod(g, edges[i], edges[i + 1], tol);
    sum += r.value;
    err += r.error;
    ok = ok && r.converged;
  }
  if (!ok && err > 1e-9 * std::max(1.0, std::abs(sum))) throw QuadratureError("y-integral did not converge", sum, err);
  return sum;
}

double Asymptotics::beta(double z) const {
  return integrate_y([&](double y) { return 1.0 / (mu_ - f_(y)); }, kappa_, z);
}

double Asymptotics::centered_beta(double L) const {
  if (L <= kappa_) return -L / mu_;
  return integrate_y([&](double y) {
           const double fy = f_(y);
           return fy / (mu_ * (mu_ - fy));
         },
         kappa_, L) -
         kappa_ / mu_;
}

double Asymptotics::flow_beta(double z) const {
  auto g = [&](double y) { return 1.0 / (mu_ - std::min(f_(y), 0.5 * mu_)); };
  return z >= 0.0 ? integrate_y(g, 0.0, z) : -integrate_y(g, z, 0.0);
}

BnExpansion Asymptotics::expansion_log(double L, int order) const {
  if (order < 0) throw DomainError("expansion order must be >= 0");
  BnExpansion out;
  out.terms.push_back(L / mu_);
  for (int j = 1; j <= order + 1; ++j) {
    const double integral = integrate_y([&](double y) { return std::pow(std::min(f_(y), 0.5 * mu_), j); }, 0.0, L);
    if (j <= order)
      out.terms.push_back(integral / std::pow(mu_, j + 1));
    else
      out.remainder_bound = 2.0 * integral / std::pow(mu_, j + 1);
  }
  // For L < κ, b_n is 0 by convention while the expansion is not; the offset
  // then absorbs the whole difference.
  out.kappa_offset = -2.0 * std::min(L, kappa_) / mu_;
  return out;
}

double kappa(const LambdaMeasure& m) { return Asymptotics(m).kappa(); }

double b_n(const LambdaMeasure& m, double n) { return Asymptotics(m).b_n(n); }

BnExpansion bn_expansion(const LambdaMeasure& m, double n, int order) { return Asymptotics(m).expansion(n, order); }

Prop2Estimate prop2_c(const LambdaMeasure& m) {
  Prop2Estimate out;
  for (double L = 10.0; L <= 1e6 * 1.0001; L *= 10.0) {
    out.L.push_back(L);
    out.values.push_back(small_p_tail_log(m, L));
  }
  const std::size_t n = out.values.size();
  const double s4 = out.values[n - 3], s5 = out.values[n - 2], s6 = out.values[n - 1];
  const double d1 = s5 - s4, d2 = s6 - s5;
  const double denom = d2 - d1;
  out.c = (std::abs(denom) > 1e-300 && std::abs(d2) > 0.0) ? s6 - d2 * d2 / denom : s6;
  // Aitken can overshoot when the differences do not shrink geometrically.
  if (!std::isfinite(out.c) || std::abs(out.c - s6) > std::abs(d2) * 10.0) out.c = s6;
  out.converged = std::abs(d2) <= 0.05 * std::max(std::abs(s6), 1.0);
  return out;
}

CltParams clt_params(const LambdaMeasure& m) {
  const auto mu_f = mu(m);
  const auto s2 = sigma2(m);
  if (mu_f.infinite()) throw DomainError("mu is infinite");
  if (s2.infinite()) throw DomainError("sigma2 is infinite");
  return {mu_f.value, s2.value, s2.value / (mu_f.value * mu_f.value * mu_f.value)};
}

AsymptoticProfile asymptotic_profile(const LambdaMeasure& m) {
  AsymptoticProfile out;
  const auto mu_f = mu(m), s2 = sigma2(m), d = dust_integral(m);
  out.mu = mu_f.infinite() ? kInf : mu_f.value;
  out.sigma2 = s2.infinite() ? kInf : s2.value;
  out.dust = d.infinite() ? kInf : d.value;
  out.kappa = (!mu_f.infinite() && !d.infinite()) ? kappa(m) : kNaN;
  out.clt_variance = (!mu_f.infinite() && !s2.infinite()) ? out.sigma2 / (out.mu * out.mu * out.mu) : kNaN;
  if (!d.infinite()) out.c_estimate = prop2_c(m);
  return out;
}

}  // namespace coalab
