#include "coalab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "coalab/error.hpp"

namespace coalab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Functional infinite(const std::string& kind, InfinityCause cause) {
  Functional f;
  f.kind = kind;
  f.value = kInf;
  f.abs_error = 0.0;
  f.cause = cause;
  return f;
}

}  // namespace

Functional integrate_measure(const LambdaMeasure& m, const Kernel& k, const std::string& kind,
                             quad::Tolerance tol) {
  double atoms = 0.0;
  const double a0 = std::isinf(k.s_lo) ? m.atom_at_zero() : 0.0;
  const double a1 = std::isinf(k.s_hi) ? m.atom_at_one() : 0.0;
  for (auto [mass, limit] : {std::pair{a0, k.at_zero}, std::pair{a1, k.at_one}}) {
    if (mass <= 0.0) continue;
    if (std::isinf(limit)) return infinite(kind, InfinityCause::atom);
    atoms += mass * limit;
  }
  for (const auto& a : m.interior_atoms()) {
    const double s = s_of_p(a.location);
    if (s >= k.s_lo && s < k.s_hi) atoms += a.mass * k.weight(point_at_p(a.location));
  }

  Functional out;
  out.kind = kind;
  out.value = atoms;
  if (!m.has_density()) return out;

  std::vector<double> breaks = m.breakpoints();
  breaks.insert(breaks.end(), k.breakpoints.begin(), k.breakpoints.end());
  auto integrand = [&](double s) {
    const auto pt = point_at_s(s);
    const double d = m.density(pt);
    return d == 0.0 ? 0.0 : d * k.line(pt, s);
  };
  auto r = quad::integrate_range(integrand, k.s_lo, k.s_hi, std::move(breaks), tol);
  if (r.status == quad::TailStatus::diverged) return infinite(kind, InfinityCause::divergence);
  if (r.status == quad::TailStatus::failed) throw QuadratureError(kind + " did not reach tolerance", atoms + r.value, r.error);
  out.value += r.value;
  out.abs_error = r.error;
  return out;
}

Functional mu(const LambdaMeasure& m, quad::Tolerance tol) {
  Kernel k;
  k.weight = [](const PPoint& pt) { return -pt.log_q / (pt.p * pt.p); };
  k.line = [](const PPoint& pt, double s) {
    return s <= 0.0 ? neg_log_q_over_p(pt) : -pt.log_q * pt.q / (pt.p * pt.p);
  };
  k.at_zero = kInf;
  k.at_one = kInf;
  return integrate_measure(m, k, "mu", tol);
}

Functional sigma2(const LambdaMeasure& m, quad::Tolerance tol) {
  Kernel k;
  k.weight = [](const PPoint& pt) { return pt.log_q * pt.log_q / (pt.p * pt.p); };
  k.line = [](const PPoint& pt, double s) {
    return s <= 0.0 ? neg_log_q_over_p(pt) * -pt.log_q : pt.log_q * pt.log_q * pt.q / (pt.p * pt.p);
  };
  k.at_zero = kInf;
  k.at_one = kInf;
  return integrate_measure(m, k, "sigma2", tol);
}

Functional dust_integral(const LambdaMeasure& m, quad::Tolerance tol) {
  Kernel k;
  k.weight = [](const PPoint& pt) { return 1.0 / pt.p; };
  k.line = [](const PPoint& pt, double s) { return s <= 0.0 ? 1.0 : pt.q / pt.p; };
  k.at_zero = kInf;
  k.at_one = 1.0;
  return integrate_measure(m, k, "dust", tol);
}

Functional total_mass(const LambdaMeasure& m, quad::Tolerance tol) {
  Kernel k;
  k.weight = [](const PPoint&) { return 1.0; };
  k.line = [](const PPoint& pt, double s) { return jacobian(pt, s); };
  k.at_zero = 1.0;
  k.at_one = 1.0;
  return integrate_measure(m, k, "total_mass", tol);
}

Functional f_functional(const LambdaMeasure& m, double y, quad::Tolerance tol) {
  // Works with t = e^y (-log(1-p)) and e^-y separately so that y may exceed
  // the double range of e^y.
  auto t_of = [y](const PPoint& pt) { return std::exp(y + pt.log_p) * neg_log_q_over_p(pt); };
  const double inv_x = std::exp(-y);
  Kernel k;
  k.weight = [=](const PPoint& pt) { return -std::expm1(-t_of(pt)) * inv_x / (pt.p * pt.p); };
  k.line = [=](const PPoint& pt, double s) {
    if (s <= 0.0) return one_minus_exp_over(t_of(pt)) * neg_log_q_over_p(pt);
    return -std::expm1(-t_of(pt)) * pt.q * inv_x / (pt.p * pt.p);
  };
  k.at_zero = kInf;
  k.at_one = inv_x;
  // The integrand turns over near p = e^-y.
  const double turn = std::numbers::ln2 - y;
  if (std::isfinite(turn)) k.breakpoints = {turn - 40.0, turn, turn + 40.0};
  return integrate_measure(m, k, "f", tol);
}

double f_eval(const LambdaMeasure& m, double y, quad::Tolerance tol) { return DriftFunction(m, tol)(y); }

double small_p_tail_log(const LambdaMeasure& m, double L, quad::Tolerance tol) {
  if (!(L > 0.0)) throw DomainError("small_p_tail needs 0 < r < 1");
  if (m.atom_at_zero() > 0.0) throw DomainError("small_p_tail needs a measure with dust (atom at 0 present)");
  // The tolerance applies to the scaled result.
  tol.abs /= std::sqrt(L);
  double value = 0.0;
  for (const auto& a : m.interior_atoms())
    if (std::log(a.location) <= -L) value += a.mass / a.location;

  if (m.has_density()) {
    const double s_r = s_of_log_p(-L);
    auto integrand = [&](double s) {
      const auto pt = point_at_s(s);
      const double d = m.density(pt);
      return d == 0.0 ? 0.0 : d * (s <= 0.0 ? 1.0 : pt.q / pt.p);
    };
    std::vector<double> cuts;
    for (double b : m.breakpoints())
      if (b < s_r) cuts.push_back(b);
    cuts.push_back(std::min(s_r - 1.0, cuts.empty() ? s_r - 1.0 : cuts.front()));
    cuts.push_back(s_r);
    std::sort(cuts.begin(), cuts.end());
    double err = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      auto r = quad::gauss_kronrod(integrand, cuts[i], cuts[i + 1], tol);
      value += r.value;
      err += r.error;
      ok = ok && r.converged;
    }
    auto tail = quad::integrate_tail([&](double u) { return integrand(-u); }, -cuts.front(), tol);
    if (tail.status == quad::TailStatus::diverged)
      throw DomainError("small_p_tail needs a measure with dust (integral diverges)");
    value += tail.value;
    err += tail.error;
    if (tail.status == quad::TailStatus::failed || (!ok && err > tol.target(value)))
      throw QuadratureError("small_p_tail did not reach tolerance", value, err);
  }
  return std::sqrt(L) * value;
}

double small_p_tail(const LambdaMeasure& m, double r, quad::Tolerance tol) {
  if (!(r > 0.0 && r < 1.0)) throw DomainError("small_p_tail needs 0 < r < 1");
  return small_p_tail_log(m, -std::log(r), tol);
}

DriftFunction::DriftFunction(const LambdaMeasure& m, quad::Tolerance tol) : m_(m), tol_(tol) {
  const auto d = dust_integral(m, tol);
  if (d.infinite()) throw DomainError("f is infinite: the measure has no dust");
  dust_ = d.value;
}

double DriftFunction::operator()(double y) const { return f_functional(m_, y, tol_).value; }

DriftTable::DriftTable(const LambdaMeasure& m, double y_max, quad::Tolerance tol) : direct_(m, tol) {
  const auto n = static_cast<std::size_t>(std::ceil((std::max(y_max, kFloor + 1.0) - kFloor) / kStep)) + 1;
  y_max_ = kFloor + static_cast<double>(n - 1) * kStep;
  values_.resize(n);
  for (std::size_t i = 0; i < n; ++i) values_[i] = direct_(kFloor + static_cast<double>(i) * kStep);

  const double h = kStep;
  slopes_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= 2 && i + 2 < n)
      slopes_[i] = (-values_[i + 2] + 8.0 * values_[i + 1] - 8.0 * values_[i - 1] + values_[i - 2]) / (12.0 * h);
    else if (i >= 1 && i + 1 < n)
      slopes_[i] = (values_[i + 1] - values_[i - 1]) / (2.0 * h);
    else if (i == 0)
      slopes_[i] = (-3.0 * values_[0] + 4.0 * values_[1] - values_[2]) / (2.0 * h);
    else
      slopes_[i] = (3.0 * values_[i] - 4.0 * values_[i - 1] + values_[i - 2]) / (2.0 * h);
  }
  // Fritsch-Carlson limiter keeps each cell monotone.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double secant = (values_[i + 1] - values_[i]) / h;
    if (secant == 0.0) {
      slopes_[i] = slopes_[i + 1] = 0.0;
      continue;
    }
    double a = slopes_[i] / secant;
    double b = slopes_[i + 1] / secant;
    if (a < 0.0) slopes_[i] = a = 0.0;
    if (b < 0.0) slopes_[i + 1] = b = 0.0;
    const double r2 = a * a + b * b;
    if (r2 > 9.0) {
      const double t = 3.0 / std::sqrt(r2);
      slopes_[i] = t * a * secant;
      slopes_[i + 1] = t * b * secant;
    }
  }
}

double DriftTable::operator()(double y) const {
  if (y <= kFloor) return values_.front();
  if (y >= y_max_) return direct_(y);
  const double u = (y - kFloor) / kStep;
  auto i = static_cast<std::size_t>(u);
  if (i + 1 >= values_.size()) i = values_.size() - 2;
  const double t = u - static_cast<double>(i);
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * values_[i] + h10 * kStep * slopes_[i] + h01 * values_[i + 1] + h11 * kStep * slopes_[i + 1];
}

double DriftTable::exact(double y) const { return direct_(std::max(y, kFloor)); }

}  // namespace coalab
