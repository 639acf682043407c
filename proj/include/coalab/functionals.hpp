#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "coalab/measure.hpp"
#include "coalab/quadrature.hpp"

namespace coalab {

/// Integrand g(p) Λ(dp) / p^2 against a measure, split the way the
/// integrator needs it.
struct Kernel {
  /// g(p)/p^2 at an interior point (used for interior atoms).
  std::function<double(const PPoint&)> weight;
  /// g(p)/p^2 * dp/ds at coordinate s; must stay finite when p underflows.
  std::function<double(const PPoint&, double)> line;
  /// Limits of g(p)/p^2 at p -> 0 and p -> 1 (may be +inf).
  double at_zero = 0.0;
  double at_one = 0.0;
  /// Extra non-smooth points of the kernel in s.
  std::vector<double> breakpoints;
  /// Restricts the integral to s in [s_lo, s_hi). Atoms at 0 and 1 count only
  /// when the range reaches the matching end.
  double s_lo = -std::numeric_limits<double>::infinity();
  double s_hi = std::numeric_limits<double>::infinity();
};

enum class InfinityCause { none, atom, divergence };

struct Functional {
  std::string kind;
  double value = 0.0;
  double abs_error = 0.0;
  InfinityCause cause = InfinityCause::none;

  bool infinite() const { return cause != InfinityCause::none; }
};

/// Integrates a kernel against every component of m. Infinite values are
/// reported through `cause`; throws QuadratureError when the tolerance is
/// missed.
Functional integrate_measure(const LambdaMeasure& m, const Kernel& k, const std::string& kind,
                             quad::Tolerance tol = {});

Functional mu(const LambdaMeasure& m, quad::Tolerance tol = {});
Functional sigma2(const LambdaMeasure& m, quad::Tolerance tol = {});
Functional dust_integral(const LambdaMeasure& m, quad::Tolerance tol = {});
Functional total_mass(const LambdaMeasure& m, quad::Tolerance tol = {});
Functional f_functional(const LambdaMeasure& m, double y, quad::Tolerance tol = {});

/// f(y); DomainError on a measure without dust.
double f_eval(const LambdaMeasure& m, double y, quad::Tolerance tol = {});

/// sqrt(log 1/r) * ∫_{(0,r]} Λ(dp)/p.
double small_p_tail(const LambdaMeasure& m, double r, quad::Tolerance tol = {});
/// Same with r = exp(-L), usable for L far beyond the double range of r.
double small_p_tail_log(const LambdaMeasure& m, double L, quad::Tolerance tol = {});

/// -log(1-p)/p with its limit 1 at p = 0.
inline double neg_log_q_over_p(const PPoint& pt) { return pt.p > 0.0 ? -pt.log_q / pt.p : 1.0; }

/// (1 - e^-t)/t with its limit 1 at t = 0.
inline double one_minus_exp_over(double t) { return t > 1e-300 ? -std::expm1(-t) / t : 1.0; }

/// f evaluated by direct quadrature, with the dust check done once.
class DriftFunction {
 public:
  explicit DriftFunction(const LambdaMeasure& m, quad::Tolerance tol = {});
  double operator()(double y) const;
  double dust() const { return dust_; }
  const LambdaMeasure& measure() const { return m_; }

 private:
  LambdaMeasure m_;
  quad::Tolerance tol_;
  double dust_;
};

/// Monotone cubic Hermite interpolant of f on a uniform grid over
/// [y_floor, y_max]. Below y_floor the value is frozen at f(y_floor); above
/// y_max f is evaluated directly.
class DriftTable {
 public:
  static constexpr double kFloor = -5.0;
  static constexpr double kStep = 0.02;

  DriftTable(const LambdaMeasure& m, double y_max, quad::Tolerance tol = {1e-11, 1e-14});
  double operator()(double y) const;
  double floor_value() const { return values_.front(); }
  double y_max() const { return y_max_; }
  /// Direct evaluation, bypassing the table (still clamped below the floor).
  double exact(double y) const;

 private:
  DriftFunction direct_;
  double y_max_;
  std::vector<double> values_;
  std::vector<double> slopes_;
};

}  // namespace coalab
