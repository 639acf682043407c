#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "coalab/functionals.hpp"
#include "coalab/measure.hpp"

namespace coalab {

struct BnExpansion {
  /// terms[j] = μ^-(j+1) ∫_0^{log n} g^j, g = min(f, μ/2).
  std::vector<double> terms;
  /// -2κ/μ: converts the expansion of ∫_0^{log n} dy/(μ - g) into b_n.
  double kappa_offset = 0.0;
  /// b_n - Σ terms - kappa_offset lies in [0, remainder_bound].
  double remainder_bound = 0.0;
};

/// Centering constants for a measure with μ < ∞ and dust. Holds the direct
/// quadrature for f; integrals over y use adaptive Gauss-Kronrod on dyadic
/// panels.
class Asymptotics {
 public:
  /// DomainError if μ is infinite or the measure has no dust.
  explicit Asymptotics(const LambdaMeasure& m);

  double mu() const { return mu_; }
  /// Smallest y >= 0 with f(y) <= μ/2 (bisection to 1e-9).
  double kappa() const { return kappa_; }
  double f(double y) const { return f_(y); }

  /// ∫_κ^z dy/(μ - f(y)); 0 when z <= κ.
  double beta(double z) const;
  double b_n(double n) const { return beta(std::log(n)); }
  /// beta(L) - L/μ without the cancellation.
  double centered_beta(double L) const;
  /// ∫_0^z dy/(μ - min(f, μ/2)): the time the flow ρ^z takes to reach 0.
  /// Equals beta(z) + 2κ/μ for z >= κ.
  double flow_beta(double z) const;

  BnExpansion expansion(double n, int order) const { return expansion_log(std::log(n), order); }
  /// Same with L = log n, for n beyond the double range.
  BnExpansion expansion_log(double L, int order) const;

 private:
  template <class G>
  double integrate_y(G&& g, double a, double b) const;

  DriftFunction f_;
  double mu_;
  double kappa_;
};

double kappa(const LambdaMeasure& m);
double b_n(const LambdaMeasure& m, double n);
BnExpansion bn_expansion(const LambdaMeasure& m, double n, int order);

struct Prop2Estimate {
  double c = 0.0;
  bool converged = false;
  std::vector<double> L;       // 10, 100, ..., 1e6
  std::vector<double> values;  // sqrt(L) ∫_{(0,e^-L]} Λ(dp)/p
};

/// Limit of sqrt(log 1/r) ∫_{(0,r]} Λ(dp)/p as r -> 0. Extrapolates the last
/// three ladder values with Aitken's delta-squared step; converged when the
/// last two values differ by at most 5% (absolute below 1).
Prop2Estimate prop2_c(const LambdaMeasure& m);

struct CltParams {
  double mu;
  double sigma2;
  double variance;  // σ²/μ³
};

/// DomainError when μ or σ² is infinite.
CltParams clt_params(const LambdaMeasure& m);

struct AsymptoticProfile {
  double mu = 0.0, sigma2 = 0.0, dust = 0.0;  // +inf when infinite
  double kappa = 0.0;                         // NaN unless μ < ∞ and dust
  double clt_variance = 0.0;                  // NaN unless μ, σ² < ∞
  Prop2Estimate c_estimate;                   // empty without dust
};

AsymptoticProfile asymptotic_profile(const LambdaMeasure& m);

}  // namespace coalab
