#pragma once

// Two-sided logarithmic coordinate on (0,1).
//
//   s = log(2p)          for p <= 1/2   (s in (-inf, 0])
//   s = -log(2(1 - p))   for p >= 1/2   (s in [0, inf))
//
// Algebraic and logarithmic endpoint singularities at p = 0 and p = 1 become
// exponentially or polynomially decaying tails in s. A point carries p, 1 - p
// and both logarithms, each computed without cancellation, so that p may
// underflow deep in the left tail while log p stays exact.

#include <cmath>
#include <limits>
#include <numbers>

namespace coalab {

struct PPoint {
  double p;
  double q;  // 1 - p
  double log_p;
  double log_q;
};

inline PPoint point_at_s(double s) {
  constexpr double ln2 = std::numbers::ln2;
  PPoint pt;
  if (s <= 0.0) {
    pt.log_p = s - ln2;
    pt.p = std::exp(pt.log_p);
    pt.q = -std::expm1(pt.log_p);
    pt.log_q = std::log1p(-pt.p);
  } else {
    pt.log_q = -s - ln2;
    pt.q = std::exp(pt.log_q);
    pt.p = -std::expm1(pt.log_q);
    pt.log_p = std::log1p(-pt.q);
  }
  return pt;
}

inline PPoint point_at_p(double p) {
  return {p, 1.0 - p, std::log(p), std::log1p(-p)};
}

/// dp/ds at a point.
inline double jacobian(const PPoint& pt, double s) { return s <= 0.0 ? pt.p : pt.q; }

inline double s_of_p(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  if (p <= 0.5) return std::log(2.0 * p);
  return -std::log(2.0 * (1.0 - p));
}

/// s for p = exp(log_p), usable when p itself underflows.
inline double s_of_log_p(double log_p) {
  if (log_p <= -std::numbers::ln2) return log_p + std::numbers::ln2;
  return s_of_p(std::exp(log_p));
}

/// s for 1 - p = exp(log_q).
inline double s_of_log_q(double log_q) {
  if (log_q <= -std::numbers::ln2) return -log_q - std::numbers::ln2;
  return s_of_p(-std::expm1(log_q));
}

}  // namespace coalab
