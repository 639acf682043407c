#pragma once

// Adaptive Gauss-Kronrod (21-point) integration on finite intervals and a
// cutoff-doubling driver for semi-infinite ones.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

namespace coalab::quad {

struct Tolerance {
  double rel = 1e-10;
  double abs = 1e-12;

  double target(double value) const { return std::max(abs, rel * std::abs(value)); }
  Tolerance halved() const { return {rel / 2, abs / 2}; }
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
  int evaluations = 0;
};

namespace detail {

inline constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};

inline constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525164016, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};

// 10-point Gauss weights at the odd Kronrod nodes 1,3,5,7,9.
inline constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel kronrod21(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double resk = fc * kWgk[10];
  double resg = 0.0;
  double resabs = std::abs(resk);
  std::array<double, 10> f1{}, f2{};
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kXgk[j];
    f1[j] = f(center - dx);
    f2[j] = f(center + dx);
    const double sum = f1[j] + f2[j];
    resk += kWgk[j] * sum;
    resabs += kWgk[j] * (std::abs(f1[j]) + std::abs(f2[j]));
    if (j % 2 == 1) resg += kWg[j / 2] * sum;
  }
  const double reskh = 0.5 * resk;
  double resasc = kWgk[10] * std::abs(fc - reskh);
  for (int j = 0; j < 10; ++j) resasc += kWgk[j] * (std::abs(f1[j] - reskh) + std::abs(f2[j] - reskh));

  const double scale = std::abs(half);
  const double value = resk * half;
  resabs *= scale;
  resasc *= scale;
  double err = std::abs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
  return {a, b, value, err};
}

}  // namespace detail

/// Globally adaptive bisection: the panel with the largest error estimate is
/// split until the summed estimate meets the tolerance.
template <class F>
Result gauss_kronrod(F&& f, double a, double b, Tolerance tol = {}, int max_panels = 4000) {
  Result out;
  if (a == b) return out;
  std::priority_queue<detail::Panel> heap;
  auto first = detail::kronrod21(f, a, b);
  out.evaluations = 21;
  double total = first.value;
  double error = first.error;
  heap.push(first);
  int panels = 1;
  while (error > tol.target(total) && panels < max_panels) {
    const auto worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > std::min(worst.a, worst.b) && mid < std::max(worst.a, worst.b))) break;
    heap.pop();
    auto left = detail::kronrod21(f, worst.a, mid);
    auto right = detail::kronrod21(f, mid, worst.b);
    out.evaluations += 42;
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++panels;
  }
  // Re-sum to shed the drift accumulated by incremental updates.
  total = 0.0;
  error = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.error = error;
  out.converged = std::isfinite(total) && error <= tol.target(total);
  return out;
}

enum class TailStatus { converged, diverged, failed };

struct TailResult {
  double value = 0.0;
  double error = 0.0;
  TailStatus status = TailStatus::converged;
  int doublings = 0;
};

struct TailOptions {
  double min_first_width = 64.0;
  int max_doublings = 120;
  /// Growth factor and run length of the divergence rule.
  double growth_factor = 1.01;
  int growth_run = 8;
};

/// Integrates a nonnegative f over [a, inf) through panels ending at
/// a + W, a + 2W, a + 4W, ... with W = max(min_first_width, |a|).
///
/// Divergence: the cumulative value grows by more than growth_factor while
/// the panel increments do not shrink (by more than that factor), for
/// growth_run consecutive doublings. Convergence: the geometric estimate of
/// the remaining tail plus the panel errors meets the tolerance.
template <class F>
TailResult integrate_tail(F&& f, double a, Tolerance tol = {}, TailOptions opt = {}) {
  TailResult out;
  const double width = std::max(opt.min_first_width, std::abs(a));
  auto first = gauss_kronrod(f, a, a + width, tol);
  double total = first.value;
  double error = first.error;
  double prev_increment = std::abs(first.value);
  int run = 0, settled_run = 0;
  double bound = std::numeric_limits<double>::infinity();
  double prev_extrapolated = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= opt.max_doublings; ++k) {
    const double lo = a + width * std::ldexp(1.0, k - 1);
    const double hi = a + width * std::ldexp(1.0, k);
    const Tolerance panel_tol{tol.rel, 0.1 * tol.target(total)};
    auto panel = gauss_kronrod(f, lo, hi, panel_tol);
    out.doublings = k;
    if (!std::isfinite(panel.value)) {
      out.value = std::numeric_limits<double>::infinity();
      out.status = TailStatus::diverged;
      return out;
    }
    const double before = total;
    total += panel.value;
    error += panel.error;
    const double increment = std::abs(panel.value);

    const bool grows = std::abs(total) > opt.growth_factor * std::abs(before);
    const bool not_shrinking = increment * opt.growth_factor >= prev_increment && increment > 0.0;
    run = (grows && not_shrinking) ? run + 1 : 0;
    if (run >= opt.growth_run) {
      out.value = std::numeric_limits<double>::infinity();
      out.error = std::numeric_limits<double>::infinity();
      out.status = TailStatus::diverged;
      return out;
    }

    double remaining;
    if (increment == 0.0) {
      remaining = 0.0;
    } else if (prev_increment > 0.0 && increment < prev_increment) {
      const double r = increment / prev_increment;
      remaining = increment * r / (1.0 - r);
    } else {
      remaining = std::numeric_limits<double>::infinity();
    }
    prev_increment = increment;
    bound = remaining + error;
    if (bound <= tol.target(total)) {
      out.value = total;
      out.error = error + remaining;
      return out;
    }
    // Power-law tails shrink by a fixed ratio per doubling; accept the
    // extrapolated total once it has settled twice in a row.
    const double extrapolated = total + remaining;
    const double drift = std::abs(extrapolated - prev_extrapolated);
    const bool settled = std::isfinite(remaining) && remaining / (increment + remaining) < 0.95 &&
                         drift + error <= tol.target(extrapolated);
    settled_run = settled ? settled_run + 1 : 0;
    if (settled_run >= 2) {
      out.value = extrapolated;
      out.error = drift + error;
      return out;
    }
    prev_extrapolated = extrapolated;
  }
  out.value = total;
  out.error = bound;
  out.status = TailStatus::failed;
  return out;
}

/// Integral of f over [lo, hi], either end possibly infinite: finite panels
/// between the sorted breakpoints, then a tail for each infinite end. With an
/// infinite end the finite part reaches at least one unit past the other end
/// (or [-1, 1] for the whole line).
template <class F>
TailResult integrate_range(F&& f, double lo, double hi, std::vector<double> breaks, Tolerance tol = {},
                           TailOptions opt = {}) {
  TailResult out;
  if (!(lo < hi)) return out;
  std::vector<double> pts;
  for (double b : breaks)
    if (b > lo && b < hi) pts.push_back(b);
  pts.push_back(std::isfinite(lo) ? lo : std::min(-1.0, std::isfinite(hi) ? hi - 1.0 : -1.0));
  pts.push_back(std::isfinite(hi) ? hi : std::max(1.0, std::isfinite(lo) ? lo + 1.0 : 1.0));
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  bool failed = false;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    auto r = gauss_kronrod(f, pts[i], pts[i + 1], tol);
    out.value += r.value;
    out.error += r.error;
    failed = failed || !r.converged;
  }
  auto add_tail = [&](const TailResult& t) {
    out.doublings = std::max(out.doublings, t.doublings);
    if (t.status == TailStatus::diverged) {
      out.status = TailStatus::diverged;
      return;
    }
    out.value += t.value;
    out.error += t.error;
    failed = failed || t.status == TailStatus::failed;
  };
  if (!std::isfinite(lo)) add_tail(integrate_tail([&](double u) { return f(-u); }, -pts.front(), tol, opt));
  if (!std::isfinite(hi)) add_tail(integrate_tail(f, pts.back(), tol, opt));
  if (out.status == TailStatus::diverged) {
    out.value = std::numeric_limits<double>::infinity();
    out.error = std::numeric_limits<double>::infinity();
    return out;
  }
  if (failed && out.error > tol.target(out.value)) out.status = TailStatus::failed;
  return out;
}

/// Integral of f over the whole real line.
template <class F>
TailResult integrate_line(F&& f, std::vector<double> breaks, Tolerance tol = {}, TailOptions opt = {}) {
  return integrate_range(std::forward<F>(f), -std::numeric_limits<double>::infinity(),
                         std::numeric_limits<double>::infinity(), std::move(breaks), tol, opt);
}

}  // namespace coalab::quad
