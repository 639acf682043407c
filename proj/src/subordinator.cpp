#include "coalab/subordinator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "coalab/error.hpp"
#include "coalab/parallel.hpp"
#include "coalab/rates.hpp"

namespace coalab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPassageTol = 1e-9;
constexpr double kMaxTime = 1e8;

Kernel moment_kernel(int power) {
  Kernel k;
  k.weight = [power](const PPoint& pt) { return std::pow(-pt.log_q, power) / (pt.p * pt.p); };
  k.line = [power](const PPoint& pt, double s) {
    const double y = -pt.log_q;
    if (s <= 0.0) {
      // y^power / p with y/p kept finite as p underflows.
      return power == 0 ? 1.0 / pt.p : neg_log_q_over_p(pt) * std::pow(y, power - 1);
    }
    return std::pow(y, power) * pt.q / (pt.p * pt.p);
  };
  k.at_zero = power == 2 ? 1.0 : kInf;
  k.at_one = power == 0 ? 1.0 : kInf;
  return k;
}

double checked(const Functional& f, const char* what) {
  if (f.infinite()) throw DomainError(std::string(what) + " is infinite: the measure has no dust");
  return f.value;
}

}  // namespace

JumpMeasure::JumpMeasure(const LambdaMeasure& m, double delta) : m_(m), delta_(delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("truncation level must be positive and finite");
  if (m_.atom_at_zero() > 0.0) throw DomainError("measure with an atom at 0 has no dust");
  p_delta_ = -std::expm1(-delta);
  s_delta_ = s_of_p(p_delta_);

  auto below = [&](int power) {
    auto k = moment_kernel(power);
    k.s_hi = s_delta_;
    return k;
  };
  auto above = [&](int power) {
    auto k = moment_kernel(power);
    k.s_lo = s_delta_;
    return k;
  };
  m_delta_ = checked(integrate_measure(m_, below(1), "m_delta"), "m_delta");
  v_delta_ = integrate_measure(m_, below(2), "v_delta").value;
  truncated_rate_ = integrate_measure(m_, above(0), "truncated_rate").value;
  const auto tm = integrate_measure(m_, above(1), "truncated_mean");
  truncated_mean_ = tm.infinite() ? kInf : tm.value;

  sampler_ = std::make_shared<const EnvelopeSampler>(m_);
  tail_ = sampler_->tail_window(s_delta_);
  for (const auto& a : m_.interior_atoms()) {
    if (s_of_p(a.location) < s_delta_) continue;
    big_atoms_.push_back(point_at_p(a.location));
    big_rates_.push_back(a.mass / (a.location * a.location));
    atom_rate_ += big_rates_.back();
  }
  star_rate_ = m_.atom_at_one();
  envelope_rate_ = star_rate_ + atom_rate_ + tail_.rate();
}

std::optional<JumpMeasure::Jump> JumpMeasure::draw(Rng& rng) const {
  double u = rng.uniform() * envelope_rate_;
  if (u < star_rate_) return Jump{{1.0, 0.0, 0.0, -kInf}, kInf, MergerSource::star};
  u -= star_rate_;
  if (u < atom_rate_) {
    std::size_t i = 0;
    while (i + 1 < big_atoms_.size() && u >= big_rates_[i]) u -= big_rates_[i++];
    return Jump{big_atoms_[i], -big_atoms_[i].log_q, MergerSource::atom};
  }
  const auto prop = sampler_->propose(tail_, rng);
  if (rng.uniform() < prop.ratio) return Jump{prop.pt, -prop.pt.log_q, MergerSource::density};
  return std::nullopt;
}

double default_delta(const LambdaMeasure& m) {
  constexpr double lo = 1e-6, hi = 0.5;
  const auto s2 = sigma2(m);
  if (s2.infinite()) return lo;
  auto ok = [&](double d) {
    auto k = moment_kernel(2);
    k.s_hi = s_of_p(-std::expm1(-d));
    return integrate_measure(m, k, "v_delta").value < 1e-4 * s2.value;
  };
  if (ok(hi)) return hi;
  if (!ok(lo)) return lo;
  double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < 40; ++i) {
    const double mid = 0.5 * (a + b);
    (ok(std::exp(mid)) ? a : b) = mid;
  }
  return std::exp(a);
}

SubordinatorEngine::SubordinatorEngine(const LambdaMeasure& m, double delta, double y_max)
    : jumps_(m, delta), table_(m, y_max) {
  const auto mu_f = coalab::mu(m);
  mu_ = mu_f.infinite() ? kInf : mu_f.value;
  step_ = std::min(0.01, 0.1 / table_.floor_value());
}

double SubordinatorEngine::rk4(double y, double h, double* integral) const {
  const double md = jumps_.compensator_drift();
  const double f1 = table_(y);
  const double f2 = table_(y + 0.5 * h * (f1 - md));
  const double f3 = table_(y + 0.5 * h * (f2 - md));
  const double f4 = table_(y + h * (f3 - md));
  const double fbar = (f1 + 2.0 * f2 + 2.0 * f3 + f4) / 6.0;
  if (integral) *integral += h * fbar;
  return y + h * (fbar - md);
}

double SubordinatorEngine::advance(double y, double dt, double* integral) const {
  if (!std::isfinite(y)) return y;
  const auto steps = static_cast<std::int64_t>(std::ceil(dt / step_));
  if (steps <= 0) return y;
  const double h = dt / static_cast<double>(steps);
  for (std::int64_t i = 0; i < steps; ++i) y = rk4(y, h, integral);
  return y;
}

DriftedPath SubordinatorEngine::simulate_drifted(double z, const std::vector<double>& x_targets, Rng& rng,
                                                 bool log_jumps) const {
  if (!std::isfinite(z)) throw DomainError("start value must be finite");
  for (double x : x_targets)
    if (!(x >= DriftTable::kFloor + 1.0)) throw DomainError("passage targets must be >= -4");

  DriftedPath path;
  path.z = z;
  path.delta = jumps_.delta();
  path.final_value = z;
  for (double x : x_targets) path.passages.push_back({x, z < x ? 0.0 : kInf});

  // Pending targets, highest first: Y reaches them in that order.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < x_targets.size(); ++i)
    if (!(z < x_targets[i])) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x_targets[a] > x_targets[b]; });
  std::size_t next = 0;

  double y = z, t = 0.0;
  while (next < order.size()) {
    const double dt = rng.exponential(jumps_.envelope_rate());
    const auto steps = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(dt / step_)));
    const double h = dt / static_cast<double>(steps);
    for (std::int64_t i = 0; i < steps && next < order.size(); ++i) {
      double scratch = 0.0;
      const double y1 = rk4(y, h, &scratch);
      if (!(y1 < x_targets[order[next]])) {
        y = y1;
        t += h;
        path.drift_integral += scratch;
        continue;
      }
      double hit = h;
      while (next < order.size() && y1 < x_targets[order[next]]) {
        const double x = x_targets[order[next]];
        double lo = 0.0, hi = h;
        while (hi - lo > kPassageTol) {
          const double mid = 0.5 * (lo + hi);
          (rk4(y, mid, nullptr) < x ? hi : lo) = mid;
        }
        path.passages[order[next]].t = t + hi;
        hit = hi;
        ++next;
      }
      if (next == order.size()) {
        // Stop at the last passage so the accumulated sums end there.
        scratch = 0.0;
        y = rk4(y, hit, &scratch);
        t += hit;
      } else {
        y = y1;
        t += h;
      }
      path.drift_integral += scratch;
    }
    if (next == order.size()) break;
    if (const auto j = jumps_.draw(rng)) {
      y -= j->y;
      path.jump_sum += j->y;
      if (log_jumps) path.jumps.emplace_back(t, j->y);
      while (next < order.size() && y < x_targets[order[next]]) path.passages[order[next++]].t = t;
    }
    if (t > kMaxTime) throw Error("drifted process did not reach the passage targets");
  }
  path.final_time = t;
  path.final_value = y;
  return path;
}

std::vector<double> SubordinatorEngine::passage_sample(double z, double x, std::size_t reps, std::uint64_t seed,
                                                       unsigned threads) const {
  std::vector<double> out(reps);
  parallel_for(reps, threads, [&](std::size_t j) {
    Rng rng(seed, j);
    out[j] = simulate_drifted(z, {x}, rng, false).passages[0].t;
  });
  return out;
}

CoupledResult SubordinatorEngine::coupled(std::int64_t n, Rng& rng, bool record) const {
  if (n < 2) throw DomainError("need n >= 2");
  const auto& m = jumps_.measure();
  const auto& sampler = jumps_.sampler();
  std::vector<PPoint> small_pts;
  std::vector<double> small_mass;
  for (const auto& a : m.interior_atoms()) {
    if (s_of_p(a.location) >= jumps_.s_delta()) continue;
    small_pts.push_back(point_at_p(a.location));
    small_mass.push_back(a.mass);
  }
  std::vector<double> small_h(small_pts.size()), small_rate(small_pts.size());

  CoupledResult out;
  out.coalescent.n = n;
  out.coalescent.measure_fingerprint = m.fingerprint();
  out.drifted.z = std::log(static_cast<double>(n));
  out.drifted.delta = jumps_.delta();

  std::int64_t b = n;
  double y = out.drifted.z, t = 0.0;
  auto merge = [&](std::int64_t k, double p, MergerSource src) {
    if (record) out.coalescent.events.push_back({t, b, k, p, src});
    b -= k - 1;
  };
  while (b > 1) {
    const double bd = static_cast<double>(b);
    double r_atoms = 0.0;
    for (std::size_t i = 0; i < small_pts.size(); ++i) {
      small_h[i] = h_over_p2(small_pts[i], bd);
      small_rate[i] = small_mass[i] * small_h[i];
      r_atoms += small_rate[i];
    }
    const auto win = sampler.window(bd, jumps_.s_delta());
    const double r_big = jumps_.envelope_rate();
    const double total = r_big + r_atoms + win.rate();

    const double dt = rng.exponential(total);
    y = advance(y, dt, &out.drifted.drift_integral);
    t += dt;
    // Y is monotone between events and log N is constant, so the gap peaks
    // at an event time.
    out.sup_gap = std::max(out.sup_gap, std::abs(std::log(bd) - y));

    double u = rng.uniform() * total;
    if (u < r_big) {
      const auto j = jumps_.draw(rng);
      if (!j) continue;
      y -= j->y;
      out.drifted.jump_sum += j->y;
      if (record) out.drifted.jumps.emplace_back(t, j->y);
      const std::int64_t k = j->source == MergerSource::star ? b : binomial(b, j->pt.p, rng);
      if (k >= 2) merge(k, j->source == MergerSource::star ? 1.0 : j->pt.p, j->source);
    } else if ((u -= r_big) < r_atoms) {
      std::size_t i = 0;
      while (i + 1 < small_pts.size() && u >= small_rate[i]) u -= small_rate[i++];
      merge(conditioned_binomial(b, small_pts[i], small_h[i], rng), small_pts[i].p, MergerSource::atom);
    } else {
      const auto prop = sampler.propose(win, rng);
      const double h = h_over_p2(prop.pt, bd);
      if (rng.uniform() < prop.ratio * h / prop.envelope)
        merge(conditioned_binomial(b, prop.pt, h, rng), prop.pt.p, MergerSource::density);
    }
    if (b > 1) out.sup_gap = std::max(out.sup_gap, std::abs(std::log(static_cast<double>(b)) - y));
  }
  out.tau = t;
  out.y_at_tau = y;
  out.coalescent.tau = t;
  out.drifted.final_time = t;
  out.drifted.final_value = y;
  return out;
}

SupDeviation SubordinatorEngine::sup_deviation(double t, Rng& rng) const {
  if (!std::isfinite(mu_)) throw DomainError("mu is infinite");
  if (!(t >= 0.0)) throw DomainError("horizon must be non-negative");
  const double md = jumps_.compensator_drift();
  SupDeviation out;
  double s = 0.0, u = 0.0;
  while (true) {
    const double dt = rng.exponential(jumps_.envelope_rate());
    if (u + dt >= t) {
      out.s_t = s + md * (t - u);
      out.sup = std::max(out.sup, std::abs(out.s_t - mu_ * t));
      return out;
    }
    u += dt;
    s += md * dt;
    out.sup = std::max(out.sup, std::abs(s - mu_ * u));
    if (const auto j = jumps_.draw(rng)) {
      s += j->y;
      out.sup = std::max(out.sup, std::abs(s - mu_ * u));
    }
  }
}

std::vector<double> rho_flow(const LambdaMeasure& m, double z, const std::vector<double>& t_grid) {
  const auto mu_f = mu(m);
  if (mu_f.infinite()) throw DomainError("mu is infinite");
  const double mu_v = mu_f.value;
  const DriftTable table(m, std::max(z, 0.0) + 10.0);
  auto rhs = [&](double r) { return std::min(table(r), 0.5 * mu_v) - mu_v; };
  constexpr double kMaxStep = 1e-4;

  std::vector<double> out;
  out.reserve(t_grid.size());
  double r = z, t = 0.0;
  for (double target : t_grid) {
    if (target < t) throw DomainError("time grid must be non-decreasing and start at or after 0");
    const double span = target - t;
    const auto steps = static_cast<std::int64_t>(std::ceil(span / kMaxStep));
    const double h = steps > 0 ? span / static_cast<double>(steps) : 0.0;
    for (std::int64_t i = 0; i < steps; ++i) {
      const double k1 = rhs(r);
      const double k2 = rhs(r + 0.5 * h * k1);
      const double k3 = rhs(r + 0.5 * h * k2);
      const double k4 = rhs(r + h * k3);
      r += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    }
    t = target;
    out.push_back(r);
  }
  return out;
}

}  // namespace coalab
