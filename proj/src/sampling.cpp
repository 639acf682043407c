#include "coalab/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "coalab/error.hpp"
#include "coalab/quadrature.hpp"

namespace coalab {

namespace {

constexpr double kOuter = 700.0;
constexpr double kInner = 50.0;
constexpr double kFine = 0.05;
constexpr double kSlack = 1.001;

}  // namespace

EnvelopeSampler::EnvelopeSampler(const LambdaMeasure& m) : m_(m) {
  if (!m_.has_density()) return;
  std::vector<double> edges;
  for (double s = -kOuter; s < -kInner; s += 1.0) edges.push_back(s);
  const int fine = static_cast<int>(std::lround(2 * kInner / kFine));
  for (int i = 0; i <= fine; ++i) edges.push_back(-kInner + i * kFine);
  for (double s = kInner + 1.0; s <= kOuter; s += 1.0) edges.push_back(s);
  for (double b : m_.breakpoints())
    if (b > -kOuter && b < kOuter) edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  std::vector<double> clean;
  for (double e : edges)
    if (clean.empty() || e - clean.back() > 1e-9) clean.push_back(e);

  const std::size_t cells = clean.size() - 1;
  lo_.assign(clean.begin(), clean.end() - 1);
  hi_.assign(clean.begin() + 1, clean.end());
  bound_a_.resize(cells);
  bound_b_.resize(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    double ba = 0.0, bb = 0.0;
    for (int i = 0; i <= 8; ++i) {
      // Stay just inside the cell: table densities jump at its edges.
      const double t = std::clamp(i / 8.0, 1e-9, 1.0 - 1e-9);
      const double s = lo_[c] + t * (hi_[c] - lo_[c]);
      const auto pt = point_at_s(s);
      ba = std::max(ba, target_a(pt, s));
      bb = std::max(bb, target_b(pt, s));
    }
    bound_a_[c] = kSlack * ba;
    bound_b_[c] = kSlack * bb;
  }
  prefix_a_.assign(cells + 1, 0.0);
  for (std::size_t c = 0; c < cells; ++c) prefix_a_[c + 1] = prefix_a_[c] + bound_a_[c] * (hi_[c] - lo_[c]);
  suffix_b_.assign(cells + 1, 0.0);
  for (std::size_t c = cells; c-- > 0;) suffix_b_[c] = suffix_b_[c + 1] + bound_b_[c] * (hi_[c] - lo_[c]);

  // Mass outside the tabulated range is dropped; it must be negligible.
  auto left = quad::integrate_tail(
      [&](double u) {
        const auto pt = point_at_s(-u);
        return target_a(pt, -u);
      },
      kOuter);
  auto right = quad::integrate_tail(
      [&](double s) {
        const auto pt = point_at_s(s);
        return target_b(pt, s);
      },
      kOuter);
  const double scale = prefix_a_.back() + suffix_b_.front();
  if (!(left.value <= 1e-12 * scale) || !(right.value <= 1e-12 * scale))
    throw DomainError("density has non-negligible mass beyond the sampler range (|s| > 700)");
}

double EnvelopeSampler::target_a(const PPoint& pt, double s) const {
  const double d = m_.density(pt);
  return d == 0.0 ? 0.0 : d * jacobian(pt, s);
}

double EnvelopeSampler::target_b(const PPoint& pt, double s) const {
  const double d = m_.density(pt);
  if (d == 0.0) return 0.0;
  return s <= 0.0 ? d * 2.0 * std::exp(-s) : d * pt.q / (pt.p * pt.p);
}

std::size_t EnvelopeSampler::cell_of(double s) const {
  auto it = std::upper_bound(lo_.begin(), lo_.end(), s);
  if (it == lo_.begin()) return 0;
  return static_cast<std::size_t>(it - lo_.begin()) - 1;
}

EnvelopeSampler::Window EnvelopeSampler::window(double b, double s_max) const {
  Window w;
  if (empty()) return w;
  w.b2 = b * (b - 1.0) / 2.0;
  const double top = hi_.back(), bottom = lo_.front();
  w.s_max = std::clamp(s_max, bottom, top);
  const double p_b = 1.0 / std::sqrt(w.b2);
  w.s_b = std::clamp(p_b >= 1.0 ? top : s_of_p(p_b), bottom, w.s_max);
  w.c_b = cell_of(w.s_b);
  w.c_max = cell_of(w.s_max);
  w.mass_a = w.b2 * (prefix_a_[w.c_b] + bound_a_[w.c_b] * (w.s_b - lo_[w.c_b]));
  w.mass_b = mass_b_between(w.s_b, w.c_b, w.s_max, w.c_max);
  return w;
}

EnvelopeSampler::Window EnvelopeSampler::tail_window(double s_min) const {
  Window w;
  if (empty()) return w;
  w.s_max = hi_.back();
  w.s_b = std::clamp(s_min, lo_.front(), w.s_max);
  w.c_b = cell_of(w.s_b);
  w.c_max = cell_of(w.s_max);
  w.mass_b = mass_b_between(w.s_b, w.c_b, w.s_max, w.c_max);
  return w;
}

double EnvelopeSampler::mass_b_between(double s_lo, std::size_t c_lo, double s_hi, std::size_t c_hi) const {
  if (!(s_hi > s_lo)) return 0.0;
  if (c_lo == c_hi) return bound_b_[c_lo] * (s_hi - s_lo);
  return bound_b_[c_lo] * (hi_[c_lo] - s_lo) + (suffix_b_[c_lo + 1] - suffix_b_[c_hi]) +
         bound_b_[c_hi] * (s_hi - lo_[c_hi]);
}

EnvelopeSampler::Proposal EnvelopeSampler::propose(const Window& w, Rng& rng) const {
  Proposal out;
  const double u = rng.uniform() * w.rate();
  std::size_t c;
  if (u < w.mass_a) {
    const double v = u / w.b2;
    double s_lo, s_hi;
    if (v >= prefix_a_[w.c_b]) {
      c = w.c_b;
      s_lo = lo_[c];
      s_hi = w.s_b;
    } else {
      auto it = std::upper_bound(prefix_a_.begin(), prefix_a_.begin() + static_cast<std::ptrdiff_t>(w.c_b) + 1, v);
      c = static_cast<std::size_t>(it - prefix_a_.begin()) - 1;
      s_lo = lo_[c];
      s_hi = hi_[c];
    }
    out.s = s_lo + rng.uniform() * (s_hi - s_lo);
    out.pt = point_at_s(out.s);
    out.ratio = bound_a_[c] > 0.0 ? target_a(out.pt, out.s) / bound_a_[c] : 0.0;
    out.envelope = w.b2;
  } else {
    double v = u - w.mass_a;
    double s_lo, s_hi;
    const double first = w.c_b == w.c_max ? w.mass_b : bound_b_[w.c_b] * (hi_[w.c_b] - w.s_b);
    const double middle = w.c_b == w.c_max ? 0.0 : suffix_b_[w.c_b + 1] - suffix_b_[w.c_max];
    if (v < first || w.c_b == w.c_max) {
      c = w.c_b;
      s_lo = w.s_b;
      s_hi = w.c_b == w.c_max ? w.s_max : hi_[c];
    } else if (v - first < middle) {
      // Cells c_b+1 .. c_max-1; suffix_b_ decreases with c.
      const double target = suffix_b_[w.c_b + 1] - (v - first);
      auto begin = suffix_b_.begin() + static_cast<std::ptrdiff_t>(w.c_b) + 1;
      auto end = suffix_b_.begin() + static_cast<std::ptrdiff_t>(w.c_max) + 1;
      // Last c with suffix_b_[c] >= target.
      auto it = std::partition_point(begin, end, [&](double x) { return x >= target; });
      c = static_cast<std::size_t>(it - suffix_b_.begin()) - 1;
      c = std::clamp(c, w.c_b + 1, w.c_max - 1);
      s_lo = lo_[c];
      s_hi = hi_[c];
    } else {
      c = w.c_max;
      s_lo = lo_[c];
      s_hi = w.s_max;
    }
    out.s = s_lo + rng.uniform() * (s_hi - s_lo);
    out.pt = point_at_s(out.s);
    out.ratio = bound_b_[c] > 0.0 ? target_b(out.pt, out.s) / bound_b_[c] : 0.0;
    out.envelope = 1.0 / (out.pt.p * out.pt.p);
  }
  if (out.ratio > 1.0) violations_.fetch_add(1, std::memory_order_relaxed);
  return out;
}

std::int64_t binomial(std::int64_t b, double p, Rng& rng) {
  if (p >= 1.0) return b;
  if (p <= 0.0) return 0;
  std::binomial_distribution<std::int64_t> dist(b, p);
  return dist(rng);
}

std::int64_t conditioned_binomial(std::int64_t b, const PPoint& pt, double h_over_p2, Rng& rng) {
  if (b == 2) return 2;
  const double bd = static_cast<double>(b);
  if (bd * pt.p <= 1.0) {
    // Inversion from k = 2; P(K=2 | K>=2) = C(b,2) q^(b-2) / (h_b/p^2).
    double pk = bd * (bd - 1.0) / 2.0 * std::exp((bd - 2.0) * pt.log_q) / h_over_p2;
    const double odds = pt.p / pt.q;
    const double u = rng.uniform();
    double cum = pk;
    std::int64_t k = 2;
    while (u >= cum && k < b) {
      pk *= (bd - static_cast<double>(k)) / static_cast<double>(k + 1) * odds;
      ++k;
      cum += pk;
      if (pk == 0.0) break;
    }
    return k;
  }
  while (true) {
    const std::int64_t k = binomial(b, pt.p, rng);
    if (k >= 2) return k;
  }
}

std::int64_t hypergeometric(std::int64_t population, std::int64_t marked, std::int64_t draws, Rng& rng) {
  if (draws > population / 2) return marked - hypergeometric(population, marked, population - draws, rng);
  std::int64_t hits = 0, left = population, marked_left = marked;
  for (std::int64_t i = 0; i < draws && marked_left > 0; ++i) {
    if (rng.uniform() * static_cast<double>(left) < static_cast<double>(marked_left)) {
      ++hits;
      --marked_left;
    }
    --left;
  }
  return hits;
}

}  // namespace coalab
