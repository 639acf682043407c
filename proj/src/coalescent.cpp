#include "coalab/coalescent.hpp"

#include <map>
#include <numeric>
#include <stdexcept>

#include "coalab/error.hpp"
#include "coalab/parallel.hpp"
#include "coalab/rates.hpp"

namespace coalab {

void validate_path(const CoalescentPath& path) {
  auto fail = [](const std::string& what) { throw std::logic_error("invalid coalescent path: " + what); };
  std::int64_t b = path.n;
  double last_t = 0.0;
  for (std::size_t i = 0; i < path.events.size(); ++i) {
    const auto& e = path.events[i];
    if (e.blocks_before != b) fail("blocks_before mismatch at event " + std::to_string(i));
    if (e.k < 2 || e.k > b) fail("merger size out of range at event " + std::to_string(i));
    if (!(e.t > last_t) && i > 0) fail("event times not increasing at event " + std::to_string(i));
    if (!(e.t >= 0.0)) fail("negative time");
    last_t = e.t;
    b -= e.k - 1;
  }
  if (path.n >= 2 && b != 1) fail("path does not end in one block");
  if (path.n >= 2 && path.tau != path.events.back().t) fail("tau differs from the last event time");
}

CoalescentSimulator::CoalescentSimulator(const LambdaMeasure& m)
    : m_(m), sampler_(m), fingerprint_(m.fingerprint()) {}

template <class OnEvent>
double CoalescentSimulator::run(std::int64_t n, Rng& rng, OnEvent&& on_event) const {
  const auto& atoms = m_.interior_atoms();
  std::vector<PPoint> atom_pts;
  for (const auto& a : atoms) atom_pts.push_back(point_at_p(a.location));
  std::vector<double> atom_h(atoms.size()), atom_rate(atoms.size());

  std::int64_t b = n;
  double t = 0.0;
  while (b > 1) {
    const double bd = static_cast<double>(b);
    const double r0 = m_.atom_at_zero() * bd * (bd - 1.0) / 2.0;
    const double r1 = m_.atom_at_one();
    double ratoms = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      atom_h[i] = h_over_p2(atom_pts[i], bd);
      atom_rate[i] = atoms[i].mass * atom_h[i];
      ratoms += atom_rate[i];
    }
    const auto win = sampler_.window(bd);
    const double total = r0 + r1 + ratoms + win.rate();

    std::int64_t k = 0;
    double p = 0.0;
    MergerSource src = MergerSource::density;
    while (k == 0) {
      t += rng.exponential(total);
      double u = rng.uniform() * total;
      if (u < r0) {
        k = 2;
        p = 0.0;
        src = MergerSource::kingman;
        break;
      }
      u -= r0;
      if (u < r1) {
        k = b;
        p = 1.0;
        src = MergerSource::star;
        break;
      }
      u -= r1;
      if (u < ratoms) {
        std::size_t i = 0;
        while (i + 1 < atoms.size() && u >= atom_rate[i]) u -= atom_rate[i++];
        k = conditioned_binomial(b, atom_pts[i], atom_h[i], rng);
        p = atoms[i].location;
        src = MergerSource::atom;
        break;
      }
      const auto prop = sampler_.propose(win, rng);
      const double h = h_over_p2(prop.pt, bd);
      if (rng.uniform() < prop.ratio * h / prop.envelope) {
        k = conditioned_binomial(b, prop.pt, h, rng);
        p = prop.pt.p;
      }
    }
    if (!on_event(t, b, k, p, src)) break;
    b -= k - 1;
  }
  return t;
}

CoalescentPath CoalescentSimulator::simulate_path(std::int64_t n, std::uint64_t seed, std::uint64_t replicate) const {
  if (n < 2) throw DomainError("need n >= 2");
  CoalescentPath path;
  path.n = n;
  path.rng_seed = seed;
  path.replicate = replicate;
  path.measure_fingerprint = fingerprint_;
  Rng rng(seed, replicate);
  path.tau = run(n, rng, [&](double t, std::int64_t b, std::int64_t k, double p, MergerSource src) {
    path.events.push_back({t, b, k, p, src});
    return true;
  });
#ifndef NDEBUG
  validate_path(path);
#endif
  return path;
}

double CoalescentSimulator::absorption_time(std::int64_t n, Rng& rng) const {
  if (n < 2) throw DomainError("need n >= 2");
  return run(n, rng, [](double, std::int64_t, std::int64_t, double, MergerSource) { return true; });
}

std::vector<double> CoalescentSimulator::absorption_sample(std::int64_t n, std::size_t reps, std::uint64_t seed,
                                                           unsigned threads) const {
  if (reps < 1) throw DomainError("need reps >= 1");
  std::vector<double> out(reps);
  parallel_for(reps, threads, [&](std::size_t j) {
    Rng rng(seed, j);
    out[j] = absorption_time(n, rng);
  });
  return out;
}

std::int64_t CoalescentSimulator::first_merger_size(std::int64_t b, Rng& rng) const {
  std::int64_t size = 0;
  run(b, rng, [&](double, std::int64_t, std::int64_t k, double, MergerSource) {
    size = k;
    return false;
  });
  return size;
}

CoalescentSimulator::PairedTimes CoalescentSimulator::paired_absorption(std::int64_t n, double epsilon,
                                                                        Rng& rng) const {
  if (n < 2) throw DomainError("need n >= 2");
  const auto& atoms = m_.interior_atoms();
  std::vector<PPoint> atom_pts;
  for (const auto& a : atoms) atom_pts.push_back(point_at_p(a.location));
  const bool star_shared = epsilon <= 1.0;

  std::int64_t b = n, bt = n;  // full, truncated
  double t = 0.0;
  PairedTimes out{0.0, 0.0};
  auto apply = [&](std::int64_t k_full, std::int64_t k_trunc) {
    if (k_trunc >= 2) {
      bt -= k_trunc - 1;
      if (bt == 1) out.truncated = t;
    }
    if (b >= 2 && k_full >= 2) {
      b -= k_full - 1;
      if (b == 1) out.full = t;
    }
  };

  while (bt > 1 || b > 1) {
    const double bd = static_cast<double>(b), btd = static_cast<double>(bt);
    const double r0 = b >= 2 ? m_.atom_at_zero() * bd * (bd - 1.0) / 2.0 : 0.0;
    const double r1 = m_.atom_at_one();
    std::vector<double> rate(atoms.size()), h(atoms.size());
    double ratoms = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const bool shared = atoms[i].location >= epsilon;
      const double bb = shared ? btd : bd;
      h[i] = (shared ? bt : b) >= 2 ? h_over_p2(atom_pts[i], bb) : 0.0;
      rate[i] = atoms[i].mass * h[i];
      ratoms += rate[i];
    }
    const auto win = sampler_.window(btd);
    const double total = r0 + r1 + ratoms + win.rate();

    bool done = false;
    while (!done) {
      t += rng.exponential(total);
      double u = rng.uniform() * total;
      done = true;
      if (u < r0) {
        apply(2, 0);
      } else if ((u -= r0) < r1) {
        if (star_shared)
          apply(b, bt);
        else
          apply(b, 0);
      } else if ((u -= r1) < ratoms) {
        std::size_t i = 0;
        while (i + 1 < atoms.size() && u >= rate[i]) u -= rate[i++];
        if (atoms[i].location >= epsilon) {
          const auto kt = conditioned_binomial(bt, atom_pts[i], h[i], rng);
          apply(hypergeometric(bt, kt, b, rng), kt);
        } else {
          apply(conditioned_binomial(b, atom_pts[i], h[i], rng), 0);
        }
      } else {
        const auto prop = sampler_.propose(win, rng);
        if (prop.pt.p >= epsilon) {
          const double ht = h_over_p2(prop.pt, btd);
          if (rng.uniform() < prop.ratio * ht / prop.envelope) {
            const auto kt = conditioned_binomial(bt, prop.pt, ht, rng);
            apply(hypergeometric(bt, kt, b, rng), kt);
          } else {
            done = false;
          }
        } else if (b >= 2) {
          const double hf = h_over_p2(prop.pt, bd);
          if (rng.uniform() < prop.ratio * hf / prop.envelope)
            apply(conditioned_binomial(b, prop.pt, hf, rng), 0);
          else
            done = false;
        } else {
          done = false;
        }
      }
    }
  }
  return out;
}

std::vector<double> exact_expected_absorption(const LambdaMeasure& m, std::int64_t n_max) {
  if (n_max < 2) throw DomainError("need n_max >= 2");
  if (n_max > 10000) throw DomainError("exact oracle limited to n_max <= 10000");
  constexpr std::int64_t kBlock = 64;
  std::map<std::int64_t, std::vector<double>> saved;
  {
    auto row = merger_rate_table(m, n_max).rates;
    saved[n_max] = row;
    for (std::int64_t b = n_max - 1; b >= 2; --b) {
      row = step_down_row(row);
      if ((b - 2) % kBlock == 0) saved[b] = row;
    }
  }
  std::vector<double> e(static_cast<std::size_t>(n_max + 1), 0.0);
  for (std::int64_t c = 2; c <= n_max; c += kBlock) {
    const std::int64_t last = std::min(c + kBlock - 1, n_max);
    auto it = saved.lower_bound(last);
    std::int64_t b = it->first;
    std::vector<double> row = it->second;
    std::vector<std::vector<double>> block(static_cast<std::size_t>(last - c + 1));
    while (true) {
      if (b <= last) block[static_cast<std::size_t>(b - c)] = row;
      if (b == c) break;
      row = step_down_row(row);
      --b;
    }
    for (std::int64_t bb = c; bb <= last; ++bb) {
      const auto& r = block[static_cast<std::size_t>(bb - c)];
      const double total = std::accumulate(r.begin(), r.end(), 0.0);
      if (!(total > 0.0)) throw DomainError("zero total merger rate");
      double acc = 1.0;
      for (std::size_t i = 0; i < r.size(); ++i) {
        const std::int64_t k = static_cast<std::int64_t>(i) + 2;
        acc += r[i] * e[static_cast<std::size_t>(bb - k + 1)];
      }
      e[static_cast<std::size_t>(bb)] = acc / total;
    }
  }
  return e;
}

}  // namespace coalab
