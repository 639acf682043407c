#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "coalab/measure.hpp"
#include "coalab/rng.hpp"
#include "coalab/sampling.hpp"

namespace coalab {

enum class MergerSource : std::uint8_t { kingman, star, atom, density };

struct MergerEvent {
  double t;
  std::int64_t blocks_before;
  std::int64_t k;
  double p;  // 0 for the atom at 0, 1 for the atom at 1
  MergerSource source;
};

struct CoalescentPath {
  std::int64_t n = 0;
  std::vector<MergerEvent> events;
  double tau = 0.0;
  std::uint64_t rng_seed = 0;
  std::uint64_t replicate = 0;
  std::uint64_t measure_fingerprint = 0;
};

/// Throws std::logic_error naming the first broken path invariant.
void validate_path(const CoalescentPath& path);

/// Exact Gillespie simulation of the block-counting process. Holding times
/// come from thinning a dominating Poisson process, which leaves the law of
/// the jump chain and of the holding times unchanged. Immutable after
/// construction; safe to share between threads.
class CoalescentSimulator {
 public:
  explicit CoalescentSimulator(const LambdaMeasure& m);

  const LambdaMeasure& measure() const { return m_; }

  CoalescentPath simulate_path(std::int64_t n, std::uint64_t seed, std::uint64_t replicate = 0) const;

  /// Absorption time only (no event log).
  double absorption_time(std::int64_t n, Rng& rng) const;

  /// reps samples of τ_n; replicate j uses stream (seed, j). The result does
  /// not depend on `threads`.
  std::vector<double> absorption_sample(std::int64_t n, std::size_t reps, std::uint64_t seed,
                                        unsigned threads) const;

  /// First merger at state b: returns k. Used to test the merger-size law.
  std::int64_t first_merger_size(std::int64_t b, Rng& rng) const;

  struct PairedTimes {
    double full;
    double truncated;
  };

  /// Runs the coalescent for Λ and for Λ restricted to [epsilon, 1] on one
  /// event stream. Points with p >= epsilon act on both; every full-process
  /// block is a union of truncated-process blocks, so τ_full <= τ_truncated.
  PairedTimes paired_absorption(std::int64_t n, double epsilon, Rng& rng) const;

  std::uint64_t bound_violations() const { return sampler_.bound_violations(); }

 private:
  template <class OnEvent>
  double run(std::int64_t n, Rng& rng, OnEvent&& on_event) const;

  LambdaMeasure m_;
  EnvelopeSampler sampler_;
  std::uint64_t fingerprint_;
};

/// E[τ_b] for b = 0..n_max (entries 0 and 1 are 0) by first-step analysis
/// over exact rates: E[τ_b] = 1/λ_b + Σ_k P(K=k) E[τ_{b-k+1}].
std::vector<double> exact_expected_absorption(const LambdaMeasure& m, std::int64_t n_max);

}  // namespace coalab
