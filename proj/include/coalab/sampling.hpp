#pragma once

#include <atomic>
#include <cstdint>
#include <limits>
#include <vector>

#include "coalab/coordinates.hpp"
#include "coalab/measure.hpp"
#include "coalab/rng.hpp"

namespace coalab {

/// Proposal process for the density part of Λ at block count b: a Poisson
/// process that dominates min(C(b,2), 1/p^2) Λ(dp), built from piecewise
/// constant bounds on cells of the s axis. Piece A (p below 1/sqrt(C(b,2)))
/// bounds C(b,2) Λ(dp), piece B bounds Λ(dp)/p^2.
class EnvelopeSampler {
 public:
  explicit EnvelopeSampler(const LambdaMeasure& m);

  bool empty() const { return lo_.empty(); }

  struct Window {
    double b2 = 0.0;      // C(b,2)
    double s_b = 0.0;     // boundary between pieces
    double s_max = 0.0;   // proposals restricted to s < s_max
    std::size_t c_b = 0;  // cell holding s_b
    std::size_t c_max = 0;
    double mass_a = 0.0;  // includes the C(b,2) factor
    double mass_b = 0.0;
    double rate() const { return mass_a + mass_b; }
  };

  /// Proposal masses at block count b, optionally restricted to s < s_max.
  Window window(double b, double s_max = std::numeric_limits<double>::infinity()) const;

  /// Piece B alone over s >= s_min: dominates Λ(dp)/p^2 on p >= p(s_min).
  /// Used for the large jumps of the subordinator.
  Window tail_window(double s_min) const;

  struct Proposal {
    PPoint pt;
    double s;
    /// Target over bound for the dominated intensity min(C(b,2), 1/p^2) Λ.
    double ratio;
    /// min(C(b,2), 1/p^2) at the point, as used by the piece.
    double envelope;
  };

  /// Draws a point from the normalised window. Requires w.rate() > 0.
  Proposal propose(const Window& w, Rng& rng) const;

  /// Number of proposals whose target exceeded the tabulated bound.
  std::uint64_t bound_violations() const { return violations_.load(); }

 private:
  std::size_t cell_of(double s) const;
  double mass_b_between(double s_lo, std::size_t c_lo, double s_hi, std::size_t c_hi) const;
  double target_a(const PPoint& pt, double s) const;
  double target_b(const PPoint& pt, double s) const;

  LambdaMeasure m_;
  std::vector<double> lo_, hi_;
  std::vector<double> bound_a_, bound_b_;
  std::vector<double> prefix_a_;  // prefix_a_[c] = Σ_{i<c} bound_a_i * width_i
  std::vector<double> suffix_b_;  // suffix_b_[c] = Σ_{i>=c} bound_b_i * width_i
  mutable std::atomic<std::uint64_t> violations_{0};
};

/// K ~ Binomial(b, p) conditioned on K >= 2. h_over_p2 is h_b(p)/p^2 at the
/// same point (the normalisation of the conditioned law).
std::int64_t conditioned_binomial(std::int64_t b, const PPoint& pt, double h_over_p2, Rng& rng);

/// Unconditioned Binomial(b, p).
std::int64_t binomial(std::int64_t b, double p, Rng& rng);

/// Number of marked items in a uniform sample of `draws` from `population`
/// items of which `marked` are marked.
std::int64_t hypergeometric(std::int64_t population, std::int64_t marked, std::int64_t draws, Rng& rng);

}  // namespace coalab
