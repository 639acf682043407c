#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "coalab/coalescent.hpp"
#include "coalab/functionals.hpp"
#include "coalab/measure.hpp"
#include "coalab/rng.hpp"
#include "coalab/sampling.hpp"

namespace coalab {

/// Lévy measure λ of the subordinator: the image of Λ(dp)/p^2 under
/// y = -log(1-p), split at y = δ. Jumps below δ are replaced by their mean
/// m_δ; jumps at or above δ form a compound Poisson stream. An atom of Λ at 1
/// gives jumps of infinite size.
class JumpMeasure {
 public:
  /// DomainError for a measure without dust (m_δ would be infinite).
  JumpMeasure(const LambdaMeasure& m, double delta);

  double delta() const { return delta_; }
  /// 1 - e^-δ, the smallest retained p.
  double p_delta() const { return p_delta_; }
  double s_delta() const { return s_delta_; }

  /// λ([δ, ∞]).
  double truncated_rate() const { return truncated_rate_; }
  /// ∫_{(0,δ)} y λ(dy).
  double compensator_drift() const { return m_delta_; }
  /// ∫_{(0,δ)} y^2 λ(dy).
  double removed_variance() const { return v_delta_; }
  /// ∫_{[δ,∞]} y λ(dy); +inf with an atom at 1.
  double truncated_mean() const { return truncated_mean_; }

  /// Rate of the dominating stream that draw() thins down to the jumps.
  double envelope_rate() const { return envelope_rate_; }

  struct Jump {
    PPoint pt;
    double y;  // -log(1-p); +inf for the atom at 1
    MergerSource source;
  };

  /// One event of the dominating stream; empty when thinned away.
  std::optional<Jump> draw(Rng& rng) const;

  const LambdaMeasure& measure() const { return m_; }
  const EnvelopeSampler& sampler() const { return *sampler_; }
  std::uint64_t bound_violations() const { return sampler_->bound_violations(); }

 private:
  LambdaMeasure m_;
  double delta_, p_delta_, s_delta_;
  double truncated_rate_ = 0.0, m_delta_ = 0.0, v_delta_ = 0.0, truncated_mean_ = 0.0;
  std::shared_ptr<const EnvelopeSampler> sampler_;
  EnvelopeSampler::Window tail_;
  std::vector<PPoint> big_atoms_;
  std::vector<double> big_rates_;
  double atom_rate_ = 0.0, star_rate_ = 0.0, envelope_rate_ = 0.0;
};

/// Largest δ in [1e-6, 0.5] with v_δ/σ² < 1e-4 (bisection on log δ); 1e-6
/// when σ² is infinite or no δ in the range qualifies.
double default_delta(const LambdaMeasure& m);

struct PassageRecord {
  double x;
  double t;
};

struct DriftedPath {
  double z = 0.0;
  double delta = 0.0;
  std::vector<std::pair<double, double>> jumps;  // (t, y)
  std::vector<PassageRecord> passages;          // in the order requested
  double final_time = 0.0;
  double final_value = 0.0;
  double jump_sum = 0.0;        // Σ y up to final_time
  double drift_integral = 0.0;  // ∫ f(Y_s) ds up to final_time
};

struct CoupledResult {
  CoalescentPath coalescent;  // events only when recorded
  DriftedPath drifted;        // jumps only when recorded
  double tau = 0.0;
  double sup_gap = 0.0;   // sup_{t<τ} |log N(t) - Y(t)|
  double y_at_tau = 0.0;  // Y(τ) after the last event
};

struct SupDeviation {
  double sup = 0.0;  // sup_{u<=t} |S_u - μu|
  double s_t = 0.0;  // S_t
};

/// Truncated subordinator S and the drifted process
/// Y_t = z - S_t + ∫ f(Y_s) ds. Between jumps Y follows dY/dt = f(Y) - m_δ,
/// integrated by fixed-step RK4 on a cached interpolant of f. Immutable after
/// construction; safe to share between threads.
class SubordinatorEngine {
 public:
  /// y_max bounds the tabulated range of f; above it f is evaluated directly.
  SubordinatorEngine(const LambdaMeasure& m, double delta, double y_max);

  /// Passage targets must be >= -4. Targets above z pass at t = 0.
  DriftedPath simulate_drifted(double z, const std::vector<double>& x_targets, Rng& rng,
                               bool log_jumps = true) const;

  /// T^z_x for replicates 0..reps-1 of `seed`.
  std::vector<double> passage_sample(double z, double x, std::size_t reps, std::uint64_t seed,
                                     unsigned threads) const;

  /// Block-counting process and Y started at log n, both driven by the jumps
  /// with p >= p_δ: a point p merges a Binomial(b, p) set of blocks when it
  /// hits at least two and moves Y down by -log(1-p). Points below p_δ act on
  /// the coalescent alone.
  CoupledResult coupled(std::int64_t n, Rng& rng, bool record = false) const;

  /// DomainError when μ is infinite.
  SupDeviation sup_deviation(double t, Rng& rng) const;

  const JumpMeasure& jumps() const { return jumps_; }
  const DriftTable& drift() const { return table_; }
  double mu() const { return mu_; }
  double step() const { return step_; }

 private:
  /// One RK4 step of size h from y; adds ∫ f over the step to *integral.
  double rk4(double y, double h, double* integral) const;
  /// Advances y over dt in steps of at most step_.
  double advance(double y, double dt, double* integral) const;

  JumpMeasure jumps_;
  DriftTable table_;
  double mu_;
  double step_;
};

/// ρ^z at the times in t_grid (non-decreasing, from 0): solves
/// dρ/dt = min(f(ρ), μ/2) - μ with ρ(0) = z by RK4 with step at most 1e-4.
/// Reaches 0 at flow_beta(m, z). DomainError when μ is infinite.
std::vector<double> rho_flow(const LambdaMeasure& m, double z, const std::vector<double>& t_grid);

}  // namespace coalab
