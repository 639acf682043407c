#pragma once

#include <cstdint>
#include <vector>

#include "coalab/functionals.hpp"
#include "coalab/measure.hpp"

namespace coalab {

/// h_b(p)/p^2 with h_b(p) = 1 - (1-p)^b - b p (1-p)^(b-1), the probability
/// that a p-merger hits at least two of b blocks, divided by p^2. Equals
/// C(b,2) in the limit p -> 0. b is real so that huge block counts work.
double h_over_p2(const PPoint& pt, double b);

/// (b p - 1 + (1-p)^b)/p^2, limit C(b,2) at p -> 0.
double gamma_weight(const PPoint& pt, double b);

/// λ_{b,k} = ∫ p^(k-2) (1-p)^(b-k) Λ(dp).
double lambda_bk(const LambdaMeasure& m, std::int64_t b, std::int64_t k, quad::Tolerance tol = {});

/// λ_b^tot = ∫ h_b(p) Λ(dp)/p^2.
double total_merger_rate(const LambdaMeasure& m, std::int64_t b, quad::Tolerance tol = {});

struct MergerRateTable {
  std::int64_t b = 0;
  /// rates[k-2] = C(b,k) λ_{b,k}, k = 2..b.
  std::vector<double> rates;
  double total = 0.0;
};

/// Every C(b,k) λ_{b,k} by its own quadrature; total is their sum.
MergerRateTable merger_rate_table(const LambdaMeasure& m, std::int64_t b, quad::Tolerance tol = {});

/// Entry k-2 is P(K = k) = C(b,k) λ_{b,k} / λ_b^tot.
std::vector<double> merger_size_pmf(const LambdaMeasure& m, std::int64_t b, quad::Tolerance tol = {});

/// Given the weighted rates of row b+1, returns row b, using
/// λ_{b,k} = λ_{b+1,k} + λ_{b+1,k+1}.
std::vector<double> step_down_row(const std::vector<double>& row_above);

/// γ_b = Σ_k (k-1) C(b,k) λ_{b,k} = ∫ (b p - 1 + (1-p)^b) Λ(dp)/p^2.
double gamma_b(const LambdaMeasure& m, std::int64_t b, quad::Tolerance tol = {});

enum class CdiVerdict { comes_down, stays_infinite, inconclusive };

const char* to_string(CdiVerdict v);

struct CdiDiagnostic {
  double partial_sum = 0.0;  // Σ_{b=2}^B 1/γ_b
  CdiVerdict verdict = CdiVerdict::inconclusive;
  /// log2(γ_{2b}/γ_b) at b = B/2, B/4, ... (largest b first).
  std::vector<double> exponents;
};

/// Heuristic verdict on coming down from infinity, from the growth exponent
/// of γ_b over the last doublings below B: comes_down when the last three
/// exponents are all >= 1.5 (so Σ 1/γ_b converges like Σ b^-1.5),
/// stays_infinite when they are all <= 1.25, inconclusive otherwise.
CdiDiagnostic cdi_diagnostic(const LambdaMeasure& m, std::int64_t B, quad::Tolerance tol = {});

}  // namespace coalab
