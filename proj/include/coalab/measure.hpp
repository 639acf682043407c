#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "coalab/coordinates.hpp"

namespace coalab {

struct Atom {
  double location;  // in (0,1)
  double mass;
};

/// Lebesgue density `mass` on (0,1); mass 1 is the Bolthausen-Sznitman measure.
struct UniformDensity {
  double mass;
};

/// (1 + log(1/p))^-gamma dp.
struct LogGammaDensity {
  double gamma;
};

/// mass * p^(a-1) (1-p)^(b-1) / B(a,b).
struct BetaDensity {
  double a;
  double b;
  double mass;
};

/// Piecewise-constant density on disjoint cells [lower[i], upper[i]).
struct TableDensity {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> value;
  std::string source;
};

using Density = std::variant<UniformDensity, LogGammaDensity, BetaDensity, TableDensity>;

double density_value(const Density& d, const PPoint& pt);

/// Points in the s coordinate where the density is not smooth.
std::vector<double> density_breakpoints(const Density& d);

/// Finite non-zero measure on [0,1]: atoms at 0 and 1, interior atoms and a
/// sum of density components. Immutable once constructed.
class LambdaMeasure {
 public:
  /// Validates every invariant; throws SemanticError on violation.
  LambdaMeasure(double atom_at_zero, double atom_at_one, std::vector<Atom> interior_atoms,
                std::vector<Density> densities, std::string spec = {});

  double atom_at_zero() const { return atom_at_zero_; }
  double atom_at_one() const { return atom_at_one_; }
  const std::vector<Atom>& interior_atoms() const { return interior_atoms_; }
  const std::vector<Density>& densities() const { return densities_; }
  bool has_density() const { return !densities_.empty(); }

  /// Sum of the density components at a point.
  double density(const PPoint& pt) const;
  /// Sorted, de-duplicated non-smooth points of all density components.
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  double total_mass() const { return total_mass_; }
  const std::string& spec() const { return spec_; }
  std::uint64_t fingerprint() const;

 private:
  double atom_at_zero_;
  double atom_at_one_;
  std::vector<Atom> interior_atoms_;
  std::vector<Density> densities_;
  std::vector<double> breakpoints_;
  double total_mass_ = 0.0;
  std::string spec_;
};

/// Parses the '+'-separated measure grammar:
///
///   spec    := term ('+' term)*
///   term    := 'atom:' loc ':' mass | 'density:' family
///   family  := 'uniform:' mass | 'log_gamma:' gamma | 'beta:' a ':' b ':' mass
///            | 'table:' file-path
///
/// Throws ParseError (with byte position) or SemanticError.
LambdaMeasure parse_measure(std::string_view spec);

/// Reads a table density file: one cell per line, "lower upper value"
/// separated by whitespace or commas; '#' starts a comment.
TableDensity read_table_density(const std::string& path);

}  // namespace coalab
