#include "coalab/measure.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "coalab/error.hpp"
#include "coalab/quadrature.hpp"

namespace coalab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double density_value(const Density& d, const PPoint& pt) {
  return std::visit(
      overloaded{
          [](const UniformDensity& u) { return u.mass; },
          [&](const LogGammaDensity& g) { return std::pow(1.0 - pt.log_p, -g.gamma); },
          [&](const BetaDensity& b) {
            const double lbeta = std::lgamma(b.a) + std::lgamma(b.b) - std::lgamma(b.a + b.b);
            return b.mass * std::exp((b.a - 1.0) * pt.log_p + (b.b - 1.0) * pt.log_q - lbeta);
          },
          [&](const TableDensity& t) {
            auto it = std::upper_bound(t.lower.begin(), t.lower.end(), pt.p);
            if (it == t.lower.begin()) return 0.0;
            const auto i = static_cast<std::size_t>(it - t.lower.begin()) - 1;
            return pt.p < t.upper[i] ? t.value[i] : 0.0;
          },
      },
      d);
}

std::vector<double> density_breakpoints(const Density& d) {
  std::vector<double> out;
  if (const auto* t = std::get_if<TableDensity>(&d)) {
    for (std::size_t i = 0; i < t->lower.size(); ++i) {
      for (double edge : {t->lower[i], t->upper[i]})
        if (edge > 0.0 && edge < 1.0) out.push_back(s_of_p(edge));
    }
  }
  return out;
}

LambdaMeasure::LambdaMeasure(double atom_at_zero, double atom_at_one, std::vector<Atom> interior_atoms,
                             std::vector<Density> densities, std::string spec)
    : atom_at_zero_(atom_at_zero),
      atom_at_one_(atom_at_one),
      interior_atoms_(std::move(interior_atoms)),
      densities_(std::move(densities)),
      spec_(std::move(spec)) {
  if (!(atom_at_zero_ >= 0.0) || !std::isfinite(atom_at_zero_)) throw SemanticError("atom mass at 0 must be finite and >= 0");
  if (!(atom_at_one_ >= 0.0) || !std::isfinite(atom_at_one_)) throw SemanticError("atom mass at 1 must be finite and >= 0");
  std::sort(interior_atoms_.begin(), interior_atoms_.end(),
            [](const Atom& a, const Atom& b) { return a.location < b.location; });
  for (std::size_t i = 0; i < interior_atoms_.size(); ++i) {
    const auto& a = interior_atoms_[i];
    if (!(a.location > 0.0 && a.location < 1.0)) throw SemanticError("interior atom location must lie in (0,1)");
    if (!(a.mass > 0.0) || !std::isfinite(a.mass)) throw SemanticError("atom mass must be finite and > 0");
    if (i > 0 && interior_atoms_[i - 1].location == a.location)
      throw SemanticError("duplicate atom at p=" + fmt(a.location));
  }

  double mass = atom_at_zero_ + atom_at_one_;
  for (const auto& a : interior_atoms_) mass += a.mass;

  for (const auto& d : densities_) {
    std::visit(overloaded{
                   [](const UniformDensity& u) {
                     if (!(u.mass > 0.0) || !std::isfinite(u.mass)) throw SemanticError("uniform mass must be > 0");
                   },
                   [](const LogGammaDensity& g) {
                     if (!std::isfinite(g.gamma)) throw SemanticError("log_gamma exponent must be finite");
                   },
                   [](const BetaDensity& b) {
                     if (!(b.a > 0.0 && b.b > 0.0 && std::isfinite(b.a) && std::isfinite(b.b)))
                       throw SemanticError("beta density is not integrable unless a > 0 and b > 0");
                     if (!(b.mass > 0.0) || !std::isfinite(b.mass)) throw SemanticError("beta mass must be > 0");
                   },
                   [](const TableDensity&) {},
               },
               d);
    auto bps = density_breakpoints(d);
    breakpoints_.insert(breakpoints_.end(), bps.begin(), bps.end());
    auto integrand = [&](double s) {
      const auto pt = point_at_s(s);
      return density_value(d, pt) * jacobian(pt, s);
    };
    auto r = quad::integrate_line(integrand, bps);
    if (r.status == quad::TailStatus::diverged || !std::isfinite(r.value))
      throw SemanticError("density is not integrable on (0,1)");
    mass += r.value;
  }
  std::sort(breakpoints_.begin(), breakpoints_.end());
  breakpoints_.erase(std::unique(breakpoints_.begin(), breakpoints_.end()), breakpoints_.end());

  if (!(mass > 0.0)) throw SemanticError("total mass must be > 0");
  total_mass_ = mass;
}

double LambdaMeasure::density(const PPoint& pt) const {
  double v = 0.0;
  for (const auto& d : densities_) v += density_value(d, pt);
  return v;
}

std::uint64_t LambdaMeasure::fingerprint() const {
  // Canonical text so that equivalent specs hash alike.
  std::string canon = "a0=" + fmt(atom_at_zero_) + ";a1=" + fmt(atom_at_one_);
  for (const auto& a : interior_atoms_) canon += ";atom=" + fmt(a.location) + ":" + fmt(a.mass);
  for (const auto& d : densities_) {
    canon += std::visit(overloaded{
                            [](const UniformDensity& u) { return ";uniform=" + fmt(u.mass); },
                            [](const LogGammaDensity& g) { return ";log_gamma=" + fmt(g.gamma); },
                            [](const BetaDensity& b) { return ";beta=" + fmt(b.a) + ":" + fmt(b.b) + ":" + fmt(b.mass); },
                            [](const TableDensity& t) {
                              std::string s = ";table=";
                              for (std::size_t i = 0; i < t.lower.size(); ++i)
                                s += fmt(t.lower[i]) + ":" + fmt(t.upper[i]) + ":" + fmt(t.value[i]) + ",";
                              return s;
                            },
                        },
                        d);
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

class SpecParser {
 public:
  explicit SpecParser(std::string_view text) : text_(text) {}

  LambdaMeasure parse() {
    double a0 = 0.0, a1 = 0.0;
    bool seen0 = false, seen1 = false;
    std::vector<Atom> atoms;
    std::vector<Density> densities;
    if (text_.empty()) throw ParseError("empty measure spec", 0);
    while (true) {
      const std::size_t term_start = pos_;
      if (accept("atom:")) {
        const std::size_t at = pos_;
        const double loc = number();
        expect(":");
        const double mass = number();
        if (!(loc >= 0.0 && loc <= 1.0))
          throw SemanticError("atom location " + fmt(loc) + " outside [0,1] (at position " + std::to_string(at) + ")");
        if (!(mass > 0.0)) throw SemanticError("atom mass must be > 0, got " + fmt(mass));
        if (loc == 0.0) {
          if (seen0) throw SemanticError("duplicate atom at p=0");
          seen0 = true;
          a0 = mass;
        } else if (loc == 1.0) {
          if (seen1) throw SemanticError("duplicate atom at p=1");
          seen1 = true;
          a1 = mass;
        } else {
          atoms.push_back({loc, mass});
        }
      } else if (accept("density:")) {
        if (accept("uniform:")) {
          densities.push_back(UniformDensity{positive(number(), "uniform mass")});
        } else if (accept("log_gamma:")) {
          densities.push_back(LogGammaDensity{number()});
        } else if (accept("beta:")) {
          const double a = number();
          expect(":");
          const double b = number();
          expect(":");
          const double mass = positive(number(), "beta mass");
          densities.push_back(BetaDensity{a, b, mass});
        } else if (accept("table:")) {
          std::size_t end = text_.find('+', pos_);
          if (end == std::string_view::npos) end = text_.size();
          if (end == pos_) throw ParseError("expected file path", pos_);
          const std::string path(text_.substr(pos_, end - pos_));
          pos_ = end;
          densities.push_back(read_table_density(path));
        } else {
          throw ParseError("expected density family (uniform, log_gamma, beta, table)", pos_);
        }
      } else {
        throw ParseError("expected 'atom:' or 'density:'", term_start);
      }
      if (pos_ == text_.size()) break;
      expect("+");
    }
    return LambdaMeasure(a0, a1, std::move(atoms), std::move(densities), std::string(text_));
  }

 private:
  bool accept(std::string_view token) {
    if (text_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  void expect(std::string_view token) {
    if (!accept(token)) throw ParseError("expected '" + std::string(token) + "'", pos_);
  }

  double number() {
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr == first) throw ParseError("expected a decimal number", pos_);
    pos_ += static_cast<std::size_t>(ptr - first);
    return v;
  }

  static double positive(double v, const char* what) {
    if (!(v > 0.0)) throw SemanticError(std::string(what) + " must be > 0, got " + fmt(v));
    return v;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

LambdaMeasure parse_measure(std::string_view spec) { return SpecParser(spec).parse(); }

TableDensity read_table_density(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SemanticError("cannot open table density file: " + path);
  struct Row {
    double lo, hi, v;
  };
  std::vector<Row> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    ls.imbue(std::locale::classic());
    Row r{};
    if (!(ls >> r.lo)) continue;
    std::string rest;
    if (!(ls >> r.hi >> r.v) || (ls >> rest))
      throw SemanticError(path + ":" + std::to_string(lineno) + ": expected 'lower upper value'");
    if (!(r.lo >= 0.0 && r.lo < r.hi && r.hi <= 1.0))
      throw SemanticError(path + ":" + std::to_string(lineno) + ": need 0 <= lower < upper <= 1");
    if (!(r.v >= 0.0) || !std::isfinite(r.v))
      throw SemanticError(path + ":" + std::to_string(lineno) + ": density value must be finite and >= 0");
    rows.push_back(r);
  }
  if (rows.empty()) throw SemanticError("table density file has no cells: " + path);
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.lo < b.lo; });
  TableDensity t;
  t.source = path;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].lo < rows[i - 1].hi) throw SemanticError("overlapping table cells in " + path);
    t.lower.push_back(rows[i].lo);
    t.upper.push_back(rows[i].hi);
    t.value.push_back(rows[i].v);
  }
  return t;
}

}  // namespace coalab
