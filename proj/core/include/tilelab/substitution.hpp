#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tilelab/geometry.hpp"
#include "tilelab/matrix.hpp"
#include "tilelab/rational.hpp"

namespace tilelab {

struct Prototile {
  int id = 0;
  Polygon vertices;  // empty for matrix-only families
  Vec2 puncture;
  Rational volume{1};
  double rho = 0.0;  // puncture distance to the boundary
};

// f(x) = theta * x + tau maps the child prototile into the parent prototile.
// parent and child are indices into RuleFamily::prototiles.
struct Branch {
  int parent = 0;
  int child = 0;
  Vec2 tau;
};

struct SubstitutionRule {
  int id = 0;
  Rational theta{1, 2};
  std::vector<Branch> branches;  // canonical order: (parent, child, insertion)
  bool geometric = true;         // false: taus are absent, only multiplicities
};

struct RuleFamily {
  std::string name;
  int dimension = 2;
  std::vector<Prototile> prototiles;
  std::vector<SubstitutionRule> rules;

  std::size_t size() const { return prototiles.size(); }
  bool geometric() const;
  bool rule_geometric(std::size_t rule_index) const;
  // Symbols are 1-based.
  const SubstitutionRule& rule_for(int symbol) const;
  RationalVector volumes() const;
};

struct ValidationReport {
  std::vector<Rational> residual;  // vol(parent \ union of images), per parent
  std::vector<Rational> excess;    // volume of images outside the parent, per parent
  Rational max_overlap{0};
  Rational tolerance{0};
  bool pass = false;
};

ValidationReport validate_rule(const SubstitutionRule& rule, const std::vector<Prototile>& prototiles, int dimension,
                               const Rational& tol = ratio(1, 1000000000));

SubstitutionMatrix substitution_matrix(const SubstitutionRule& rule, std::size_t prototile_count);

// Builds a matrix-only rule whose branches realise the multiplicities of m.
SubstitutionRule matrix_rule(int id, const Rational& theta, const IntMatrix& m);

// Puts branches into canonical (parent, child, insertion) order.
void canonicalize(SubstitutionRule& rule);

// Fills volume, default puncture (centroid) and rho; checks simplicity,
// interior puncture and that the origin is interior.
void finalize_prototile(Prototile& tile, int dimension, bool puncture_given = false);

RuleFamily halfhex_family();           // rule 1 only, geometric
RuleFamily halfhex_modified_family();  // rule 2 only, matrix-only
RuleFamily halfhex_pair_family();      // symbol 1 = rule 1, symbol 2 = rule 2
RuleFamily solenoid_family(int dimension, const std::vector<int>& qs);
RuleFamily oned_family();
std::vector<RuleFamily> builtin_families();
RuleFamily builtin_family(std::string_view name);

// Linear map taking native half-hex lattice coordinates to the plane.
Vec2 halfhex_rotate(const Vec2& v, int steps);

RuleFamily parse_family_json(std::string_view text);
RuleFamily load_family(const std::string& path);
std::string family_to_json(const RuleFamily& family);

}  // namespace tilelab
