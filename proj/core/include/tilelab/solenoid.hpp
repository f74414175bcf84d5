#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tilelab/rational.hpp"

namespace tilelab {

// d-dimensional solenoid with subdivision radii q_1, q_2, ...
// The sequence is prefix followed by period repeated forever (period may be empty).
struct SolenoidSpec {
  int d = 1;
  std::vector<int> prefix;
  std::vector<int> period;

  SolenoidSpec() = default;
  SolenoidSpec(int dimension, std::vector<int> prefix, std::vector<int> period = {});

  // Number of levels available; -1 when the tail is periodic.
  long levels() const;
  int q(int k) const;         // q_k, k >= 1
  BigInt q_prod(int n) const; // q_(n) = q_1 ... q_n, q_(0) = 1
};

// "prefix|period": "2,3" is finite, "|2,3" is 2,3,2,3,..., "5|2" is 5,2,2,...
SolenoidSpec parse_solenoid(int dimension, const std::string& text);

// Depth-m observable. values[c] is the value on the level-m grid cell
// c = r_1 + r_2 q_(m) + ... (x fastest), where r_i in [0, q_(m)) is the
// mixed-radix position of the tile inside its level-m supertile.
struct CylinderObservable {
  int depth = 0;
  RationalVector values;
};

// Level-k edge (1-based, in 1..q_k^d) from per-dimension digits, x fastest.
int edge_from_digits(const SolenoidSpec& spec, int k, const std::vector<int>& digits);
std::vector<int> digits_from_edge(const SolenoidSpec& spec, int k, int edge);
// Grid cell index of the depth-m cylinder given by edges e_1..e_m.
std::size_t cell_from_path(const SolenoidSpec& spec, const std::vector<int>& edges);

Rational cylinder_measure(const SolenoidSpec& spec, int k);
Rational mean(const SolenoidSpec& spec, const CylinderObservable& f);

// Supremum of sum_i osc(f, C_i) over partitions of the path space into
// cylinder sets. Cylinders of depth >= m carry no oscillation, so the
// supremum is attained among depths <= m.
Rational variation(const SolenoidSpec& spec, const CylinderObservable& f);

CylinderObservable random_observable(const SolenoidSpec& spec, int depth, std::uint64_t seed, int max_value = 9);

// A point of the solenoid: the level-k digits of the tile holding the origin
// (digits[k-1][i], dimension i) and the origin's offset y in that tile.
struct BasePoint {
  std::vector<std::vector<int>> digits;
  std::vector<Rational> y;
};

BasePoint random_base_point(const SolenoidSpec& spec, int levels, std::uint64_t seed);

// Exact integral of f along the orbit over [0, q_(n)]^d.
Rational orbit_integral(const SolenoidSpec& spec, const CylinderObservable& f, const BasePoint& p, int n);

struct DKRow {
  int n = 0;
  Rational S;
  Rational expected;  // q_(n)^d mu(f)
  Rational gap;
};

struct DKReport {
  Rational var;
  std::vector<DKRow> rows;
  Rational max_gap;
  bool holds = true;
};

DKReport dk_check(const SolenoidSpec& spec, const CylinderObservable& f, const BasePoint& p, int n_min, int n_max);

}  // namespace tilelab
