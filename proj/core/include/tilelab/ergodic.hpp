#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "tilelab/bratteli.hpp"
#include "tilelab/cocycle.hpp"
#include "tilelab/tiling.hpp"

namespace tilelab {

// A length-m path class: the address of a tile inside its level-m supertile.
struct PathClass {
  int origin = 0;          // level-0 vertex
  std::vector<int> slots;  // canonical slots at levels 1..m
  int top = 0;             // level-m vertex
};

// Classes ordered by (origin, slots). For m = 0 there is one class per vertex.
std::vector<PathClass> path_classes(const RuleFamily& family, const SymbolSequence& x, int depth);

// Transversally locally constant observable. Depth 0: one weight per
// prototile type (value of f on that tile). Depth m: one weight per
// path class, indexed as in path_classes(family, x, m). Real weights only;
// a complex observable is carried as two real ones.
struct TLCObservable {
  int depth = 0;
  RationalVector weights;

  static TLCObservable constant(std::size_t types, const Rational& value = 1);
  static TLCObservable per_type(RationalVector weights);
};

// V^0 .. V^K. V^k_v is the integral of f over a level-k supertile of type v.
// For k < depth the supertile is taken inside the lexicographically least
// continuation up to level depth.
std::vector<RationalVector> ergodic_vectors(const TLCObservable& f, const RuleFamily& family, const SymbolSequence& x,
                                            int K);

struct CotraceEstimate {
  RationalVector a;                 // level-0 vector shadowing the V^k
  std::vector<double> residuals;    // r_k = |V^{k+1} - A_{k+1} V^k|, k = 0..K-1 (max norm)
  std::vector<double> shadow_gaps;  // |A_k..A_1 a - V^k| / |V^k|, k = 0..K
};

CotraceEstimate cotrace_shadow(const TLCObservable& f, const RuleFamily& family, const SymbolSequence& x, int K);

// Depth-0 weights w with u . diag(vol) w = 0 for the top left direction u
// at the given depth, scaled so max |w_j| = 1.
TLCObservable make_zero_trace_observable(const RuleFamily& family, const SymbolSequence& x, std::size_t depth);

// Integral of a depth-0 observable over the union of the given nodes.
Rational integrate_nodes(const std::vector<RationalVector>& V, const std::vector<SupertileNode>& nodes);
// Integral of a depth-0 observable tile by tile.
Rational integrate_patch(const TLCObservable& f, const RuleFamily& family, const Patch& patch);

struct DeviationReport {
  std::vector<double> T;
  std::vector<Rational> integrals;
  std::vector<double> log_T;
  std::vector<double> log_abs_integral;  // only usable (nonzero) entries
  double slope = 0.0;                    // least squares over the top half
  double slope_error = 0.0;
  double running_max_slope = 0.0;
};

DeviationReport deviation_over_regions(const TLCObservable& f, SupertileTree& tree, const Region& base,
                                       const std::vector<Rational>& T_grid);

// max(d * lambda_j / lambda_1, d - 1); j is 1-based over the full spectrum.
double deviation_cap(const LyapunovReport& report, std::size_t j, int dimension);

struct SpecialEntry {
  int k = 0;            // recurrence time
  Rational T;           // theta_(k)^{-1} T_*
  Vec2 tau;             // translation in B_eps units
  SupertileNode anchor; // level k + window node of the base type hosting the superpatch
  std::vector<SupertileNode> pieces;  // the level-k supertiles of the superpatch (geometric only)
};

struct SpecialAveragingSequence {
  bool geometric = false;
  Patch base;                 // P_eps = O^-(T_* B) at unit scale
  Rational T_star{1};
  double hausdorff = 0.0;     // sampled distance between T_*^{-1} P_eps and B
  int window = 0;             // k': recurrence window length
  int base_type = 0;          // type of the level-k' central supertile holding P_eps
  Vec2 base_offset;           // its offset
  std::vector<long> counts;   // tile-type multiset of P_eps
  std::vector<SpecialEntry> entries;
};

struct SpecialOptions {
  int max_doublings = 12;
  std::size_t hausdorff_samples = 400;
  std::size_t tile_budget = 2000000;
};

SpecialAveragingSequence special_averaging_sequence(SupertileTree& tree, const Region& base, double epsilon,
                                                    std::size_t count, SpecialOptions options = {});

// Counts-only variant: the superpatch is a fixed multiset of level-k supertiles
// at every recurrence time of the window, with T_* = 1.
SpecialAveragingSequence combinatorial_sequence(const RuleFamily& family, const SymbolSequence& x,
                                                std::vector<long> counts, std::size_t count, int window = 1);

struct SequenceDeviation {
  std::vector<double> log_T;
  std::vector<double> log_abs_integral;
  std::vector<Rational> integrals;
  double slope = 0.0;               // least squares over the top half
  double running_max_slope = 0.0;   // least squares of the running max over the top half
};

SequenceDeviation deviation_along_sequence(const TLCObservable& f, const SpecialAveragingSequence& seq,
                                           const RuleFamily& family, const SymbolSequence& x);

// Sampled Hausdorff distance between the union of tiles (scaled by 1/T) and a region.
double sampled_hausdorff(const RuleFamily& family, const Patch& patch, const Rational& T, const Region& region,
                         std::size_t samples);

}  // namespace tilelab
