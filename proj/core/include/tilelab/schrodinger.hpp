#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "tilelab/cocycle.hpp"
#include "tilelab/ergodic.hpp"
#include "tilelab/tiling.hpp"

namespace tilelab {

struct Puncture {
  Vec2 point;
  int type = 0;
  std::size_t tile = 0;  // index into the source patch
};

// Punctures of a patch generated inside `source`. The region records where
// the tiling is known, which bounds where pattern classes are well defined.
struct PunctureSet {
  int dimension = 2;
  std::vector<Puncture> points;
  Region source;
  Rational min_gap2{0};  // squared minimum distance between punctures
  double tile_reach = 0.0;  // largest puncture-to-vertex distance over prototiles

  double min_gap() const;
};

PunctureSet puncture_set(const RuleFamily& family, const Patch& patch, const Region& source);

// Off-diagonal value for ordered pairs (p, q) with 0 < |q - p| <= range.
// Types of -1 match anything; a displacement, when given, must equal q - p.
struct HopRule {
  std::string from_pattern;  // empty matches anything
  int from_type = -1;
  int to_type = -1;
  std::optional<Vec2> displacement;
  Rational re{0};
  Rational im{0};
};

struct KernelSpec {
  Rational range{1};
  // Diagonal: value by pattern class when listed, else by tile type, else 0.
  RationalVector diagonal_by_type;
  std::vector<std::pair<std::string, Rational>> diagonal_by_pattern;  // pattern id -> value
  // Adds minus the sum of the row's off-diagonal real parts (within the
  // window), which turns an adjacency kernel into a graph Laplacian.
  bool laplacian_diagonal = false;
  // First matching rule wins; pairs without a rule get hop_default.
  std::vector<HopRule> hops;
  Rational hop_default{0};
  bool hermitian = true;
};

// Range times the largest difference between two kernel values. Changing the
// pattern inside the range ball moves an entry by at most L_k / R_k.
Rational kernel_lipschitz(const KernelSpec& kernel);

// Constellation of punctures (type, displacement) within `radius`, as a
// stable id string "t<type>:" followed by a 16-hex-digit hash.
std::string pattern_id(const PunctureSet& punctures, std::size_t index, const Rational& radius);

struct MatrixEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  Rational re{0};
  Rational im{0};
};

struct WindowedOperator {
  Region window;
  int dimension = 2;
  std::vector<std::size_t> sites;     // puncture indices, one per row
  std::vector<Vec2> points;
  std::vector<int> types;
  std::vector<std::string> patterns;  // empty unless the kernel reads patterns
  RationalVector diagonal;            // exact diagonal
  std::vector<MatrixEntry> entries;   // exact nonzero entries, diagonal included
  Eigen::SparseMatrix<std::complex<double>> matrix;
  bool hermitian = true;
  Rational range{0};
  Rational lipschitz{0};

  std::size_t size() const { return sites.size(); }
};

class IncompletePatternError : public StructuralError {
 public:
  using StructuralError::StructuralError;
};

WindowedOperator build_operator(const KernelSpec& kernel, const PunctureSet& punctures, const Region& window);

// Sum of the diagonal at punctures inside the subregion (closed).
Rational windowed_trace(const WindowedOperator& op, const Region& subregion);
// Sum of the diagonal at punctures inside the footprints of the given nodes.
Rational windowed_trace(const WindowedOperator& op, SupertileTree& tree, const std::vector<SupertileNode>& nodes);

// Depth-0 observable whose integral over a tile of type j is its diagonal
// value; only for kernels with a type-keyed diagonal.
TLCObservable induced_observable(const KernelSpec& kernel, const RuleFamily& family);

struct TraceComparison {
  Rational trace;
  Rational integral;
  std::size_t pieces = 0;
  std::size_t sites = 0;
};

// Builds the operator on T*B from a patch generated with the required
// margin, and compares the trace over the interior supertiles of T*B with
// the ergodic integral of the induced observable over the same supertiles.
TraceComparison interior_trace_check(const KernelSpec& kernel, SupertileTree& tree, const Region& base,
                                     const Rational& T);

struct IDSCurve {
  std::size_t window = 0;
  std::size_t points = 0;
  std::vector<double> values;  // IDS at each energy
  bool dense = true;
};

struct IDSReport {
  std::vector<double> energies;
  std::vector<IDSCurve> curves;
  std::vector<double> sup_differences;  // |IDS_{i+1} - IDS_i|_inf
};

inline constexpr std::size_t kDenseEigenLimit = 4000;

// Eigenvalues of a hermitian operator (dense solver), ascending.
std::vector<double> eigenvalues(const WindowedOperator& op);
// Number of eigenvalues <= energy, by LDL^T inertia of A - energy.
std::size_t count_eigenvalues_below(const WindowedOperator& op, double energy);

IDSReport ids_estimate(const std::vector<WindowedOperator>& ops, const std::vector<double>& energies,
                       std::size_t threads = 1);

// lambda_r / lambda_1 > (d - 1) / d, r 1-based over the distinct exponents.
bool pulled_back_trace_flag(const LyapunovReport& report, std::size_t r, int dimension);

struct TraceDeviation {
  double slope = 0.0;
  double running_max_slope = 0.0;
  double predicted = 0.0;  // d * lambda_r / lambda_1
  double ratio = 0.0;      // lambda_r / lambda_1
  bool trace_flag = false;
  double pairing = 0.0;    // |u . diag(vol) w| / (|u| |diag(vol) w|)
  bool zero_trace = false; // pairing < 1e-10
};

// Trace deviation along a special averaging sequence for a kernel whose
// induced observable pairs to zero with the top left direction.
TraceDeviation trace_deviation(const KernelSpec& kernel, const RuleFamily& family, const SymbolSequence& x,
                               const SpecialAveragingSequence& seq, const LyapunovReport& spectrum, std::size_t r,
                               std::size_t direction_depth = 40);  // capped at the sequence length

}  // namespace tilelab
