#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tilelab/matrix.hpp"
#include "tilelab/substitution.hpp"
#include "tilelab/symbolic.hpp"

namespace tilelab {

struct LyapunovOptions {
  std::size_t reorth_every = 5;
  std::size_t batches = 20;
  std::size_t burn_in = 0;  // 0: max(100, steps / 100)
  std::size_t replicas = 1;
  std::size_t threads = 1;
};

struct LyapunovReport {
  std::vector<double> exponents;        // nats per level, descending; -inf marks a collapsed direction
  std::vector<double> standard_errors;  // batch means, floored at kStandardErrorFloor
  std::vector<int> multiplicities;      // size of the group each exponent belongs to
  std::vector<int> groups;              // group index per exponent
  std::vector<double> normalized;       // exponents / exponents[0]
  std::size_t steps = 0;
  std::uint64_t seed = 0;
  std::string measure;

  // Distinct exponents (one per group) in descending order.
  std::vector<double> distinct() const;
};

// Accumulated round-off of the QR recursion; deterministic products would
// otherwise report a zero error bar.
inline constexpr double kStandardErrorFloor = 1e-12;

LyapunovReport lyapunov_spectrum(const RuleFamily& family, const MeasureSpec& measure, std::size_t steps,
                                 std::uint64_t seed, std::size_t reorth_every = 5, LyapunovOptions options = {});
// Same estimator along a fixed sequence (single replica).
LyapunovReport lyapunov_along(const RuleFamily& family, const SymbolSequence& x, std::size_t steps,
                              LyapunovOptions options = {});

struct TopDirection {
  BigVector exact;          // A_1^T ... A_depth^T 1, the dominant row direction of A_depth ... A_1
  std::vector<double> unit;
  double gap_ratio = 0.0;   // sigma_2 / sigma_1 of the product
};

TopDirection top_left_direction(const RuleFamily& family, const SymbolSequence& x, std::size_t depth);

BigVector apply_cocycle(const std::vector<IntMatrix>& matrices, const BigVector& v);
RationalVector apply_cocycle(const std::vector<IntMatrix>& matrices, const RationalVector& v);

// sum_s mu(s) log|det A_s| for a Bernoulli measure; -inf when some det vanishes.
double expected_log_det(const RuleFamily& family, const MeasureSpec& measure);

}  // namespace tilelab
