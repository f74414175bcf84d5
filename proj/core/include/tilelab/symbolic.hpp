#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tilelab {

// Counter-based SplitMix64: output i is mix(seed + (i + 1) * gamma).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next();
  double uniform();  // [0, 1) with 53 random bits
  // Independent stream derived from (seed, stream id).
  SplitMix64 split(std::uint64_t stream) const;
  std::uint64_t seed() const { return seed_; }

  static std::uint64_t mix(std::uint64_t z);

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

struct MeasureSpec {
  enum class Kind { bernoulli, markov };
  Kind kind = Kind::bernoulli;
  std::vector<double> probabilities;            // bernoulli
  std::vector<std::vector<double>> transition;  // markov, row stochastic
  std::vector<double> initial;                  // markov

  static MeasureSpec bernoulli(double p);  // symbol 1 with probability p, symbol 2 otherwise
  static MeasureSpec bernoulli(std::vector<double> probabilities);
  static MeasureSpec markov(std::vector<std::vector<double>> transition, std::vector<double> initial);

  std::size_t alphabet_size() const;
  void validate() const;  // throws StructuralError
  std::string describe() const;
};

// "bernoulli:p", "bernoulli:p1,p2,...", "markov:FILE" (JSON with "transition" and "initial").
MeasureSpec parse_measure(std::string_view text);

struct SymbolSequence {
  std::vector<int> positive;  // x_1, x_2, ...
  std::vector<int> negative;  // x_{-1}, x_{-2}, ...
  std::uint64_t seed = 0;
  std::string provenance;

  std::size_t size() const { return positive.size(); }
  int operator[](std::size_t k) const { return positive.at(k - 1); }  // 1-based
};

SymbolSequence sample_sequence(const MeasureSpec& measure, std::size_t length, std::uint64_t seed,
                               std::size_t negative_length = 0);
SymbolSequence constant_sequence(int symbol, std::size_t length);
SymbolSequence periodic_sequence(const std::vector<int>& word, std::size_t length);

// All k >= 1 with x_{k+j} = x_j for j = 1..window and k + window <= length.
std::vector<std::size_t> recurrence_times(const SymbolSequence& x, std::size_t window);

std::string write_sequence(const SymbolSequence& x);
SymbolSequence read_sequence(std::string_view text);

}  // namespace tilelab
