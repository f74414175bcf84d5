#include "tilelab/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "tilelab/errors.hpp"

namespace tilelab {

namespace {
constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t SplitMix64::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t SplitMix64::next() { return mix(seed_ + (++counter_) * kGamma); }

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

SplitMix64 SplitMix64::split(std::uint64_t stream) const { return SplitMix64(mix(seed_ ^ mix(stream + kGamma))); }

MeasureSpec MeasureSpec::bernoulli(double p) { return bernoulli(std::vector<double>{p, 1.0 - p}); }

MeasureSpec MeasureSpec::bernoulli(std::vector<double> probabilities) {
  MeasureSpec m;
  m.kind = Kind::bernoulli;
  m.probabilities = std::move(probabilities);
  m.validate();
  return m;
}

MeasureSpec MeasureSpec::markov(std::vector<std::vector<double>> transition, std::vector<double> initial) {
  MeasureSpec m;
  m.kind = Kind::markov;
  m.transition = std::move(transition);
  m.initial = std::move(initial);
  m.validate();
  return m;
}

std::size_t MeasureSpec::alphabet_size() const {
  return kind == Kind::bernoulli ? probabilities.size() : initial.size();
}

namespace {

void check_distribution(const std::vector<double>& p, const std::string& what) {
  if (p.empty()) throw StructuralError(what + " is empty");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw StructuralError(what + " has a negative or non-finite entry");
    sum += v;
  }
  if (std::fabs(sum - 1.0) > 1e-12) throw StructuralError(what + " does not sum to 1");
}

int draw(const std::vector<double>& p, SplitMix64& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return static_cast<int>(i) + 1;
  }
  // rounding: fall back to the last symbol with positive mass
  for (std::size_t i = p.size(); i-- > 0;)
    if (p[i] > 0.0) return static_cast<int>(i) + 1;
  return static_cast<int>(p.size());
}

}  // namespace

void MeasureSpec::validate() const {
  if (kind == Kind::bernoulli) {
    check_distribution(probabilities, "bernoulli probabilities");
    return;
  }
  check_distribution(initial, "markov initial distribution");
  if (transition.size() != initial.size()) throw StructuralError("markov matrix size does not match initial distribution");
  for (const auto& row : transition) {
    if (row.size() != initial.size()) throw StructuralError("markov matrix is not square");
    check_distribution(row, "markov transition row");
  }
}

std::string MeasureSpec::describe() const {
  std::ostringstream out;
  out.precision(17);
  if (kind == Kind::bernoulli) {
    out << "bernoulli(";
    for (std::size_t i = 0; i < probabilities.size(); ++i) out << (i ? "," : "") << probabilities[i];
    out << ")";
  } else {
    out << "markov(" << initial.size() << " states)";
  }
  return out.str();
}

MeasureSpec parse_measure(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw StructuralError("measure must look like bernoulli:p or markov:file");
  const std::string kind(text.substr(0, colon));
  const std::string arg(text.substr(colon + 1));
  if (kind == "bernoulli") {
    std::vector<double> values;
    std::stringstream ss(arg);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(item, &used));
        if (used != item.size()) throw StructuralError("bad probability '" + item + "'");
      } catch (const std::logic_error&) {
        throw StructuralError("bad probability '" + item + "'");
      }
    }
    if (values.size() == 1) return MeasureSpec::bernoulli(values[0]);
    return MeasureSpec::bernoulli(values);
  }
  if (kind == "markov") {
    std::ifstream in(arg);
    if (!in) throw StructuralError("cannot open markov file '" + arg + "'");
    try {
      const auto doc = nlohmann::json::parse(in);
      return MeasureSpec::markov(doc.at("transition").get<std::vector<std::vector<double>>>(),
                                 doc.at("initial").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
      throw StructuralError(std::string("malformed markov file: ") + e.what());
    }
  }
  throw StructuralError("unknown measure kind '" + kind + "'");
}

namespace {

std::vector<int> sample_word(const MeasureSpec& measure, std::size_t length, SplitMix64 rng) {
  std::vector<int> out;
  out.reserve(length);
  if (measure.kind == MeasureSpec::Kind::bernoulli) {
    for (std::size_t i = 0; i < length; ++i) out.push_back(draw(measure.probabilities, rng));
    return out;
  }
  int state = 0;
  for (std::size_t i = 0; i < length; ++i) {
    state = i == 0 ? draw(measure.initial, rng) : draw(measure.transition[static_cast<std::size_t>(state - 1)], rng);
    out.push_back(state);
  }
  return out;
}

}  // namespace

SymbolSequence sample_sequence(const MeasureSpec& measure, std::size_t length, std::uint64_t seed,
                               std::size_t negative_length) {
  if (length < 1) throw StructuralError("sequence length must be at least 1");
  measure.validate();
  const SplitMix64 root(seed);
  SymbolSequence x;
  x.seed = seed;
  x.provenance = measure.describe();
  x.positive = sample_word(measure, length, root.split(1));
  if (negative_length > 0) x.negative = sample_word(measure, negative_length, root.split(2));
  return x;
}

SymbolSequence constant_sequence(int symbol, std::size_t length) {
  SymbolSequence x;
  x.positive.assign(length, symbol);
  x.provenance = "constant(" + std::to_string(symbol) + ")";
  return x;
}

SymbolSequence periodic_sequence(const std::vector<int>& word, std::size_t length) {
  if (word.empty()) throw StructuralError("periodic word is empty");
  SymbolSequence x;
  x.positive.reserve(length);
  for (std::size_t i = 0; i < length; ++i) x.positive.push_back(word[i % word.size()]);
  x.provenance = "periodic";
  return x;
}

std::vector<std::size_t> recurrence_times(const SymbolSequence& x, std::size_t window) {
  const auto& w = x.positive;
  if (window > w.size()) throw StructuralError("recurrence window longer than the sequence");
  std::vector<std::size_t> out;
  if (window == 0) {
    for (std::size_t k = 1; k <= w.size(); ++k) out.push_back(k);
    return out;
  }
  const std::boyer_moore_horspool_searcher searcher(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(window));
  auto from = w.begin() + 1;
  while (true) {
    const auto hit = std::search(from, w.end(), searcher);
    if (hit == w.end()) break;
    out.push_back(static_cast<std::size_t>(hit - w.begin()));
    from = hit + 1;
  }
  return out;
}

std::string write_sequence(const SymbolSequence& x) {
  std::string out;
  out.reserve(x.size() * 2);
  for (int s : x.positive) {
    out += std::to_string(s);
    out += '\n';
  }
  return out;
}

SymbolSequence read_sequence(std::string_view text) {
  SymbolSequence x;
  std::stringstream ss{std::string(text)};
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty() || line[0] == '#') continue;
    try {
      std::size_t used = 0;
      const int s = std::stoi(line, &used);
      if (s < 1) throw StructuralError("symbols are 1-based, got " + line);
      x.positive.push_back(s);
    } catch (const std::logic_error&) {
      throw StructuralError("bad symbol line '" + line + "'");
    }
  }
  if (x.positive.empty()) throw StructuralError("sequence file has no symbols");
  x.provenance = "file";
  return x;
}

}  // namespace tilelab
