#include "tilelab/solenoid.hpp"

#include <algorithm>
#include <sstream>

#include "tilelab/errors.hpp"
#include "tilelab/symbolic.hpp"

namespace tilelab {

namespace {

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw StructuralError("solenoid radius is not an integer: '" + item + "'");
    }
  }
  return out;
}

long ipow(long base, int e) {
  long r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

// Grid side q_(m) as a machine integer; observables are stored densely, so
// it has to be small anyway.
long grid_side(const SolenoidSpec& spec, int m) {
  BigInt side = spec.q_prod(m);
  if (!side.fits_slong_p()) throw StructuralError("observable depth too large");
  return side.get_si();
}

std::size_t cell_count(const SolenoidSpec& spec, int m) {
  long side = grid_side(spec, m);
  BigInt total = 1;
  for (int i = 0; i < spec.d; ++i) total *= side;
  if (total > 50000000) throw StructuralError("observable has too many cylinders");
  return static_cast<std::size_t>(total.get_ui());
}

void check_observable(const SolenoidSpec& spec, const CylinderObservable& f) {
  if (f.depth < 0) throw StructuralError("observable depth must be non-negative");
  if (spec.levels() >= 0 && f.depth > spec.levels()) throw StructuralError("observable deeper than the radius sequence");
  if (f.values.size() != cell_count(spec, f.depth))
    throw StructuralError("observable has " + std::to_string(f.values.size()) + " values, expected " +
                          std::to_string(cell_count(spec, f.depth)));
}

// Decodes a cell index of a grid with the given side into coordinates.
std::vector<long> cell_coords(std::size_t cell, long side, int d) {
  std::vector<long> r(d);
  for (int i = 0; i < d; ++i) {
    r[i] = static_cast<long>(cell % side);
    cell /= side;
  }
  return r;
}

}  // namespace

SolenoidSpec::SolenoidSpec(int dimension, std::vector<int> prefix_in, std::vector<int> period_in)
    : d(dimension), prefix(std::move(prefix_in)), period(std::move(period_in)) {
  if (d < 1) throw StructuralError("solenoid dimension must be at least 1");
  for (int v : prefix)
    if (v < 2) throw StructuralError("solenoid radii must be greater than 1");
  for (int v : period)
    if (v < 2) throw StructuralError("solenoid radii must be greater than 1");
  if (prefix.empty() && period.empty()) throw StructuralError("empty radius sequence");
}

long SolenoidSpec::levels() const { return period.empty() ? static_cast<long>(prefix.size()) : -1; }

int SolenoidSpec::q(int k) const {
  if (k < 1) throw StructuralError("level must be at least 1");
  std::size_t idx = static_cast<std::size_t>(k - 1);
  if (idx < prefix.size()) return prefix[idx];
  if (period.empty()) throw StructuralError("level " + std::to_string(k) + " beyond the radius sequence");
  return period[(idx - prefix.size()) % period.size()];
}

BigInt SolenoidSpec::q_prod(int n) const {
  BigInt out = 1;
  for (int k = 1; k <= n; ++k) out *= q(k);
  return out;
}

SolenoidSpec parse_solenoid(int dimension, const std::string& text) {
  auto bar = text.find('|');
  if (bar == std::string::npos) return SolenoidSpec(dimension, parse_int_list(text));
  return SolenoidSpec(dimension, parse_int_list(text.substr(0, bar)), parse_int_list(text.substr(bar + 1)));
}

int edge_from_digits(const SolenoidSpec& spec, int k, const std::vector<int>& digits) {
  if (static_cast<int>(digits.size()) != spec.d) throw StructuralError("digit tuple has wrong dimension");
  int qk = spec.q(k);
  int e = 0;
  for (int i = spec.d - 1; i >= 0; --i) {
    if (digits[i] < 0 || digits[i] >= qk) throw StructuralError("digit out of range");
    e = e * qk + digits[i];
  }
  return e + 1;
}

std::vector<int> digits_from_edge(const SolenoidSpec& spec, int k, int edge) {
  int qk = spec.q(k);
  if (edge < 1 || edge > ipow(qk, spec.d)) throw StructuralError("edge out of range");
  std::vector<int> digits(spec.d);
  int e = edge - 1;
  for (int i = 0; i < spec.d; ++i) {
    digits[i] = e % qk;
    e /= qk;
  }
  return digits;
}

std::size_t cell_from_path(const SolenoidSpec& spec, const std::vector<int>& edges) {
  int m = static_cast<int>(edges.size());
  long side = grid_side(spec, m);
  std::vector<long> r(spec.d, 0);
  long place = 1;
  for (int k = 1; k <= m; ++k) {
    auto digits = digits_from_edge(spec, k, edges[k - 1]);
    for (int i = 0; i < spec.d; ++i) r[i] += digits[i] * place;
    place *= spec.q(k);
  }
  std::size_t cell = 0;
  for (int i = spec.d - 1; i >= 0; --i) cell = cell * side + r[i];
  return cell;
}

Rational cylinder_measure(const SolenoidSpec& spec, int k) {
  if (k < 0) throw StructuralError("depth must be non-negative");
  BigInt side = spec.q_prod(k);
  BigInt vol = 1;
  for (int i = 0; i < spec.d; ++i) vol *= side;
  return ratio(1, vol);
}

Rational mean(const SolenoidSpec& spec, const CylinderObservable& f) {
  check_observable(spec, f);
  Rational sum = 0;
  for (const auto& v : f.values) sum += v;
  return sum * cylinder_measure(spec, f.depth);
}

Rational variation(const SolenoidSpec& spec, const CylinderObservable& f) {
  check_observable(spec, f);
  const int m = f.depth;
  const int d = spec.d;
  // Bottom-up over depths: for each depth-k cylinder keep min, max and the
  // best partition value below it. A depth-k cylinder is a residue class of
  // the depth-m grid modulo q_(k) in every coordinate.
  std::vector<Rational> lo = f.values, hi = f.values;
  std::vector<Rational> best(f.values.size(), Rational(0));
  for (int k = m - 1; k >= 0; --k) {
    long side = grid_side(spec, k);
    long child_side = grid_side(spec, k + 1);
    std::size_t cells = cell_count(spec, k);
    std::vector<Rational> nlo(cells), nhi(cells), nbest(cells, Rational(0));
    std::vector<bool> seen(cells, false);
    std::size_t child_cells = cell_count(spec, k + 1);
    for (std::size_t c = 0; c < child_cells; ++c) {
      auto r = cell_coords(c, child_side, d);
      std::size_t parent = 0;
      for (int i = d - 1; i >= 0; --i) parent = parent * side + static_cast<std::size_t>(r[i] % side);
      if (!seen[parent]) {
        nlo[parent] = lo[c];
        nhi[parent] = hi[c];
        seen[parent] = true;
      } else {
        if (lo[c] < nlo[parent]) nlo[parent] = lo[c];
        if (hi[c] > nhi[parent]) nhi[parent] = hi[c];
      }
      nbest[parent] += best[c];
    }
    for (std::size_t p = 0; p < cells; ++p) {
      Rational osc = nhi[p] - nlo[p];
      if (osc > nbest[p]) nbest[p] = osc;
    }
    lo = std::move(nlo);
    hi = std::move(nhi);
    best = std::move(nbest);
  }
  return best.empty() ? Rational(0) : best[0];
}

CylinderObservable random_observable(const SolenoidSpec& spec, int depth, std::uint64_t seed, int max_value) {
  CylinderObservable f;
  f.depth = depth;
  std::size_t n = cell_count(spec, depth);
  SplitMix64 rng(seed);
  f.values.reserve(n);
  for (std::size_t c = 0; c < n; ++c)
    f.values.emplace_back(static_cast<long>(rng.next() % static_cast<std::uint64_t>(2 * max_value + 1)) - max_value);
  return f;
}

BasePoint random_base_point(const SolenoidSpec& spec, int levels, std::uint64_t seed) {
  SplitMix64 rng(seed);
  BasePoint p;
  p.digits.resize(levels);
  for (int k = 1; k <= levels; ++k) {
    p.digits[k - 1].resize(spec.d);
    for (int i = 0; i < spec.d; ++i) p.digits[k - 1][i] = static_cast<int>(rng.next() % static_cast<std::uint64_t>(spec.q(k)));
  }
  // Dyadic offsets with 20 bits: generic enough, exact.
  for (int i = 0; i < spec.d; ++i) p.y.push_back(ratio(static_cast<long>(rng.next() % (1u << 20)), BigInt(1) << 20));
  return p;
}

Rational orbit_integral(const SolenoidSpec& spec, const CylinderObservable& f, const BasePoint& p, int n) {
  check_observable(spec, f);
  const int m = f.depth;
  const int d = spec.d;
  if (n < 0) throw StructuralError("n must be non-negative");
  if (spec.levels() >= 0 && n > spec.levels()) throw StructuralError("n beyond the radius sequence");
  if (static_cast<int>(p.y.size()) != d) throw StructuralError("base point offset has wrong dimension");
  for (const auto& y : p.y)
    if (y < 0 || y >= 1) throw StructuralError("base point offset must lie in [0,1)");
  if (static_cast<int>(p.digits.size()) < m) throw StructuralError("base point path shorter than the observable depth");

  const long M = grid_side(spec, m);
  const BigInt Q = spec.q_prod(n);

  // The orbit over [0, Q]^d crosses unit cells j = 0..Q in each coordinate:
  // cell 0 for length 1 - y, cell Q for length y, the rest fully. Cell j has
  // grid position (A + j) mod M, with A the mixed-radix address of the tile
  // holding the base point. Per-coordinate weights per residue then factor.
  std::vector<std::vector<Rational>> W(d, std::vector<Rational>(M, Rational(0)));
  for (int i = 0; i < d; ++i) {
    long A = 0, place = 1;
    for (int k = 1; k <= m; ++k) {
      int digit = p.digits[k - 1].at(i);
      if (digit < 0 || digit >= spec.q(k)) throw StructuralError("base point digit out of range");
      A += digit * place;
      place *= spec.q(k);
    }
    const Rational& y = p.y[i];
    // interior cells j = 1..Q-1
    BigInt last = Q - 1;
    for (long r = 0; r < M; ++r) {
      long c = ((r - A) % M + M) % M;  // j = c mod M
      BigInt count = 0;
      if (c == 0) {
        count = last / M;
      } else if (last >= c) {
        count = (last - c) / M + 1;
      }
      W[i][r] += Rational(count);
    }
    W[i][A % M] += 1 - y;
    BigInt end = (Q + A) % M;
    W[i][end.get_si()] += y;
  }

  Rational S = 0;
  std::size_t cells = f.values.size();
  for (std::size_t c = 0; c < cells; ++c) {
    if (f.values[c] == 0) continue;
    auto r = cell_coords(c, M, d);
    Rational w = 1;
    for (int i = 0; i < d; ++i) w *= W[i][r[i]];
    S += w * f.values[c];
  }
  return S;
}

DKReport dk_check(const SolenoidSpec& spec, const CylinderObservable& f, const BasePoint& p, int n_min, int n_max) {
  if (n_min < 0 || n_max < n_min) throw StructuralError("invalid n range");
  DKReport report;
  report.var = variation(spec, f);
  const Rational mu = mean(spec, f);
  report.max_gap = 0;
  for (int n = n_min; n <= n_max; ++n) {
    DKRow row;
    row.n = n;
    row.S = orbit_integral(spec, f, p, n);
    BigInt Q = spec.q_prod(n);
    BigInt vol = 1;
    for (int i = 0; i < spec.d; ++i) vol *= Q;
    row.expected = Rational(vol) * mu;
    row.gap = abs(row.S - row.expected);
    if (row.gap > report.max_gap) report.max_gap = row.gap;
    if (row.gap > report.var) report.holds = false;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace tilelab
