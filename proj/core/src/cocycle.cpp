#include "tilelab/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "tilelab/bratteli.hpp"
#include "tilelab/errors.hpp"

namespace tilelab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct BatchSums {
  std::vector<std::vector<long double>> sums;  // [batch][exponent]
  std::vector<std::size_t> lengths;
  std::vector<bool> collapsed;
};

BatchSums run_qr(const std::vector<Eigen::MatrixXd>& by_symbol, const std::vector<int>& symbols, std::size_t burn_in,
                 std::size_t steps, std::size_t batches, std::size_t reorth_every) {
  const Eigen::Index m = by_symbol.front().rows();
  const auto dim = static_cast<std::size_t>(m);
  BatchSums out;
  out.sums.assign(batches, std::vector<long double>(dim, 0.0L));
  out.lengths.assign(batches, 0);
  out.collapsed.assign(dim, false);

  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(m, m);
  const std::size_t per_batch = steps / batches;
  std::size_t since_qr = 0;

  auto reorthonormalize = [&](long double* target) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    Eigen::MatrixXd thin = qr.householderQ() * Eigen::MatrixXd::Identity(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double d = r(i, i);
      if (d < 0) thin.col(i) = -thin.col(i);
      const auto idx = static_cast<std::size_t>(i);
      if (d == 0.0 || !std::isfinite(d)) out.collapsed[idx] = true;
      if (target && !out.collapsed[idx]) target[idx] += std::log(static_cast<long double>(std::fabs(d)));
    }
    q = thin;
    since_qr = 0;
  };

  std::size_t pos = 0;
  for (std::size_t k = 0; k < burn_in; ++k, ++pos) {
    q = by_symbol[static_cast<std::size_t>(symbols[pos] - 1)] * q;
    if (++since_qr == reorth_every) reorthonormalize(nullptr);
  }
  if (since_qr > 0) reorthonormalize(nullptr);
  std::fill(out.collapsed.begin(), out.collapsed.end(), false);

  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t len = (b + 1 == batches) ? steps - per_batch * (batches - 1) : per_batch;
    long double* target = out.sums[b].data();
    for (std::size_t k = 0; k < len; ++k, ++pos) {
      q = by_symbol[static_cast<std::size_t>(symbols[pos] - 1)] * q;
      if (++since_qr == reorth_every) reorthonormalize(target);
    }
    if (since_qr > 0) reorthonormalize(target);
    out.lengths[b] = len;
  }
  return out;
}

// Dimension of the image of A_k ... A_1 over the given prefix, tracked exactly
// through the reduced row echelon form of a spanning set (canonical, so the
// entries stay small).
std::size_t eventual_rank(const std::vector<IntMatrix>& by_symbol, const std::vector<int>& symbols, std::size_t prefix) {
  const std::size_t m = by_symbol.front().rows();
  bool singular = false;
  for (const auto& a : by_symbol) singular = singular || characteristic_polynomial(a).front() == 0;
  if (!singular) return m;
  // rows of basis span the current image
  std::vector<RationalVector> basis;
  for (std::size_t i = 0; i < m; ++i) {
    RationalVector e(m, Rational(0));
    e[i] = 1;
    basis.push_back(e);
  }
  for (std::size_t k = 0; k < prefix && !basis.empty(); ++k) {
    const auto& a = by_symbol[static_cast<std::size_t>(symbols[k] - 1)];
    for (auto& v : basis) v = multiply(a, v);
    std::size_t row = 0;
    for (std::size_t col = 0; col < m && row < basis.size(); ++col) {
      std::size_t pivot = row;
      while (pivot < basis.size() && basis[pivot][col] == 0) ++pivot;
      if (pivot == basis.size()) continue;
      std::swap(basis[row], basis[pivot]);
      const Rational lead = basis[row][col];
      for (auto& e : basis[row]) e /= lead;
      for (std::size_t r = 0; r < basis.size(); ++r) {
        if (r == row || basis[r][col] == 0) continue;
        const Rational f = basis[r][col];
        for (std::size_t c = 0; c < m; ++c) basis[r][c] -= f * basis[row][c];
      }
      ++row;
    }
    basis.resize(row);
  }
  return basis.size();
}

void group_exponents(LyapunovReport& report) {
  const std::size_t n = report.exponents.size();
  report.groups.assign(n, 0);
  int g = 0;
  for (std::size_t i = 1; i < n; ++i) {
    const double a = report.exponents[i - 1];
    const double b = report.exponents[i];
    bool same;
    if (std::isinf(a) || std::isinf(b)) {
      same = std::isinf(a) && std::isinf(b);
    } else {
      const double se = std::hypot(report.standard_errors[i - 1], report.standard_errors[i]);
      same = std::fabs(a - b) <= 5.0 * se;
    }
    if (!same) ++g;
    report.groups[i] = g;
  }
  report.multiplicities.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    report.multiplicities[i] = static_cast<int>(std::count(report.groups.begin(), report.groups.end(), report.groups[i]));
  }
  report.normalized.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) report.normalized[i] = report.exponents[i] / report.exponents[0];
}

LyapunovReport summarize(const std::vector<BatchSums>& runs, std::size_t dim, std::size_t rank) {
  std::vector<double> rates;
  LyapunovReport report;
  std::vector<std::pair<double, double>> est(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    bool collapsed = false;
    long double total = 0.0L;
    std::size_t count = 0;
    rates.clear();
    for (const auto& run : runs) {
      collapsed = collapsed || run.collapsed[i];
      for (std::size_t b = 0; b < run.sums.size(); ++b) {
        total += run.sums[b][i];
        count += run.lengths[b];
        rates.push_back(static_cast<double>(run.sums[b][i] / static_cast<long double>(run.lengths[b])));
      }
    }
    if (collapsed) {
      est[i] = {kNegInf, 0.0};
      continue;
    }
    const double mean = static_cast<double>(total / static_cast<long double>(count));
    const double bm = std::accumulate(rates.begin(), rates.end(), 0.0) / static_cast<double>(rates.size());
    double var = 0.0;
    for (double r : rates) var += (r - bm) * (r - bm);
    var /= static_cast<double>(rates.size() - 1);
    const double se = std::max(std::sqrt(var / static_cast<double>(rates.size())), kStandardErrorFloor);
    est[i] = {mean, se};
  }
  std::stable_sort(est.begin(), est.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = rank; i < dim; ++i) est[i] = {kNegInf, 0.0};
  for (const auto& [e, s] : est) {
    report.exponents.push_back(e);
    report.standard_errors.push_back(s);
  }
  group_exponents(report);
  return report;
}

std::vector<IntMatrix> symbol_matrices(const RuleFamily& family) {
  std::vector<IntMatrix> out;
  for (const auto& rule : family.rules) out.push_back(substitution_matrix(rule, family.size()));
  return out;
}

std::vector<Eigen::MatrixXd> as_double(const std::vector<IntMatrix>& mats) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto& m : mats) out.push_back(to_eigen(m));
  return out;
}

void check_options(std::size_t steps, const LyapunovOptions& options) {
  if (steps < 1000) throw StructuralError("Lyapunov estimation needs at least 1000 steps");
  if (options.reorth_every < 1) throw StructuralError("reorth_every must be positive");
  if (options.batches < 20) throw StructuralError("at least 20 batches are required");
  if (options.replicas < 1) throw StructuralError("at least one replica is required");
}

std::size_t burn_in_for(std::size_t steps, const LyapunovOptions& options) {
  return options.burn_in > 0 ? options.burn_in : std::max<std::size_t>(100, steps / 100);
}

}  // namespace

std::vector<double> LyapunovReport::distinct() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    if (i == 0 || groups[i] != groups[i - 1]) {
      // group mean
      double sum = 0.0;
      int n = 0;
      for (std::size_t j = i; j < exponents.size() && groups[j] == groups[i]; ++j, ++n) sum += exponents[j];
      out.push_back(std::isinf(exponents[i]) ? exponents[i] : sum / n);
    }
  }
  return out;
}

LyapunovReport lyapunov_spectrum(const RuleFamily& family, const MeasureSpec& measure, std::size_t steps,
                                 std::uint64_t seed, std::size_t reorth_every, LyapunovOptions options) {
  options.reorth_every = reorth_every;
  check_options(steps, options);
  measure.validate();
  if (measure.alphabet_size() > family.rules.size()) throw StructuralError("measure alphabet larger than the rule family");
  const auto exact = symbol_matrices(family);
  const auto mats = as_double(exact);
  const std::size_t burn = burn_in_for(steps, options);
  std::vector<BatchSums> runs(options.replicas);
  std::vector<std::size_t> ranks(options.replicas, family.size());
  const SplitMix64 root(seed);

  auto worker = [&](std::size_t first, std::size_t stride) {
    for (std::size_t r = first; r < options.replicas; r += stride) {
      const auto x = sample_sequence(measure, burn + steps, root.split(r).seed());
      runs[r] = run_qr(mats, x.positive, burn, steps, options.batches, options.reorth_every);
      ranks[r] = eventual_rank(exact, x.positive, burn);
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, options.replicas));
  if (threads == 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker, t, threads);
    for (auto& th : pool) th.join();
  }
  auto report = summarize(runs, family.size(), *std::min_element(ranks.begin(), ranks.end()));
  report.steps = steps * options.replicas;
  report.seed = seed;
  report.measure = measure.describe();
  return report;
}

LyapunovReport lyapunov_along(const RuleFamily& family, const SymbolSequence& x, std::size_t steps,
                              LyapunovOptions options) {
  check_options(steps, options);
  const std::size_t burn = burn_in_for(steps, options);
  if (x.size() < burn + steps) throw StructuralError("sequence shorter than burn-in plus steps");
  for (std::size_t k = 1; k <= burn + steps; ++k) family.rule_for(x[k]);
  const auto exact = symbol_matrices(family);
  std::vector<BatchSums> runs = {run_qr(as_double(exact), x.positive, burn, steps, options.batches, options.reorth_every)};
  auto report = summarize(runs, family.size(), eventual_rank(exact, x.positive, burn));
  report.steps = steps;
  report.seed = x.seed;
  report.measure = x.provenance;
  return report;
}

TopDirection top_left_direction(const RuleFamily& family, const SymbolSequence& x, std::size_t depth) {
  if (depth < 1) throw StructuralError("top_left_direction needs depth >= 1");
  const auto mats = connectivity_matrices(family, x, depth);
  TopDirection out;
  out.exact.assign(family.size(), BigInt(1));
  for (std::size_t k = depth; k-- > 0;) out.exact = multiply(transpose(mats[k]), out.exact);
  BigInt g = 0;
  for (const auto& v : out.exact) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), v.get_mpz_t());
  if (g == 0) throw NumericError("product annihilates every direction");
  for (auto& v : out.exact) v /= g;

  long double norm2 = 0.0L;
  BigInt biggest = 0;
  for (const auto& v : out.exact)
    if (abs(v) > biggest) biggest = abs(v);
  for (const auto& v : out.exact) {
    const double r = ratio(v, biggest).get_d();
    out.unit.push_back(r);
    norm2 += static_cast<long double>(r) * r;
  }
  const double norm = std::sqrt(static_cast<double>(norm2));
  for (auto& v : out.unit) v /= norm;

  const auto m = static_cast<Eigen::Index>(family.size());
  if (m == 1) return out;
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(m, m);
  for (const auto& a : mats) {
    p = to_eigen(a) * p;
    const double s = p.cwiseAbs().maxCoeff();
    if (s == 0.0) throw NumericError("product collapsed to zero");
    p /= s;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(p);
  const auto sv = svd.singularValues();
  out.gap_ratio = sv(1) / sv(0);
  if (out.gap_ratio > 1.0 - 1e-6) {
    throw NumericError("no spectral gap: sigma_2 / sigma_1 = " + std::to_string(out.gap_ratio));
  }
  return out;
}

BigVector apply_cocycle(const std::vector<IntMatrix>& matrices, const BigVector& v) {
  BigVector out = v;
  for (const auto& a : matrices) out = multiply(a, out);
  return out;
}

RationalVector apply_cocycle(const std::vector<IntMatrix>& matrices, const RationalVector& v) {
  RationalVector out = v;
  for (const auto& a : matrices) out = multiply(a, out);
  return out;
}

double expected_log_det(const RuleFamily& family, const MeasureSpec& measure) {
  if (measure.kind != MeasureSpec::Kind::bernoulli) throw UnsupportedOperation("expected_log_det needs a Bernoulli measure");
  double total = 0.0;
  for (std::size_t s = 0; s < measure.probabilities.size(); ++s) {
    if (measure.probabilities[s] == 0.0) continue;
    const auto poly = characteristic_polynomial(substitution_matrix(family.rules.at(s), family.size()));
    const BigInt det = poly.front();
    if (det == 0) return kNegInf;
    total += measure.probabilities[s] * log_abs(det);
  }
  return total;
}

}  // namespace tilelab
