#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "tilelab/schrodinger.hpp"

namespace tilelab {
namespace {

struct Built {
  PunctureSet punctures;
  WindowedOperator op;
};

Built build_centered(const RuleFamily& family, const SymbolSequence& x, const Rational& side, const KernelSpec& kernel,
                     const Rational& margin = 4) {
  SupertileTree tree(family, x);
  const Region source = Region::centered_box(side + 2 * margin);
  const Patch patch = generate_patch(tree, source);
  Built b{puncture_set(family, patch, source), {}};
  b.op = build_operator(kernel, b.punctures, Region::centered_box(side));
  return b;
}

KernelSpec identity_kernel(std::size_t types) {
  KernelSpec k;
  k.diagonal_by_type.assign(types, Rational(1));
  return k;
}

KernelSpec laplacian_kernel(const Rational& range) {
  KernelSpec k;
  k.range = range;
  k.hop_default = -1;
  k.laplacian_diagonal = true;
  return k;
}

Rational entry_re(const WindowedOperator& op, std::size_t r, std::size_t c, Rational* im = nullptr) {
  for (const auto& e : op.entries)
    if (e.row == r && e.col == c) {
      if (im) *im = e.im;
      return e.re;
    }
  if (im) *im = 0;
  return 0;
}

TEST(Schrodinger, PuncturesAreUniformlyDiscrete) {
  const auto hh = halfhex_family();
  SupertileTree tree(hh, constant_sequence(1, 12));
  const Region source = Region::centered_box(10);
  const auto patch = generate_patch(tree, source);
  const auto P = puncture_set(hh, patch, source);
  ASSERT_EQ(P.points.size(), patch.size());
  Rational best = -1;
  for (std::size_t i = 0; i < P.points.size(); ++i)
    for (std::size_t j = i + 1; j < P.points.size(); ++j) {
      const Vec2 d = P.points[i].point - P.points[j].point;
      if (best < 0 || dot(d, d) < best) best = dot(d, d);
    }
  EXPECT_EQ(P.min_gap2, best);
  EXPECT_GT(P.min_gap(), 0.0);
}

TEST(Schrodinger, IdentityKernel) {
  const auto hh = halfhex_family();
  const auto b = build_centered(hh, constant_sequence(1, 14), 8, identity_kernel(6));
  const auto n = b.op.size();
  ASSERT_GT(n, 30u);
  EXPECT_EQ(b.op.entries.size(), n);
  for (const auto& e : b.op.entries) {
    EXPECT_EQ(e.row, e.col);
    EXPECT_EQ(e.re, Rational(1));
  }
  EXPECT_EQ(windowed_trace(b.op, Region::centered_box(8)), Rational(static_cast<long>(n)));
  const auto ids = ids_estimate({b.op}, {0.0, 0.999, 1.0, 1.001, 2.0});
  EXPECT_EQ(ids.curves[0].values, (std::vector<double>{0.0, 0.0, 1.0, 1.0, 1.0}));
}

TEST(Schrodinger, LaplacianRowsSumToZero) {
  const auto hh = halfhex_family();
  const Rational R = ratio(6, 5);
  const auto b = build_centered(hh, constant_sequence(1, 14), 8, laplacian_kernel(R));
  std::vector<Rational> rows(b.op.size(), Rational(0));
  for (const auto& e : b.op.entries) rows[e.row] += e.re;
  for (const auto& r : rows) EXPECT_EQ(r, Rational(0));
  // graph identity: trace = sum of degrees = twice the edges, edges counted by pairs
  long edges = 0;
  for (std::size_t i = 0; i < b.op.size(); ++i)
    for (std::size_t j = i + 1; j < b.op.size(); ++j) {
      const Vec2 d = b.op.points[i] - b.op.points[j];
      if (dot(d, d) <= R * R) ++edges;
    }
  ASSERT_GT(edges, 0);
  EXPECT_EQ(windowed_trace(b.op, Region::centered_box(8)), Rational(2 * edges));
}

TEST(Schrodinger, HermitianAssembly) {
  const auto hh = halfhex_family();
  KernelSpec k;
  k.range = ratio(3, 2);
  k.diagonal_by_type = {1, 2, 3, 4, 5, 6};
  k.hops.push_back({"", 0, -1, std::nullopt, ratio(1, 2), ratio(3, 4)});
  k.hops.push_back({"", -1, 2, std::nullopt, Rational(-1), ratio(1, 3)});
  k.hop_default = ratio(1, 7);
  const auto b = build_centered(hh, constant_sequence(1, 14), 6, k);
  for (const auto& e : b.op.entries) {
    Rational im;
    const Rational re = entry_re(b.op, e.col, e.row, &im);
    EXPECT_EQ(re, e.re);
    EXPECT_EQ(im, -e.im);
  }
  const Eigen::MatrixXcd dense(b.op.matrix);
  EXPECT_LT((dense - dense.adjoint()).norm(), 1e-14);
  // support within range
  for (const auto& e : b.op.entries) {
    const Vec2 d = b.op.points[e.row] - b.op.points[e.col];
    EXPECT_LE(dot(d, d), k.range * k.range);
  }
}

TEST(Schrodinger, MarginViolationIsReported) {
  const auto hh = halfhex_family();
  SupertileTree tree(hh, constant_sequence(1, 14));
  const Region source = Region::centered_box(8);
  const auto P = puncture_set(hh, generate_patch(tree, source), source);
  EXPECT_THROW(build_operator(laplacian_kernel(1), P, Region::centered_box(8)), IncompletePatternError);
  EXPECT_NO_THROW(build_operator(laplacian_kernel(1), P, Region::centered_box(1)));
}

TEST(Schrodinger, InteriorTracesMatchErgodicIntegrals) {
  std::mt19937 gen(7);
  std::uniform_int_distribution<int> num(-30, 30), den(1, 12);
  const auto hh = halfhex_family();
  SupertileTree tree(hh, constant_sequence(1, 16));
  for (int trial = 0; trial < 5; ++trial) {
    KernelSpec k;
    k.range = 1;
    for (int j = 0; j < 6; ++j) k.diagonal_by_type.push_back(ratio(num(gen), den(gen)));
    k.hop_default = -1;
    const auto cmp = interior_trace_check(k, tree, Region::centered_box(1), 16);
    EXPECT_GT(cmp.pieces, 3u);
    EXPECT_EQ(cmp.trace, cmp.integral);
  }
  const auto od = oned_family();
  SupertileTree line(od, sample_sequence(MeasureSpec::bernoulli(0.4), 40, 3));
  KernelSpec k;
  k.diagonal_by_type = {ratio(2, 3), ratio(-5, 2)};
  const auto cmp = interior_trace_check(k, line, Region::centered_box(2), 40);
  EXPECT_GT(cmp.pieces, 1u);
  EXPECT_EQ(cmp.trace, cmp.integral);
}

TEST(Schrodinger, TraceIsAdditive) {
  const auto hh = halfhex_family();
  KernelSpec k;
  k.range = 1;
  k.diagonal_by_type = {ratio(1, 2), 3, -1, ratio(7, 3), 0, 5};
  const auto b = build_centered(hh, constant_sequence(1, 14), 8, k);
  const Rational cut = ratio(1, 1000003);
  const Region left = Region::box({-4, -4}, {cut + 4, 8});
  const Region right = Region::box({cut, -4}, {4 - cut, 8});
  EXPECT_EQ(windowed_trace(b.op, left) + windowed_trace(b.op, right), windowed_trace(b.op, Region::centered_box(8)));
}

TEST(Schrodinger, PatternClassesArePeriodicOnTheSolenoid) {
  const auto sol = solenoid_family(2, {2});
  SupertileTree tree(sol, constant_sequence(1, 10));
  const Region source = Region::centered_box(20);
  const auto P = puncture_set(sol, generate_patch(tree, source), source);
  KernelSpec k;
  k.range = 2;
  // one pattern class in a periodic tiling, so a pattern-keyed kernel is constant
  const std::size_t origin = std::find_if(P.points.begin(), P.points.end(), [](const Puncture& p) {
                               return p.point == Vec2{};
                             }) - P.points.begin();
  ASSERT_LT(origin, P.points.size());
  const std::string id = pattern_id(P, origin, k.range);
  k.diagonal_by_pattern.emplace_back(id, ratio(5, 2));
  k.hops.push_back({id, -1, -1, Vec2{1, 0}, 0, 1});
  k.hop_default = ratio(-1, 4);
  const auto a = build_operator(k, P, Region::box({-3, -3}, {4, 4}));
  const auto b = build_operator(k, P, Region::box({-1, -2}, {4, 4}));
  ASSERT_EQ(a.size(), 25u);
  ASSERT_EQ(a.size(), b.size());
  // row of b holding the translate of each row of a
  std::vector<std::size_t> to_b(a.size());
  for (std::size_t r = 0; r < a.size(); ++r) {
    EXPECT_EQ(a.patterns[r], id);
    const Vec2 target = a.points[r] + (Vec2{2, 1});
    to_b[r] = std::find(b.points.begin(), b.points.end(), target) - b.points.begin();
    ASSERT_LT(to_b[r], b.size());
  }
  ASSERT_EQ(a.entries.size(), b.entries.size());
  for (const auto& e : a.entries) {
    Rational im;
    EXPECT_EQ(entry_re(b, to_b[e.row], to_b[e.col], &im), e.re);
    EXPECT_EQ(im, e.im);
  }
  EXPECT_EQ(a.diagonal[0], ratio(5, 2));
}

TEST(Schrodinger, HalfHexPatternsAreFinitelyMany) {
  const auto hh = halfhex_family();
  SupertileTree tree(hh, constant_sequence(1, 14));
  const Region source = Region::centered_box(24);
  const auto P = puncture_set(hh, generate_patch(tree, source), source);
  KernelSpec k;
  k.range = 1;
  k.diagonal_by_pattern.emplace_back("none", 1);
  const auto op = build_operator(k, P, Region::centered_box(16));
  std::vector<std::string> ids = op.patterns;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  EXPECT_GE(ids.size(), 6u);
  EXPECT_LT(ids.size() * 4, op.size());
  // translation-equal neighbourhoods give equal ids
  for (std::size_t r = 0; r < op.size(); ++r) EXPECT_EQ(op.patterns[r].substr(0, 2), "t" + std::to_string(op.types[r]));
}

// Neumann Laplacian on a path of n points: 2 - 2 cos(pi k / n).
std::vector<double> path_spectrum(int n) {
  std::vector<double> out;
  for (int k = 0; k < n; ++k) out.push_back(2.0 - 2.0 * std::cos(std::numbers::pi * k / n));
  return out;
}

double lattice_ids_1d(double e) {
  if (e <= 0) return 0.0;
  if (e >= 4) return 1.0;
  return std::acos(1.0 - e / 2.0) / std::numbers::pi;
}

double lattice_ids_2d(double e) {
  const int steps = 20000;
  double sum = 0.0;
  for (int i = 0; i < steps; ++i) {
    const double k = std::numbers::pi * (i + 0.5) / steps;
    sum += lattice_ids_1d(e - (2.0 - 2.0 * std::cos(k)));
  }
  return sum / steps;
}

TEST(Schrodinger, LatticeLaplacianSpectrum) {
  const auto line = solenoid_family(1, {2});
  const auto b1 = build_centered(line, constant_sequence(1, 10), 16, laplacian_kernel(1));
  ASSERT_EQ(b1.op.size(), 17u);
  auto ev = eigenvalues(b1.op);
  auto oracle = path_spectrum(17);
  std::sort(oracle.begin(), oracle.end());
  for (std::size_t i = 0; i < ev.size(); ++i) EXPECT_NEAR(ev[i], oracle[i], 1e-10);

  const auto square = solenoid_family(2, {2});
  const auto b2 = build_centered(square, constant_sequence(1, 10), 8, laplacian_kernel(1));
  ASSERT_EQ(b2.op.size(), 81u);
  ev = eigenvalues(b2.op);
  oracle.clear();
  const auto p9 = path_spectrum(9);
  for (double a : p9)
    for (double c : p9) oracle.push_back(a + c);
  std::sort(oracle.begin(), oracle.end());
  for (std::size_t i = 0; i < ev.size(); ++i) EXPECT_NEAR(ev[i], oracle[i], 1e-10);
}

TEST(Schrodinger, LatticeIDSConvergesLikeOneOverT) {
  const auto square = solenoid_family(2, {2});
  std::vector<WindowedOperator> ops;
  std::vector<int> sides{8, 16, 32};
  for (int side : sides) ops.push_back(build_centered(square, constant_sequence(1, 12), side, laplacian_kernel(1)).op);
  std::vector<double> energies;
  for (int i = 1; i < 40; ++i) energies.push_back(0.2 * i + 0.013);
  const auto ids = ids_estimate(ops, energies, 2);
  for (std::size_t w = 0; w < ops.size(); ++w) {
    double sup = 0.0;
    for (std::size_t e = 0; e < energies.size(); ++e)
      sup = std::max(sup, std::abs(ids.curves[w].values[e] - lattice_ids_2d(energies[e])));
    EXPECT_LE(sup, 3.0 / (sides[w] + 1)) << sides[w];
  }
  ASSERT_EQ(ids.sup_differences.size(), 2u);
  EXPECT_LT(ids.sup_differences[1], ids.sup_differences[0]);
}

TEST(Schrodinger, SparseCountsAgreeWithDenseSpectrum) {
  const auto hh = halfhex_family();
  const auto b = build_centered(hh, constant_sequence(1, 14), 10, laplacian_kernel(ratio(6, 5)));
  const auto ev = eigenvalues(b.op);
  for (double e : {0.3, 1.7, 2.5, 4.1, 6.6, 9.0}) {
    const auto dense = static_cast<std::size_t>(std::upper_bound(ev.begin(), ev.end(), e) - ev.begin());
    EXPECT_EQ(count_eigenvalues_below(b.op, e), dense) << e;
  }
}

TEST(Schrodinger, NonHermitianOperatorsHaveNoIDS) {
  const auto hh = halfhex_family();
  KernelSpec k = laplacian_kernel(1);
  k.hermitian = false;
  k.laplacian_diagonal = false;
  k.hops.push_back({"", 0, -1, std::nullopt, 2, 0});
  const auto b = build_centered(hh, constant_sequence(1, 14), 6, k);
  EXPECT_THROW(eigenvalues(b.op), UnsupportedOperation);
  EXPECT_THROW(ids_estimate({b.op}, {0.0}), UnsupportedOperation);
}

TEST(Schrodinger, TraceFlagThreshold) {
  LyapunovReport r;
  r.exponents = {std::log(16.0), 0.5 * std::log(52.0), 0.5 * std::log(52.0), std::log(2.0), std::log(2.0),
                 std::log(2.0)};
  r.groups = {0, 1, 1, 2, 2, 2};
  r.multiplicities = {1, 2, 2, 3, 3, 3};
  EXPECT_TRUE(pulled_back_trace_flag(r, 2, 2));
  EXPECT_FALSE(pulled_back_trace_flag(r, 3, 2));  // log 2 / log 16 = 1/4
  EXPECT_TRUE(pulled_back_trace_flag(r, 3, 1));
  EXPECT_THROW(pulled_back_trace_flag(r, 4, 2), StructuralError);
}

TEST(Schrodinger, TraceDeviationSlopes) {
  const auto hh = halfhex_family();
  const auto x = constant_sequence(1, 24);
  SupertileTree tree(hh, x);
  const auto seq = special_averaging_sequence(tree, Region::centered_box(1), 0.05, 10);
  LyapunovReport spec;
  spec.exponents = {std::log(4.0), std::log(2.0), 0, 0, 0, 0};
  spec.groups = {0, 1, 2, 2, 2, 2};
  spec.multiplicities = {1, 1, 4, 4, 4, 4};

  const auto id = trace_deviation(identity_kernel(6), hh, x, seq, spec, 1);
  EXPECT_NEAR(id.slope, 2.0, 0.05);
  EXPECT_FALSE(id.zero_trace);

  const auto f = make_zero_trace_observable(hh, x, 10);
  KernelSpec k;
  for (int j = 0; j < 6; ++j) k.diagonal_by_type.push_back(f.weights[j] * hh.prototiles[j].volume);
  const auto zt = trace_deviation(k, hh, x, seq, spec, 2);
  EXPECT_TRUE(zt.zero_trace);
  EXPECT_LE(zt.running_max_slope, 1.1);
  EXPECT_NEAR(zt.predicted, 1.0, 1e-12);
  EXPECT_FALSE(zt.trace_flag);  // log 2 / log 4 = 1/2 is not above 1/2
}

}  // namespace
}  // namespace tilelab
