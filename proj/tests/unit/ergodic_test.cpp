#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "tilelab/ergodic.hpp"

namespace tilelab {
namespace {

RationalVector random_weights(std::size_t n, std::mt19937& gen) {
  std::uniform_int_distribution<int> num(-20, 20), den(1, 9);
  RationalVector w(n);
  for (auto& e : w) e = ratio(num(gen), den(gen));
  return w;
}

double max_norm(const RationalVector& v) {
  double m = 0;
  for (const auto& e : v) m = std::max(m, std::abs(to_double(e)));
  return m;
}

// V^k by summing over every path of length k, using the class weight of its first m edges.
RationalVector brute_vector(const TLCObservable& f, const RuleFamily& family, const SymbolSequence& x, int k) {
  const auto classes = path_classes(family, x, f.depth);
  RationalVector out(family.size(), Rational(0));
  std::vector<int> slots;
  std::function<void(int, int, int)> walk = [&](int origin, int level, int vertex) {
    if (level == k) {
      std::size_t c = 0;
      while (!(classes[c].origin == origin &&
               std::equal(classes[c].slots.begin(), classes[c].slots.end(), slots.begin())))
        ++c;
      out[static_cast<std::size_t>(vertex)] += f.weights[c] * family.prototiles[static_cast<std::size_t>(origin)].volume;
      return;
    }
    const auto& rule = family.rule_for(x[static_cast<std::size_t>(level + 1)]);
    for (int s : edges_from(family, x, level + 1, vertex)) {
      slots.push_back(s);
      walk(origin, level + 1, rule.branches[static_cast<std::size_t>(s)].parent);
      slots.pop_back();
    }
  };
  for (std::size_t v = 0; v < family.size(); ++v) walk(static_cast<int>(v), 0, static_cast<int>(v));
  return out;
}

TEST(Ergodic, PathClassesCountPaths) {
  const auto hh = halfhex_family();
  const auto x = constant_sequence(1, 4);
  EXPECT_EQ(path_classes(hh, x, 0).size(), 6u);
  EXPECT_EQ(path_classes(hh, x, 2).size(), 96u);
  const auto sol = solenoid_family(2, {3});
  EXPECT_EQ(path_classes(sol, constant_sequence(1, 3), 1).size(), 9u);
}

TEST(Ergodic, ConstantObservableGivesSupertileVolumes) {
  const auto hh = halfhex_family();
  const auto x = constant_sequence(1, 8);
  const auto V = ergodic_vectors(TLCObservable::constant(6), hh, x, 8);
  Rational scale = 1;
  for (int k = 0; k <= 8; ++k, scale *= 4)
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(V[static_cast<std::size_t>(k)][j], scale * hh.prototiles[j].volume);
}

TEST(Ergodic, VectorsMatchTileSumsOfApproximants) {
  std::mt19937 gen(3);
  const auto od = oned_family();
  const auto x = sample_sequence(MeasureSpec::bernoulli(0.4), 6, 8);
  const auto f = TLCObservable::per_type(random_weights(2, gen));
  const auto V = ergodic_vectors(f, od, x, 5);
  for (int k = 0; k <= 5; ++k) {
    for (int v = 0; v < 2; ++v) {
      // a path of length k ending at v
      PathWord path;
      int cur = v;
      std::vector<int> reversed;
      for (int level = k; level >= 1; --level) {
        int child = -1;
        const auto& rule = od.rule_for(x[static_cast<std::size_t>(level)]);
        for (std::size_t s = 0; s < rule.branches.size(); ++s)
          if (rule.branches[s].parent == cur) {
            reversed.push_back(static_cast<int>(s));
            child = rule.branches[s].child;
            break;
          }
        cur = child;
      }
      for (int level = 1; level <= k; ++level)
        path.push_back(edge_from_slot(od, x, level, reversed[static_cast<std::size_t>(k - level)]));
      const auto patch = approximant(od, x, path, 10000000, cur);
      EXPECT_EQ(integrate_patch(f, od, patch), V[static_cast<std::size_t>(k)][static_cast<std::size_t>(v)]);
    }
  }
}

TEST(Ergodic, DepthZeroEquivarianceIsExact) {
  std::mt19937 gen(9);
  for (const auto& family : builtin_families()) {
    const auto x = sample_sequence(MeasureSpec::bernoulli(std::vector<double>(family.rules.size(), 1.0 / static_cast<double>(family.rules.size()))), 12, 4);
    const auto f = TLCObservable::per_type(random_weights(family.size(), gen));
    const auto V = ergodic_vectors(f, family, x, 12);
    const auto mats = connectivity_matrices(family, x, 12);
    IntMatrix product = IntMatrix::identity(family.size());
    for (int k = 1; k <= 12; ++k) {
      EXPECT_EQ(V[static_cast<std::size_t>(k)], multiply(mats[static_cast<std::size_t>(k - 1)], V[static_cast<std::size_t>(k - 1)]));
      product = mats[static_cast<std::size_t>(k - 1)] * product;
      EXPECT_EQ(V[static_cast<std::size_t>(k)], multiply(product, V[0])) << family.name;
    }
    const auto est = cotrace_shadow(f, family, x, 6);
    EXPECT_EQ(est.a, V[0]);
    for (double r : est.residuals) EXPECT_EQ(r, 0.0);
  }
}

TEST(Ergodic, DeeperObservablesMatchPathEnumeration) {
  std::mt19937 gen(17);
  const auto hh = halfhex_family();
  const auto x = constant_sequence(1, 5);
  const auto od = oned_family();
  const auto y = sample_sequence(MeasureSpec::bernoulli(0.5), 7, 2);
  for (int m : {1, 2}) {
    TLCObservable f{m, random_weights(path_classes(hh, x, m).size(), gen)};
    const auto V = ergodic_vectors(f, hh, x, 4);
    for (int k = m; k <= 4; ++k) EXPECT_EQ(V[static_cast<std::size_t>(k)], brute_vector(f, hh, x, k));
    TLCObservable g{m, random_weights(path_classes(od, y, m).size(), gen)};
    const auto W = ergodic_vectors(g, od, y, 6);
    for (int k = m; k <= 6; ++k) EXPECT_EQ(W[static_cast<std::size_t>(k)], brute_vector(g, od, y, k));
  }
}

TEST(Ergodic, DepthOneSolenoidResidualsStayBounded) {
  std::mt19937 gen(23);
  const auto sol = solenoid_family(2, {2, 3});
  const auto x = periodic_sequence({1, 2}, 16);
  TLCObservable f{1, random_weights(path_classes(sol, x, 1).size(), gen)};
  const auto est = cotrace_shadow(f, sol, x, 15);
  ASSERT_EQ(est.residuals.size(), 15u);
  double bound = 0;
  for (const auto& w : f.weights) bound += std::abs(to_double(w));
  for (double r : est.residuals) EXPECT_LE(r, bound);
  for (std::size_t k = 1; k < est.residuals.size(); ++k) EXPECT_EQ(est.residuals[k], 0.0);
  for (std::size_t k = 1; k < est.shadow_gaps.size(); ++k) EXPECT_LT(est.shadow_gaps[k], 1e-12);
}

TEST(Ergodic, ZeroObservableShadowsZero) {
  const auto hh = halfhex_family();
  const auto x = constant_sequence(1, 6);
  const auto est = cotrace_shadow(TLCObservable{2, RationalVector(96, Rational(0))}, hh, x, 5);
  for (const auto& e : est.a) EXPECT_EQ(e, 0);
}

TEST(Ergodic, ZeroTraceObservableOnHalfHex) {
  const auto hh = halfhex_family();
  const auto x = constant_sequence(1, 14);
  const auto f = make_zero_trace_observable(hh, x, 10);
  const auto u = top_left_direction(hh, x, 10);
  Rational pairing = 0;
  for (std::size_t j = 0; j < 6; ++j) pairing += Rational(u.exact[j]) * hh.prototiles[j].volume * f.weights[j];
  EXPECT_LT(std::abs(to_double(pairing)), 1e-10);
  Rational peak = 0;
  for (const auto& w : f.weights) peak = std::max(peak, abs(w));
  EXPECT_EQ(peak, 1);

  const auto V = ergodic_vectors(f, hh, x, 12);
  std::vector<double> ratio;
  for (int k = 1; k <= 12; ++k) ratio.push_back(max_norm(V[static_cast<std::size_t>(k)]) / std::pow(2.0, k));
  EXPECT_LT(*std::max_element(ratio.begin(), ratio.end()) / *std::min_element(ratio.begin(), ratio.end()), 10.0);
  EXPECT_LT(max_norm(V[12]) / std::pow(4.0, 12), 1e-3);
}

TEST(Ergodic, SolenoidHasNoZeroTraceObservable) {
  EXPECT_THROW(make_zero_trace_observable(solenoid_family(2, {2}), constant_sequence(1, 4), 3), StructuralError);
}

TEST(Ergodic, OneDimensionalZeroTraceGrowsSlowerThanVolume) {
  const auto od = oned_family();
  const auto x = sample_sequence(MeasureSpec::bernoulli(0.5), 40, 12);
  const auto f = make_zero_trace_observable(od, x, 30);
  const auto V = ergodic_vectors(f, od, x, 30);
  const auto vol = ergodic_vectors(TLCObservable::constant(2), od, x, 30);
  std::vector<double> ratio;
  for (int k = 5; k <= 30; k += 5) ratio.push_back(max_norm(V[static_cast<std::size_t>(k)]) / max_norm(vol[static_cast<std::size_t>(k)]));
  for (std::size_t i = 1; i < ratio.size(); ++i) EXPECT_LT(ratio[i], ratio[i - 1]);
  EXPECT_LT(ratio.back(), 1e-3);
}

TEST(Ergodic, RegionIntegralsAreAdditive) {
  std::mt19937 gen(5);
  const auto hh = halfhex_family();
  const auto x = constant_sequence(1, 14);
  SupertileTree tree(hh, x);
  const auto f = TLCObservable::per_type(random_weights(6, gen));
  for (int T : {6, 13, 24}) {
    const auto report = decompose_region(tree, Region::centered_box(1), T);
    const auto V = ergodic_vectors(f, hh, x, report.top_level);
    const Rational by_pieces = integrate_nodes(V, report.pieces);
    EXPECT_EQ(by_pieces, integrate_patch(f, hh, generate_patch(tree, Region::centered_box(T))));
    // splitting the pieces into two groups
    std::vector<SupertileNode> a(report.pieces.begin(), report.pieces.begin() + static_cast<long>(report.pieces.size() / 2));
    std::vector<SupertileNode> b(report.pieces.begin() + static_cast<long>(report.pieces.size() / 2), report.pieces.end());
    EXPECT_EQ(integrate_nodes(V, a) + integrate_nodes(V, b), by_pieces);
  }
}

std::vector<Rational> dyadic(int lo, int hi) {
  std::vector<Rational> out;
  for (int m = lo; m <= hi; ++m) out.push_back(Rational(1L << m));
  return out;
}

TEST(Ergodic, VolumeDeviationSlopeIsDimension) {
  const auto hh = halfhex_family();
  SupertileTree tree(hh, constant_sequence(1, 16));
  const auto report = deviation_over_regions(TLCObservable::constant(6), tree, Region::centered_box(1), dyadic(2, 8));
  EXPECT_NEAR(report.slope, 2.0, 0.05);
}

TEST(Ergodic, ZeroTraceRegionSlopeRespectsTheCap) {
  const auto hh = halfhex_family();
  const auto x = constant_sequence(1, 16);
  SupertileTree tree(hh, x);
  const auto f = make_zero_trace_observable(hh, x, 10);
  const auto report = deviation_over_regions(f, tree, Region::centered_box(1), dyadic(3, 9));
  EXPECT_LE(report.slope, 1.1);

  // control: a visible top component restores volume growth
  TLCObservable g = f;
  for (auto& w : g.weights) w += ratio(1, 2);
  const auto control = deviation_over_regions(g, tree, Region::centered_box(1), dyadic(3, 9));
  EXPECT_NEAR(control.slope, 2.0, 0.1);
}

TEST(Ergodic, TooFewDilationsAreRejected) {
  const auto hh = halfhex_family();
  SupertileTree tree(hh, constant_sequence(1, 10));
  EXPECT_THROW(deviation_over_regions(TLCObservable::constant(6), tree, Region::centered_box(1), dyadic(2, 4)),
               InsufficientData);
}

TEST(Ergodic, DeviationCapUsesTheSpectrum) {
  LyapunovReport r;
  r.exponents = {std::log(4.0), std::log(2.0), 0.0};
  EXPECT_NEAR(deviation_cap(r, 2, 2), 1.0, 1e-12);
  r.exponents = {std::log(16.0), 0.5 * std::log(52.0), std::log(2.0)};
  EXPECT_NEAR(deviation_cap(r, 2, 2), std::log(52.0) / std::log(16.0), 1e-12);
  EXPECT_NEAR(deviation_cap(r, 3, 2), 1.0, 1e-12);
}

TEST(Ergodic, SolenoidSpecialSequenceIsAligned) {
  const auto sol = solenoid_family(2, {2, 3});
  const auto x = periodic_sequence({1, 2}, 20);
  SupertileTree tree(sol, x);
  const auto seq = special_averaging_sequence(tree, Region::centered_box(1), 0.01, 6);
  EXPECT_EQ(seq.T_star, 1);
  EXPECT_EQ(seq.hausdorff, 0.0);
  ASSERT_EQ(seq.entries.size(), 6u);
  for (const auto& e : seq.entries) {
    Rational q = 1;
    for (int k = 1; k <= e.k; ++k) q *= x[static_cast<std::size_t>(k)] == 1 ? 2 : 3;
    EXPECT_EQ(e.T, q);
    EXPECT_EQ(e.k % 2, 0);  // recurrence of the period-2 word
  }
}

TEST(Ergodic, HalfHexSpecialSequenceGeometry) {
  const auto hh = halfhex_family();
  const auto x = constant_sequence(1, 22);
  SupertileTree tree(hh, x);
  const auto disk = Region::disk({0, 0}, 1);
  const auto seq = special_averaging_sequence(tree, disk, 0.05, 5);
  EXPECT_LE(seq.hausdorff, 0.05);
  EXPECT_LE(sampled_hausdorff(hh, seq.base, seq.T_star, disk, 2000), 0.06);
  for (const auto& t : seq.base.tiles) EXPECT_TRUE(disk.dilated(seq.T_star).contains(tile_polygon(hh, t), 2));

  for (const auto& e : seq.entries) {
    EXPECT_EQ(e.T, tree.inverse_theta(e.k) * seq.T_star);
    // every superpatch piece is a level-k node under the anchor
    std::vector<std::pair<int, Vec2>> under;
    tree.expand(e.anchor, [&](const SupertileNode& n) {
      if (n.level > e.k) return true;
      under.emplace_back(n.type, n.offset);
      return false;
    });
    std::sort(under.begin(), under.end());
    std::vector<long> counts(6, 0);
    for (const auto& p : e.pieces) {
      EXPECT_TRUE(std::binary_search(under.begin(), under.end(), std::make_pair(p.type, p.offset)));
      counts[static_cast<std::size_t>(p.type)] += 1;
    }
    EXPECT_EQ(counts, seq.counts);
  }
  // the scaled base lands on the pieces
  const auto& e = seq.entries.front();
  for (std::size_t i = 0; i < seq.base.size(); ++i) {
    const Vec2 image = e.T * ((1 / seq.T_star) * seq.base.tiles[i].translation + e.tau);
    EXPECT_EQ(image, e.pieces[i].offset);
  }
}

TEST(Ergodic, SuperpatchIntegralsMatchTileSums) {
  std::mt19937 gen(31);
  const auto hh = halfhex_family();
  const auto x = constant_sequence(1, 20);
  SupertileTree tree(hh, x);
  const auto f = TLCObservable::per_type(random_weights(6, gen));
  const auto seq = special_averaging_sequence(tree, Region::centered_box(1), 0.2, 5);
  const auto dev = deviation_along_sequence(f, seq, hh, x);
  const auto& e = seq.entries.front();
  const auto patch = expand_to_tiles(tree, e.pieces);
  EXPECT_EQ(dev.integrals.front(), integrate_patch(f, hh, patch));
}

TEST(Ergodic, SpecialSequenceSlopes) {
  const auto hh = halfhex_family();
  const auto x = constant_sequence(1, 24);
  SupertileTree tree(hh, x);
  const auto f = make_zero_trace_observable(hh, x, 10);
  const auto seq = special_averaging_sequence(tree, Region::centered_box(1), 0.05, 10);
  const auto dev = deviation_along_sequence(f, seq, hh, x);
  EXPECT_NEAR(dev.running_max_slope, 1.0, 0.08);

  const auto vol = deviation_along_sequence(TLCObservable::constant(6), seq, hh, x);
  EXPECT_NEAR(vol.slope, 2.0, 0.05);

  const auto pair = halfhex_pair_family();
  const auto y = constant_sequence(2, 66);
  const auto g = make_zero_trace_observable(pair, y, 10);
  const auto comb = combinatorial_sequence(pair, y, {1, 0, 0, 0, 0, 0}, 64);
  EXPECT_NEAR(deviation_along_sequence(g, comb, pair, y).running_max_slope, std::log(52.0) / std::log(16.0), 0.08);
}

TEST(Ergodic, DegenerateSequenceObservable) {
  const auto hh = halfhex_family();
  const auto x = constant_sequence(1, 12);
  const auto seq = combinatorial_sequence(hh, x, {1, 1, 1, 1, 1, 1}, 8);
  EXPECT_THROW(deviation_along_sequence(TLCObservable::constant(6, 0), seq, hh, x), NumericError);
  const auto short_seq = combinatorial_sequence(hh, x, {1, 1, 1, 1, 1, 1}, 3);
  EXPECT_THROW(deviation_along_sequence(TLCObservable::constant(6), short_seq, hh, x), InsufficientData);
}

TEST(Ergodic, MissingRecurrenceIsReported) {
  SymbolSequence x;
  x.positive = {1, 2, 2, 2, 2};
  EXPECT_THROW(combinatorial_sequence(oned_family(), x, {1, 0}, 4, 2), StructuralError);
}

}  // namespace
}  // namespace tilelab
