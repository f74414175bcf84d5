#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "tilelab/errors.hpp"
#include "tilelab/solenoid.hpp"

namespace tilelab {
namespace {

// Digits of the cell reached from the base tile by moving j cells along
// coordinate i: schoolbook mixed-radix addition with carries.
std::vector<int> add_cells(const SolenoidSpec& spec, const BasePoint& p, int i, long j, int levels) {
  std::vector<int> out(levels);
  long carry = j;
  for (int k = 1; k <= levels; ++k) {
    long s = p.digits[k - 1][i] + carry;
    out[k - 1] = static_cast<int>(s % spec.q(k));
    carry = s / spec.q(k);
  }
  return out;
}

// Orbit integral by visiting every unit cell of [0, q_(n)]^d and reading f
// through the path of edges of that cell.
Rational brute_orbit_integral(const SolenoidSpec& spec, const CylinderObservable& f, const BasePoint& p, int n) {
  const long Q = spec.q_prod(n).get_si();
  const int d = spec.d;
  const int m = f.depth;
  Rational S = 0;
  std::vector<long> j(d, 0);
  std::function<void(int)> walk = [&](int i) {
    if (i == d) {
      Rational w = 1;
      std::vector<std::vector<int>> digits(d);
      for (int c = 0; c < d; ++c) {
        if (j[c] == 0) w *= 1 - p.y[c];
        if (j[c] == Q) w *= p.y[c];
        digits[c] = add_cells(spec, p, c, j[c], m);
      }
      if (w == 0) return;
      std::vector<int> edges;
      for (int k = 1; k <= m; ++k) {
        std::vector<int> level(d);
        for (int c = 0; c < d; ++c) level[c] = digits[c][k - 1];
        edges.push_back(edge_from_digits(spec, k, level));
      }
      S += w * f.values[cell_from_path(spec, edges)];
      return;
    }
    for (j[i] = 0; j[i] <= Q; ++j[i]) walk(i + 1);
  };
  walk(0);
  return S;
}

// All partitions of the path space into cylinders of depth <= max_depth,
// enumerated explicitly; returns the largest total oscillation.
Rational brute_variation(const SolenoidSpec& spec, const CylinderObservable& f, int max_depth) {
  const int d = spec.d;
  const int m = f.depth;
  // a cylinder is a prefix of edges; its values are those of the depth-m cells extending it
  std::function<Rational(const std::vector<int>&)> osc = [&](const std::vector<int>& prefix) -> Rational {
    std::vector<Rational> vals;
    std::function<void(std::vector<int>&)> extend = [&](std::vector<int>& path) {
      if (static_cast<int>(path.size()) >= m) {
        std::vector<int> head(path.begin(), path.begin() + m);
        vals.push_back(f.values[cell_from_path(spec, head)]);
        return;
      }
      int k = static_cast<int>(path.size()) + 1;
      int edges = 1;
      for (int c = 0; c < d; ++c) edges *= spec.q(k);
      for (int e = 1; e <= edges; ++e) {
        path.push_back(e);
        extend(path);
        path.pop_back();
      }
    };
    std::vector<int> path = prefix;
    extend(path);
    return *std::max_element(vals.begin(), vals.end()) - *std::min_element(vals.begin(), vals.end());
  };
  std::function<std::vector<Rational>(std::vector<int>&)> totals = [&](std::vector<int>& prefix) {
    std::vector<Rational> out{osc(prefix)};
    if (static_cast<int>(prefix.size()) == max_depth) return out;
    int k = static_cast<int>(prefix.size()) + 1;
    int edges = 1;
    for (int c = 0; c < d; ++c) edges *= spec.q(k);
    std::vector<Rational> combined{Rational(0)};
    for (int e = 1; e <= edges; ++e) {
      prefix.push_back(e);
      auto child = totals(prefix);
      prefix.pop_back();
      std::vector<Rational> next;
      for (const auto& a : combined)
        for (const auto& b : child) next.push_back(a + b);
      combined = std::move(next);
    }
    out.insert(out.end(), combined.begin(), combined.end());
    return out;
  };
  std::vector<int> root;
  auto all = totals(root);
  return *std::max_element(all.begin(), all.end());
}

TEST(Solenoid, CylinderMeasures) {
  EXPECT_EQ(cylinder_measure(SolenoidSpec(1, {2, 2, 2}), 3), ratio(1, 8));
  EXPECT_EQ(cylinder_measure(SolenoidSpec(1, {2}), 0), Rational(1));
  EXPECT_EQ(cylinder_measure(SolenoidSpec(2, {2, 3}), 2), ratio(1, 36));
  EXPECT_EQ(cylinder_measure(SolenoidSpec(2, {}, {2}), 3), ratio(1, 64));
  EXPECT_THROW(cylinder_measure(SolenoidSpec(1, {2}), -1), StructuralError);
}

TEST(Solenoid, RadiusSequences) {
  const auto s = parse_solenoid(1, "5|2,3");
  EXPECT_EQ(s.q(1), 5);
  EXPECT_EQ(s.q(2), 2);
  EXPECT_EQ(s.q(5), 3);
  EXPECT_EQ(s.q_prod(3), BigInt(30));
  EXPECT_EQ(s.levels(), -1);
  const auto finite = parse_solenoid(2, "2,3");
  EXPECT_EQ(finite.levels(), 2);
  EXPECT_THROW(finite.q(3), StructuralError);
  EXPECT_THROW(parse_solenoid(1, "2,1"), StructuralError);
  EXPECT_THROW(parse_solenoid(1, "2,x"), StructuralError);
}

TEST(Solenoid, EdgesAndCells) {
  const SolenoidSpec s(2, {}, {2, 3});
  for (int k = 1; k <= 2; ++k)
    for (int e = 1; e <= s.q(k) * s.q(k); ++e) EXPECT_EQ(edge_from_digits(s, k, digits_from_edge(s, k, e)), e);
  // edges (digits (1,0) at level 1, (2,1) at level 2) sit at grid position (1 + 2*2, 0 + 1*2) on a 6x6 grid
  const std::vector<int> path{edge_from_digits(s, 1, {1, 0}), edge_from_digits(s, 2, {2, 1})};
  EXPECT_EQ(cell_from_path(s, path), 5u + 2u * 6u);
}

TEST(Solenoid, VariationExamples) {
  const SolenoidSpec s(1, {}, {2});
  EXPECT_EQ(variation(s, {2, RationalVector(4, Rational(7))}), Rational(0));
  EXPECT_EQ(variation(s, {1, {Rational(3), Rational(-2)}}), Rational(5));
  EXPECT_EQ(variation(s, {0, {Rational(4)}}), Rational(0));
  // constant blocks: only the coarsest partition sees the oscillation
  EXPECT_EQ(variation(s, {2, {Rational(0), Rational(5), Rational(0), Rational(5)}}), Rational(5));
  // alternating inside blocks: the depth-1 partition wins
  EXPECT_EQ(variation(s, {2, {Rational(0), Rational(0), Rational(1), Rational(1)}}), Rational(2));
}

TEST(Solenoid, VariationMatchesPartitionEnumeration) {
  std::uint64_t seed = 11;
  for (const auto& spec : {SolenoidSpec(1, {}, {2}), SolenoidSpec(1, {}, {2, 3}), SolenoidSpec(2, {}, {2})}) {
    for (int depth = 1; depth <= 2; ++depth) {
      for (int trial = 0; trial < 4; ++trial) {
        const auto f = random_observable(spec, depth, seed++);
        EXPECT_EQ(variation(spec, f), brute_variation(spec, f, depth + 1)) << "d=" << spec.d << " depth=" << depth;
      }
    }
  }
}

TEST(Solenoid, MeanIsTheCylinderAverage) {
  const SolenoidSpec s(2, {}, {2, 3});
  const auto f = random_observable(s, 2, 5);
  Rational sum = 0;
  for (const auto& v : f.values) sum += v;
  EXPECT_EQ(mean(s, f), sum / 36);
  EXPECT_EQ(mean(s, {0, {Rational(3)}}), Rational(3));
}

TEST(Solenoid, OrbitIntegralMatchesCellEnumeration) {
  std::uint64_t seed = 100;
  for (const auto& spec : {SolenoidSpec(1, {}, {2}), SolenoidSpec(1, {}, {2, 3}), SolenoidSpec(2, {}, {2}),
                           SolenoidSpec(2, {}, {2, 3})}) {
    const int n_max = spec.d == 1 ? 8 : 5;
    for (int depth = 0; depth <= 2; ++depth) {
      const auto f = random_observable(spec, depth, seed++);
      const auto p = random_base_point(spec, 3, seed++);
      for (int n = 0; n <= n_max; ++n)
        EXPECT_EQ(orbit_integral(spec, f, p, n), brute_orbit_integral(spec, f, p, n))
            << "d=" << spec.d << " depth=" << depth << " n=" << n;
    }
  }
}

TEST(Solenoid, ConstantObservableHasNoGap) {
  const SolenoidSpec s(2, {}, {2, 3});
  const CylinderObservable f{2, RationalVector(36, ratio(7, 3))};
  const auto report = dk_check(s, f, random_base_point(s, 2, 3), 0, 10);
  EXPECT_EQ(report.var, Rational(0));
  for (const auto& row : report.rows) EXPECT_EQ(row.gap, Rational(0));
  EXPECT_TRUE(report.holds);
}

TEST(Solenoid, DepthOneSumsAreAligned) {
  const SolenoidSpec s(2, {}, {3});
  const auto f = random_observable(s, 1, 17);
  BasePoint p = random_base_point(s, 1, 4);
  p.y = {ratio(1, 3), ratio(5, 7)};
  const auto report = dk_check(s, f, p, 1, 8);
  for (const auto& row : report.rows) EXPECT_EQ(row.gap, Rational(0)) << row.n;
  // at n = 0 only the fractional cells contribute
  const auto r0 = dk_check(s, f, p, 0, 0);
  EXPECT_LE(r0.rows[0].gap, r0.var);
}

TEST(Solenoid, RandomDepthTwoPlanarBound) {
  const SolenoidSpec s(2, {}, {2});
  std::mt19937 gen(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = random_observable(s, 2, gen());
    const auto p = random_base_point(s, 2, gen());
    const auto report = dk_check(s, f, p, 1, 10);
    EXPECT_TRUE(report.holds);
    if (report.var > 0 && p.y[0] != 0 && p.y[1] != 0) EXPECT_LT(report.max_gap, report.var);
    // gaps at n = 1 come from direct enumeration as well
    const auto p1 = brute_orbit_integral(s, f, p, 1);
    EXPECT_EQ(report.rows[0].S, p1);
  }
}

TEST(Solenoid, GapIgnoresAddedConstants) {
  const SolenoidSpec s(1, {}, {2, 3});
  const auto f = random_observable(s, 2, 8);
  auto g = f;
  for (auto& v : g.values) v += ratio(13, 4);
  const auto p = random_base_point(s, 2, 9);
  const auto a = dk_check(s, f, p, 0, 9);
  const auto b = dk_check(s, g, p, 0, 9);
  EXPECT_EQ(a.var, b.var);
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].gap, b.rows[i].gap);
}

TEST(Solenoid, MalformedInputs) {
  const SolenoidSpec s(1, {2, 2});
  EXPECT_THROW(variation(s, {1, RationalVector(3)}), StructuralError);
  EXPECT_THROW(dk_check(s, {1, RationalVector(2)}, random_base_point(s, 1, 0), 0, 3), StructuralError);
  BasePoint bad = random_base_point(s, 1, 0);
  bad.y[0] = 1;
  EXPECT_THROW(orbit_integral(s, {1, RationalVector(2)}, bad, 1), StructuralError);
}

}  // namespace
}  // namespace tilelab
