#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "tilelab/fit.hpp"
#include "tilelab/tiling.hpp"

namespace tilelab {
namespace {

bool is_submultiset(const Patch& small, const Patch& big) {
  const auto s = tile_multiset(small);
  const auto b = tile_multiset(big);
  return std::includes(b.begin(), b.end(), s.begin(), s.end(), [](const auto& p, const auto& q) {
    return p.first < q.first || (p.first == q.first && p.second < q.second);
  });
}

TEST(Tiling, SinglePrototileWindow) {
  const auto hh = halfhex_family();
  const auto x = constant_sequence(1, 10);
  for (int v = 0; v < 6; ++v) {
    const auto window = Region::polygon(hh.prototiles[static_cast<std::size_t>(v)].vertices);
    const auto patch = generate_patch(hh, x, window, {.origin_type = v});
    ASSERT_EQ(patch.size(), 1u);
    EXPECT_EQ(patch.tiles[0].type, v);
    EXPECT_EQ(patch.tiles[0].translation, Vec2{});
  }
}

TEST(Tiling, DiskPatchMatchesApproximantFilter) {
  const auto hh = halfhex_family();
  const auto x = constant_sequence(1, 16);
  SupertileTree tree(hh, x);
  const auto disk = Region::disk({0, 0}, 10);
  const auto patch = generate_patch(tree, disk);
  const int k = covering_level(tree, disk);
  const auto approx = approximant(hh, x, PathWord(tree.path().begin(), tree.path().begin() + k), 10000000,
                                  tree.origin_type());
  // covering approximant has 4^k times the volume of its type
  Rational scale = 1;
  for (int i = 0; i < k; ++i) scale *= 4;
  Rational total = 0;
  for (const auto& t : approx.tiles) total += signed_area(tile_polygon(hh, t));
  EXPECT_EQ(total, scale * hh.prototiles[static_cast<std::size_t>(tree.central(k).type)].volume);

  Patch filtered;
  filtered.dimension = 2;
  for (const auto& t : approx.tiles) {
    const Polygon poly = tile_polygon(hh, t);
    const bool inside = std::all_of(poly.begin(), poly.end(), [](const Vec2& v) { return dot(v, v) <= 100; });
    if (inside) filtered.tiles.push_back(t);
  }
  EXPECT_GT(patch.size(), 20u);
  EXPECT_EQ(tile_multiset(patch), tile_multiset(filtered));
}

TEST(Tiling, PatchesAreMonotoneInTheWindow) {
  const auto od = oned_family();
  const auto hh = halfhex_family();
  const auto x1 = sample_sequence(MeasureSpec::bernoulli(0.5), 40, 3);
  const auto x2 = constant_sequence(1, 12);
  for (int side : {2, 5, 9, 16}) {
    const auto small = Region::centered_box(side);
    const auto big = Region::box({-side, -side / 2 - 1}, {2 * side + 1, side + 3});
    EXPECT_TRUE(is_submultiset(generate_patch(od, x1, small), generate_patch(od, x1, big)));
    EXPECT_TRUE(is_submultiset(generate_patch(hh, x2, small), generate_patch(hh, x2, big)));
  }
}

TEST(Tiling, BudgetOverflowCarriesPartialPatch) {
  const auto hh = halfhex_family();
  const auto x = constant_sequence(1, 12);
  try {
    generate_patch(hh, x, Region::centered_box(20), {.tile_budget = 10});
    FAIL() << "expected PartialCoverError";
  } catch (const PartialCoverError& e) {
    EXPECT_EQ(e.partial().size(), 11u);
  }
}

TEST(Tiling, ShortSequenceCannotCoverLargeWindow) {
  EXPECT_THROW(generate_patch(halfhex_family(), constant_sequence(1, 2), Region::centered_box(100)), StructuralError);
}

TEST(Tiling, AlignedSupertileIsOnePiece) {
  const auto hh = halfhex_family();
  const auto x = constant_sequence(1, 10);
  for (int k : {1, 2, 3}) {
    SupertileTree tree(hh, x);
    const auto node = tree.central(k);
    const auto report = decompose_region(tree, Region::polygon(tree.footprint(node)), 1);
    ASSERT_EQ(report.top_level, k);
    EXPECT_EQ(report.total_pieces(), 1);
    EXPECT_EQ(report.counts[static_cast<std::size_t>(k)][static_cast<std::size_t>(node.type)], 1);
    EXPECT_EQ(report.boundary_tiles, 0);
    EXPECT_EQ(report.pieces_volume, report.footprint_volume);
  }
}

TEST(Tiling, TinyDilationIsEmpty) {
  const auto report = decompose_region(halfhex_family(), constant_sequence(1, 6), Region::centered_box(1),
                                       ratio(1, 100));
  EXPECT_EQ(report.top_level, -1);
  EXPECT_EQ(report.total_pieces(), 0);
  EXPECT_EQ(report.pieces_volume, 0);
}

TEST(Tiling, DecompositionReassemblesThePatch) {
  const auto hh = halfhex_family();
  const auto x = constant_sequence(1, 16);
  for (int T : {8, 16, 32}) {
    SupertileTree tree(hh, x);
    const auto report = decompose_region(tree, Region::centered_box(1), T);
    const auto patch = generate_patch(tree, Region::centered_box(T));
    const auto rebuilt = expand_to_tiles(tree, report.pieces);
    EXPECT_EQ(tile_multiset(rebuilt), tile_multiset(patch)) << "T=" << T;
    EXPECT_EQ(report.pieces_volume, report.footprint_volume);
    ASSERT_GE(report.top_level, 0);
    EXPECT_GT(report.total_by_level()[static_cast<std::size_t>(report.top_level)], 0);
  }
}

TEST(Tiling, OneDimensionalDecompositionReassembles) {
  const auto od = oned_family();
  const auto x = sample_sequence(MeasureSpec::bernoulli(0.3), 60, 11);
  SupertileTree tree(od, x);
  const auto report = decompose_region(tree, Region::centered_box(2), 50);
  const auto patch = generate_patch(tree, Region::centered_box(100));
  EXPECT_EQ(tile_multiset(expand_to_tiles(tree, report.pieces)), tile_multiset(patch));
  EXPECT_LE(report.boundary_tiles, 2);
}

TEST(Tiling, PiecesAreInteriorDisjoint) {
  const auto hh = halfhex_family();
  const auto x = constant_sequence(1, 12);
  SupertileTree tree(hh, x);
  const auto report = decompose_region(tree, Region::disk({0, 0}, 1), 12);
  ASSERT_GT(report.pieces.size(), 3u);
  for (std::size_t a = 0; a < report.pieces.size(); ++a)
    for (std::size_t b = a + 1; b < report.pieces.size(); ++b)
      EXPECT_EQ(intersection_area(tree.footprint(report.pieces[a]), tree.footprint(report.pieces[b])), 0);
}

TEST(Tiling, BoundaryCountsGrowLikeThePerimeter) {
  const auto hh = halfhex_family();
  const auto x = constant_sequence(1, 16);
  SupertileTree tree(hh, x);
  std::vector<double> lt, lc, lb, tn;
  for (int m = 3; m <= 9; ++m) {
    const auto report = decompose_region(tree, Region::centered_box(1), 1 << m);
    lt.push_back(std::log(static_cast<double>(1 << m)));
    lc.push_back(std::log(static_cast<double>(report.total_pieces())));
    lb.push_back(std::log(static_cast<double>(report.boundary_tiles)));
    tn.push_back(report.theta_n_times_T);
    // per-level bound with the reported constant
    for (std::size_t i = 0; i < report.counts.size(); ++i) EXPECT_LE(report.k2_by_level[i], report.k2);
  }
  EXPECT_LE(fit_line_top_half(lt, lc).slope, 1.1);
  EXPECT_NEAR(fit_line(lt, lb).slope, 1.0, 0.1);
  // theta_(n) T stays in a bounded band
  EXPECT_LT(*std::max_element(tn.begin(), tn.end()) / *std::min_element(tn.begin(), tn.end()), 8.0);
}

TEST(Tiling, MatrixOnlyLevelsAreUnsupported) {
  const auto pair = halfhex_pair_family();
  EXPECT_THROW(generate_patch(pair, constant_sequence(2, 8), Region::centered_box(6)), UnsupportedOperation);
}

}  // namespace
}  // namespace tilelab
