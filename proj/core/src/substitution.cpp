#include "tilelab/substitution.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "tilelab/errors.hpp"

namespace tilelab {

bool RuleFamily::geometric() const {
  for (std::size_t i = 0; i < rules.size(); ++i)
    if (!rule_geometric(i)) return false;
  return !rules.empty();
}

bool RuleFamily::rule_geometric(std::size_t rule_index) const {
  if (dimension > 2 || rule_index >= rules.size() || !rules[rule_index].geometric) return false;
  return std::all_of(prototiles.begin(), prototiles.end(), [](const Prototile& t) { return !t.vertices.empty(); });
}

const SubstitutionRule& RuleFamily::rule_for(int symbol) const {
  if (symbol < 1 || static_cast<std::size_t>(symbol) > rules.size()) {
    throw StructuralError("symbol " + std::to_string(symbol) + " outside alphabet of family '" + name + "'");
  }
  return rules[static_cast<std::size_t>(symbol - 1)];
}

RationalVector RuleFamily::volumes() const {
  RationalVector out;
  out.reserve(prototiles.size());
  for (const auto& t : prototiles) out.push_back(t.volume);
  return out;
}

namespace {

Polygon image_of(const Branch& b, const Rational& theta, const std::vector<Prototile>& prototiles) {
  return translated(scaled(prototiles[static_cast<std::size_t>(b.child)].vertices, theta), b.tau);
}

void check_rule(const SubstitutionRule& rule, std::size_t count) {
  if (rule.theta <= 0 || rule.theta >= 1) throw StructuralError("contraction ratio outside (0,1) in rule " + std::to_string(rule.id));
  for (const auto& b : rule.branches) {
    if (b.parent < 0 || b.child < 0 || static_cast<std::size_t>(b.parent) >= count ||
        static_cast<std::size_t>(b.child) >= count) {
      throw StructuralError("branch references unknown prototile in rule " + std::to_string(rule.id));
    }
  }
}

Rational area_sum(const std::vector<Polygon>& pieces) {
  Rational s = 0;
  for (const auto& p : pieces) s += signed_area(p);
  return s;
}

// Signed inclusion-exclusion over images; branches whose running intersection
// has zero area are pruned, so valid rules stop at pairs.
void cover_dfs(const std::vector<std::vector<Polygon>>& image_triangles, std::size_t start,
               const std::vector<Polygon>& pieces, int depth, Rational& covered) {
  for (std::size_t b = start; b < image_triangles.size(); ++b) {
    std::vector<Polygon> next;
    for (const auto& piece : pieces) {
      const Box pb = bounding_box(piece);
      for (const auto& tri : image_triangles[b]) {
        if (!boxes_overlap(pb, bounding_box(tri))) continue;
        Polygon clipped = clip_convex(piece, tri);
        if (!clipped.empty() && signed_area(clipped) > 0) next.push_back(std::move(clipped));
      }
    }
    const Rational a = area_sum(next);
    if (a == 0) continue;
    if (depth % 2 == 1) {
      covered += a;
    } else {
      covered -= a;
    }
    cover_dfs(image_triangles, b + 1, next, depth + 1, covered);
  }
}

Rational interval_union_within(std::vector<std::pair<Rational, Rational>> spans, const Rational& lo, const Rational& hi) {
  std::sort(spans.begin(), spans.end());
  Rational total = 0;
  Rational cursor = lo;
  for (auto [a, b] : spans) {
    if (a < cursor) a = cursor;
    if (b > hi) b = hi;
    if (b > a) {
      total += b - a;
      cursor = b;
    }
  }
  return total;
}

}  // namespace

ValidationReport validate_rule(const SubstitutionRule& rule, const std::vector<Prototile>& prototiles, int dimension,
                               const Rational& tol) {
  if (!rule.geometric) throw UnsupportedOperation("validate_rule needs branch translations");
  if (tol <= 0) throw StructuralError("validation tolerance must be positive");
  check_rule(rule, prototiles.size());
  if (dimension < 1 || dimension > 2) throw UnsupportedOperation("geometric validation supports d in {1,2}");

  ValidationReport report;
  report.tolerance = tol;
  report.residual.assign(prototiles.size(), Rational(0));
  report.excess.assign(prototiles.size(), Rational(0));
  bool pass = true;

  for (std::size_t parent = 0; parent < prototiles.size(); ++parent) {
    const Polygon& shape = prototiles[parent].vertices;
    const Rational parent_volume = tile_volume(shape, dimension);
    std::vector<Polygon> images;
    for (const auto& b : rule.branches)
      if (static_cast<std::size_t>(b.parent) == parent) images.push_back(image_of(b, rule.theta, prototiles));

    Rational overlap = 0;
    for (std::size_t a = 0; a < images.size(); ++a) {
      for (std::size_t b = a + 1; b < images.size(); ++b) {
        const Rational o = overlap_volume(images[a], images[b], dimension);
        if (o > overlap) overlap = o;
      }
    }
    Rational excess = 0;
    for (const auto& img : images) excess += tile_volume(img, dimension) - overlap_volume(img, shape, dimension);

    Rational covered = 0;
    if (dimension == 1) {
      std::vector<std::pair<Rational, Rational>> spans;
      for (const auto& img : images) spans.emplace_back(std::min(img[0].x, img[1].x), std::max(img[0].x, img[1].x));
      covered = interval_union_within(spans, std::min(shape[0].x, shape[1].x), std::max(shape[0].x, shape[1].x));
    } else {
      std::vector<std::vector<Polygon>> image_triangles;
      image_triangles.reserve(images.size());
      for (const auto& img : images) image_triangles.push_back(triangulate(img));
      cover_dfs(image_triangles, 0, triangulate(shape), 1, covered);
    }

    report.residual[parent] = parent_volume - covered;
    report.excess[parent] = excess;
    if (overlap > report.max_overlap) report.max_overlap = overlap;
    const Rational limit = tol * parent_volume;
    if (!(report.residual[parent] < limit && overlap < limit && excess < limit)) pass = false;
  }
  report.pass = pass;
  return report;
}

SubstitutionMatrix substitution_matrix(const SubstitutionRule& rule, std::size_t prototile_count) {
  check_rule(rule, prototile_count);
  SubstitutionMatrix m(prototile_count, prototile_count);
  for (const auto& b : rule.branches) m(static_cast<std::size_t>(b.parent), static_cast<std::size_t>(b.child)) += 1;
  return m;
}

SubstitutionRule matrix_rule(int id, const Rational& theta, const IntMatrix& m) {
  SubstitutionRule rule;
  rule.id = id;
  rule.theta = theta;
  rule.geometric = false;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (m(i, j) < 0) throw StructuralError("negative multiplicity in rule matrix");
      const unsigned long count = m(i, j).get_ui();
      for (unsigned long c = 0; c < count; ++c) rule.branches.push_back({static_cast<int>(i), static_cast<int>(j), Vec2{}});
    }
  }
  return rule;
}

void canonicalize(SubstitutionRule& rule) {
  std::stable_sort(rule.branches.begin(), rule.branches.end(), [](const Branch& a, const Branch& b) {
    return a.parent < b.parent || (a.parent == b.parent && a.child < b.child);
  });
}

void finalize_prototile(Prototile& tile, int dimension, bool puncture_given) {
  if (tile.vertices.empty()) {
    if (tile.volume <= 0) throw StructuralError("prototile " + std::to_string(tile.id) + " has non-positive volume");
    return;
  }
  if (dimension == 1) {
    if (tile.vertices.size() != 2) throw StructuralError("1D prototile needs two endpoints");
    for (auto& v : tile.vertices) v.y = 0;
    if (tile.vertices[1].x < tile.vertices[0].x) std::swap(tile.vertices[0], tile.vertices[1]);
    tile.volume = tile.vertices[1].x - tile.vertices[0].x;
    if (tile.volume <= 0) throw StructuralError("prototile " + std::to_string(tile.id) + " has non-positive length");
    if (!(tile.vertices[0].x < 0 && 0 < tile.vertices[1].x)) {
      throw StructuralError("origin not interior to prototile " + std::to_string(tile.id));
    }
    if (!puncture_given) tile.puncture = centroid(tile.vertices);
    const Rational gap = std::min(tile.puncture.x - tile.vertices[0].x, tile.vertices[1].x - tile.puncture.x);
    if (gap <= 0) throw StructuralError("puncture outside prototile " + std::to_string(tile.id));
    tile.rho = gap.get_d();
    return;
  }
  if (signed_area(tile.vertices) < 0) std::reverse(tile.vertices.begin(), tile.vertices.end());
  if (!is_simple(tile.vertices)) throw StructuralError("prototile " + std::to_string(tile.id) + " is not a simple polygon");
  tile.volume = signed_area(tile.vertices);
  if (tile.volume <= 0) throw StructuralError("prototile " + std::to_string(tile.id) + " has non-positive area");
  if (locate(tile.vertices, Vec2{}) != Location::inside) {
    throw StructuralError("origin not interior to prototile " + std::to_string(tile.id));
  }
  if (!puncture_given) tile.puncture = centroid(tile.vertices);
  if (locate(tile.vertices, tile.puncture) != Location::inside) {
    throw StructuralError("puncture not interior to prototile " + std::to_string(tile.id));
  }
  tile.rho = std::sqrt(boundary_distance2(tile.vertices, tile.puncture).get_d());
}

Vec2 halfhex_rotate(const Vec2& v, int steps) {
  Vec2 out = v;
  steps = ((steps % 6) + 6) % 6;
  for (int i = 0; i < steps; ++i) out = Vec2{-out.y, out.x + out.y};
  return out;
}

namespace {

IntMatrix circulant(const std::vector<long>& first_row) {
  const std::size_t n = first_row.size();
  IntMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = first_row[(j + n - i) % n];
  return m;
}

std::vector<Prototile> halfhex_prototiles() {
  const Polygon base = {{Rational(-1), Rational(0)}, {Rational(1), Rational(0)}, {Rational(0), Rational(1)}, {Rational(-1), Rational(1)}};
  const Vec2 shift = -centroid(base);
  std::vector<Prototile> tiles;
  for (int r = 0; r < 6; ++r) {
    Prototile t;
    t.id = r;
    for (const auto& v : base) t.vertices.push_back(halfhex_rotate(v + shift, r));
    finalize_prototile(t, 2);
    tiles.push_back(std::move(t));
  }
  return tiles;
}

SubstitutionRule halfhex_rule() {
  const Polygon base = {{Rational(-1), Rational(0)}, {Rational(1), Rational(0)}, {Rational(0), Rational(1)}, {Rational(-1), Rational(1)}};
  const Vec2 shift = -centroid(base);
  // (rotation offset, translation) of the four half-size pieces of the unshifted tile
  const std::vector<std::pair<int, Vec2>> pieces = {
      {0, {Rational(0), Rational(0)}},
      {3, {ratio(-1, 2), Rational(1)}},
      {4, {Rational(-1), ratio(1, 2)}},
      {2, {ratio(1, 2), ratio(1, 2)}},
  };
  SubstitutionRule rule;
  rule.id = 1;
  rule.theta = ratio(1, 2);
  for (int r = 0; r < 6; ++r) {
    for (const auto& [o, tau] : pieces) {
      const Vec2 local = tau + shift - ratio(1, 2) * halfhex_rotate(shift, o);
      rule.branches.push_back({r, (r + o) % 6, halfhex_rotate(local, r)});
    }
  }
  canonicalize(rule);
  return rule;
}

SubstitutionRule halfhex_modified_rule(int id) {
  return matrix_rule(id, ratio(1, 4), circulant({6, 2, 1, 4, 2, 1}));
}

}  // namespace

RuleFamily halfhex_family() {
  RuleFamily f;
  f.name = "halfhex";
  f.dimension = 2;
  f.prototiles = halfhex_prototiles();
  f.rules.push_back(halfhex_rule());
  return f;
}

RuleFamily halfhex_modified_family() {
  RuleFamily f;
  f.name = "halfhex_modified";
  f.dimension = 2;
  f.prototiles = halfhex_prototiles();
  f.rules.push_back(halfhex_modified_rule(1));
  return f;
}

RuleFamily halfhex_pair_family() {
  RuleFamily f;
  f.name = "halfhex_pair";
  f.dimension = 2;
  f.prototiles = halfhex_prototiles();
  f.rules.push_back(halfhex_rule());
  f.rules.push_back(halfhex_modified_rule(2));
  return f;
}

RuleFamily solenoid_family(int dimension, const std::vector<int>& qs) {
  if (dimension < 1) throw StructuralError("solenoid dimension must be positive");
  if (qs.empty()) throw StructuralError("solenoid needs at least one q");
  RuleFamily f;
  f.name = "solenoid";
  f.dimension = dimension;
  Prototile cube;
  cube.id = 0;
  const Rational half(1, 2);
  if (dimension == 1) {
    cube.vertices = {{-half, Rational(0)}, {half, Rational(0)}};
  } else if (dimension == 2) {
    cube.vertices = {{-half, -half}, {half, -half}, {half, half}, {-half, half}};
  }
  finalize_prototile(cube, dimension);
  f.prototiles.push_back(cube);

  int id = 1;
  for (int q : qs) {
    if (q < 2) throw StructuralError("solenoid q must exceed 1");
    if (dimension > 2) {
      BigInt count;
      mpz_ui_pow_ui(count.get_mpz_t(), static_cast<unsigned long>(q), static_cast<unsigned long>(dimension));
      IntMatrix m(1, 1);
      m(0, 0) = count;
      f.rules.push_back(matrix_rule(id++, ratio(1, q), m));
      continue;
    }
    SubstitutionRule rule;
    rule.id = id++;
    rule.theta = ratio(1, q);
    auto offset = [q](int i) -> Rational { return ratio(2 * i + 1, 2 * q) - ratio(1, 2); };
    for (int i = 0; i < q; ++i) {
      if (dimension == 1) {
        rule.branches.push_back({0, 0, {offset(i), Rational(0)}});
      } else {
        for (int j = 0; j < q; ++j) rule.branches.push_back({0, 0, {offset(j), offset(i)}});
      }
    }
    f.rules.push_back(std::move(rule));
  }
  return f;
}

RuleFamily oned_family() {
  RuleFamily f;
  f.name = "oned";
  f.dimension = 1;
  Prototile a;
  a.id = 0;
  a.vertices = {{ratio(-1, 2), Rational(0)}, {ratio(1, 2), Rational(0)}};
  Prototile b;
  b.id = 1;
  b.vertices = {{Rational(-1), Rational(0)}, {Rational(1), Rational(0)}};
  finalize_prototile(a, 1);
  finalize_prototile(b, 1);
  f.prototiles = {a, b};

  auto at = [](const Rational& t) { return Vec2{t, Rational(0)}; };
  SubstitutionRule first;
  first.id = 1;
  first.theta = ratio(1, 2);
  first.branches = {{0, 0, at(ratio(-1, 4))}, {0, 0, at(ratio(1, 4))}, {1, 1, at(ratio(-1, 2))},
                    {1, 0, at(ratio(1, 4))}, {1, 0, at(ratio(3, 4))}};
  canonicalize(first);

  SubstitutionRule second;
  second.id = 2;
  second.theta = ratio(1, 3);
  second.branches = {{0, 0, at(ratio(-1, 3))}, {0, 1, at(ratio(1, 6))}};
  for (int i = 0; i < 6; ++i) second.branches.push_back({1, 0, at(ratio(2 * i - 5, 6))});
  canonicalize(second);

  f.rules = {first, second};
  return f;
}

std::vector<RuleFamily> builtin_families() {
  return {halfhex_family(), halfhex_modified_family(), halfhex_pair_family(), solenoid_family(2, {2, 3}), oned_family()};
}

RuleFamily builtin_family(std::string_view name) {
  if (name == "halfhex") return halfhex_family();
  if (name == "halfhex_modified") return halfhex_modified_family();
  if (name == "halfhex_pair") return halfhex_pair_family();
  if (name == "oned") return oned_family();
  // solenoid:d:q1,q2,...
  if (name.rfind("solenoid", 0) == 0) {
    int dimension = 2;
    std::vector<int> qs;
    std::string rest(name.substr(8));
    if (!rest.empty()) {
      if (rest[0] != ':') throw StructuralError("bad solenoid spec '" + std::string(name) + "'");
      rest.erase(0, 1);
      const auto colon = rest.find(':');
      try {
        dimension = std::stoi(rest.substr(0, colon));
        if (colon != std::string::npos) {
          std::stringstream ss(rest.substr(colon + 1));
          std::string item;
          while (std::getline(ss, item, ',')) qs.push_back(std::stoi(item));
        }
      } catch (const std::logic_error&) {
        throw StructuralError("bad solenoid spec '" + std::string(name) + "'");
      }
    }
    if (qs.empty()) qs = {2, 3};
    return solenoid_family(dimension, qs);
  }
  throw StructuralError("unknown builtin family '" + std::string(name) + "'");
}

namespace {

using nlohmann::json;

Rational json_rational(const json& value) {
  if (value.is_string()) return parse_rational(value.get<std::string>());
  if (value.is_number_integer()) return Rational(value.get<long>());
  if (value.is_number_unsigned()) return Rational(static_cast<unsigned long>(value.get<unsigned long long>()));
  if (value.is_number_float()) return rational_from_double(value.get<double>());
  throw StructuralError("expected a number, got " + value.dump());
}

Vec2 json_point(const json& value, int dimension) {
  if (!value.is_array() || value.empty() || value.size() > 2) throw StructuralError("bad point " + value.dump());
  Vec2 p;
  p.x = json_rational(value[0]);
  if (value.size() > 1) p.y = json_rational(value[1]);
  if (dimension == 1) p.y = 0;
  return p;
}

json rational_json(const Rational& r) { return to_string(r); }

json point_json(const Vec2& p, int dimension) {
  if (dimension == 1) return json::array({rational_json(p.x)});
  return json::array({rational_json(p.x), rational_json(p.y)});
}

}  // namespace

RuleFamily parse_family_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw StructuralError(std::string("rule file is not valid JSON: ") + e.what());
  }
  try {
    RuleFamily f;
    f.name = doc.value("name", std::string("custom"));
    f.dimension = doc.at("dimension").get<int>();
    if (f.dimension < 1) throw StructuralError("dimension must be positive");
    std::map<int, int> index_of;
    for (const auto& pt : doc.at("prototiles")) {
      Prototile t;
      t.id = pt.at("id").get<int>();
      if (index_of.count(t.id)) throw StructuralError("duplicate prototile id " + std::to_string(t.id));
      if (pt.contains("vertices")) {
        for (const auto& v : pt.at("vertices")) t.vertices.push_back(json_point(v, f.dimension));
      }
      if (pt.contains("puncture")) t.puncture = json_point(pt.at("puncture"), f.dimension);
      if (pt.contains("volume")) t.volume = json_rational(pt.at("volume"));
      finalize_prototile(t, f.dimension, pt.contains("puncture"));
      index_of[t.id] = static_cast<int>(f.prototiles.size());
      f.prototiles.push_back(std::move(t));
    }
    auto lookup = [&](int id) {
      const auto it = index_of.find(id);
      if (it == index_of.end()) throw StructuralError("branch references unknown prototile id " + std::to_string(id));
      return it->second;
    };
    for (const auto& rj : doc.at("rules")) {
      const int id = rj.at("id").get<int>();
      const Rational theta = json_rational(rj.at("theta"));
      SubstitutionRule rule;
      if (rj.contains("matrix")) {
        const auto& rows = rj.at("matrix");
        IntMatrix m(f.prototiles.size(), f.prototiles.size());
        if (rows.size() != f.prototiles.size()) throw StructuralError("rule matrix has wrong size");
        for (std::size_t i = 0; i < rows.size(); ++i) {
          if (rows[i].size() != f.prototiles.size()) throw StructuralError("rule matrix has wrong size");
          for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j].get<long>();
        }
        rule = matrix_rule(id, theta, m);
      } else {
        rule.id = id;
        rule.theta = theta;
        for (const auto& bj : rj.at("branches")) {
          Branch b;
          b.parent = lookup(bj.at("parent").get<int>());
          b.child = lookup(bj.at("child").get<int>());
          b.tau = json_point(bj.at("tau"), f.dimension);
          rule.branches.push_back(b);
        }
      }
      check_rule(rule, f.prototiles.size());
      canonicalize(rule);
      f.rules.push_back(std::move(rule));
    }
    if (f.rules.empty()) throw StructuralError("family has no rules");
    return f;
  } catch (const json::exception& e) {
    throw StructuralError(std::string("malformed rule file: ") + e.what());
  }
}

RuleFamily load_family(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("cannot open rule file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_family_json(buffer.str());
}

std::string family_to_json(const RuleFamily& family) {
  json doc;
  doc["name"] = family.name;
  doc["dimension"] = family.dimension;
  doc["prototiles"] = json::array();
  for (const auto& t : family.prototiles) {
    json pt;
    pt["id"] = t.id;
    if (!t.vertices.empty()) {
      pt["vertices"] = json::array();
      for (const auto& v : t.vertices) pt["vertices"].push_back(point_json(v, family.dimension));
      pt["puncture"] = point_json(t.puncture, family.dimension);
    } else {
      pt["volume"] = rational_json(t.volume);
    }
    doc["prototiles"].push_back(pt);
  }
  doc["rules"] = json::array();
  for (const auto& r : family.rules) {
    json rj;
    rj["id"] = r.id;
    rj["theta"] = rational_json(r.theta);
    if (r.geometric) {
      rj["branches"] = json::array();
      for (const auto& b : r.branches) {
        rj["branches"].push_back({{"parent", family.prototiles[static_cast<std::size_t>(b.parent)].id},
                                  {"child", family.prototiles[static_cast<std::size_t>(b.child)].id},
                                  {"tau", point_json(b.tau, family.dimension)}});
      }
    } else {
      const auto m = substitution_matrix(r, family.size());
      json rows = json::array();
      for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j).get_si());
        rows.push_back(row);
      }
      rj["matrix"] = rows;
    }
    doc["rules"].push_back(rj);
  }
  return doc.dump(2);
}

}  // namespace tilelab
