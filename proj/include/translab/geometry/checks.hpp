#pragma once

#include <fstream>
#include <random>
#include <string>

#include "translab/config.hpp"
#include "translab/geometry/patch.hpp"
#include "translab/geometry/transversality.hpp"

namespace translab::geometry {

/// Gaussian n x n matrix redrawn until its condition number is <= max_cond.
inline MatrixXd random_well_conditioned(std::mt19937_64& rng, int n, double max_cond) {
  require(max_cond >= 1, "random_well_conditioned: condition bound below 1");
  std::normal_distribution<double> g;
  for (;;) {
    MatrixXd T(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) T(i, j) = g(rng);
    const auto sv = Eigen::JacobiSVD<MatrixXd>(T).singularValues();
    if (sv(0) / sv(n - 1) <= max_cond) return T;
  }
}

struct MnSweep {
  std::size_t transforms = 0;
  std::size_t evaluated = 0, skipped = 0;
  double max_rel_error = 0;
};

/// The (mn) identity at `samples` random node triples for each of
/// `transforms` random maps with condition number <= max_cond.
inline MnSweep mn_identity_sweep(const std::array<GraphPatch, 3>& triple, std::size_t transforms, double max_cond,
                                 std::size_t samples, std::uint64_t seed) {
  const auto s = surfaces_of(triple);
  auto rng = stream_rng(seed, 0);
  std::vector<std::array<std::size_t, 3>> picks;
  for (std::size_t i = 0; i < samples; ++i) {
    std::array<std::size_t, 3> p{};
    for (int a = 0; a < 3; ++a) p[a] = std::uniform_int_distribution<std::size_t>(0, s[a].size() - 1)(rng);
    picks.push_back(p);
  }
  MnSweep out;
  out.transforms = transforms;
  for (std::size_t t = 0; t < transforms; ++t) {
    const auto r = verify_mn_identity(s, random_well_conditioned(rng, s[0].n, max_cond), picks);
    out.evaluated += r.evaluated;
    out.skipped += r.skipped;
    out.max_rel_error = std::max(out.max_rel_error, r.max_rel_error);
  }
  return out;
}

inline GraphPatch unit_plane(const Eigen::Vector3d& normal, int nodes) {
  return GraphPatch::from_formula(3, Lattice::cube(2, -0.5, 0.5, nodes), plane_formula(),
                                  rotation_with_normal(normal.normalized()), {1.0, 1.0, 2.0});
}

/// Built-in triples in R^3: "coordinate-planes", "plane-paraboloid" (two
/// coordinate planes and a tilted paraboloid cap), "paraboloid-cone".
inline std::array<GraphPatch, 3> builtin_triple(const std::string& name, int nodes = 8) {
  const GraphPatch::Params curved{1.0, 10.0, 3.0};
  if (name == "coordinate-planes")
    return {unit_plane(Eigen::Vector3d::UnitX(), nodes), unit_plane(Eigen::Vector3d::UnitY(), nodes),
            unit_plane(Eigen::Vector3d::UnitZ(), nodes)};
  if (name == "plane-paraboloid") {
    auto par = GraphPatch::from_formula(3, Lattice::cube(2, -0.5, 0.5, nodes), paraboloid_formula(),
                                        rotation_with_normal(Eigen::Vector3d(0.2, 0.1, 1).normalized()), curved);
    return {unit_plane(Eigen::Vector3d::UnitX(), nodes), unit_plane(Eigen::Vector3d::UnitY(), nodes), par};
  }
  if (name == "paraboloid-cone") {
    auto par = GraphPatch::from_formula(3, Lattice::cube(2, -0.5, 0.5, nodes), paraboloid_formula(),
                                        MatrixXd::Identity(3, 3), curved);
    auto cone = GraphPatch::from_formula(3, Lattice({0.5, -0.5}, {1.5, 0.5}, {nodes, nodes}), cone_formula(2.0, 1.0),
                                         rotation_with_normal(Eigen::Vector3d(1, 0, 0.2).normalized()), curved);
    return {par, cone, unit_plane(Eigen::Vector3d::UnitY(), nodes)};
  }
  throw InputError("unknown built-in triple '" + name + "'");
}

// Patch definition file:
//   {"n": 3, "m": 1, "domain": {"lo": [..], "hi": [..], "nodes": [..]},
//    "phi": "plane" | {"formula": "paraboloid", "scale": 1} | [[table row], ...],
//    "G": [row-major n*n], "beta": 1, "b_hoelder": 1, "R": 1}
// Formulas: plane {offset}, paraboloid {scale}, cone {N1, c}. A table holds
// m rows of one value per lattice node (a flat array when m = 1).
inline GraphPatch patch_from_json(const json& j, const std::string& path = "") {
  check_keys(j, {"n", "m", "domain", "phi", "G", "beta", "b_hoelder", "R"}, path);
  const int n = static_cast<int>(as_integer(need(j, "n", path), join_key(path, "n")));
  const int m = static_cast<int>(as_integer(need(j, "m", path), join_key(path, "m")));
  if (n < 2 || n > 6) throw SchemaError(join_key(path, "n"), "must lie in [2, 6]");
  if (m < 1 || m >= n) throw SchemaError(join_key(path, "m"), "must lie in [1, n)");
  const std::string dp = join_key(path, "domain");
  const auto& dom = need(j, "domain", path);
  check_keys(dom, {"lo", "hi", "nodes"}, dp);
  const auto lo = as_numbers(need(dom, "lo", dp), dp + ".lo"), hi = as_numbers(need(dom, "hi", dp), dp + ".hi");
  std::vector<int> nodes;
  const auto& jn = need(dom, "nodes", dp);
  if (!jn.is_array()) throw SchemaError(dp + ".nodes", "expected an array of integers");
  for (std::size_t i = 0; i < jn.size(); ++i) nodes.push_back(static_cast<int>(as_integer(jn[i], dp + ".nodes")));
  const std::size_t d = static_cast<std::size_t>(n - m);
  if (lo.size() != d || hi.size() != d || nodes.size() != d) throw SchemaError(dp, "lo, hi, nodes need n - m entries");
  Lattice lat(lo, hi, nodes);

  MatrixXd G = MatrixXd::Identity(n, n);
  if (j.contains("G")) {
    const auto g = as_numbers(j.at("G"), join_key(path, "G"));
    if (g.size() != static_cast<std::size_t>(n * n)) throw SchemaError(join_key(path, "G"), "expected n*n entries");
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) G(r, c) = g[static_cast<std::size_t>(r * n + c)];
  }
  GraphPatch::Params p;
  if (j.contains("beta")) p.beta = as_number(j.at("beta"), join_key(path, "beta"));
  if (j.contains("b_hoelder")) p.b_hoelder = as_number(j.at("b_hoelder"), join_key(path, "b_hoelder"));
  if (j.contains("R")) p.R = as_number(j.at("R"), join_key(path, "R"));

  const std::string pp = join_key(path, "phi");
  const auto& phi = need(j, "phi", path);
  if (phi.is_array()) {
    MatrixXd table(m, static_cast<Eigen::Index>(lat.size()));
    const bool flat = m == 1 && !phi.empty() && !phi[0].is_array();
    for (int r = 0; r < m; ++r) {
      const auto row = as_numbers(flat ? phi : phi.at(static_cast<std::size_t>(r)), pp);
      if (row.size() != lat.size()) throw SchemaError(pp, "table needs one value per lattice node");
      for (std::size_t k = 0; k < row.size(); ++k) table(r, static_cast<Eigen::Index>(k)) = row[k];
    }
    if (!flat && phi.size() != static_cast<std::size_t>(m)) throw SchemaError(pp, "table needs m rows");
    return GraphPatch::from_table(n, lat, table, G, p);
  }
  std::string id;
  json args = json::object();
  if (phi.is_string()) {
    id = phi.get<std::string>();
  } else if (phi.is_object()) {
    id = need(phi, "formula", pp).is_string() ? phi.at("formula").get<std::string>() : "";
    args = phi;
  } else {
    throw SchemaError(pp, "expected a formula id, a formula object or a value table");
  }
  auto arg = [&](const char* k, double def) {
    return args.contains(k) ? as_number(args.at(k), pp + "." + k) : def;
  };
  GraphFormula f;
  if (id == "plane") {
    check_keys(args, {"formula", "offset"}, pp);
    f = plane_formula(m, arg("offset", 0));
  } else if (id == "paraboloid") {
    check_keys(args, {"formula", "scale"}, pp);
    if (m != 1) throw SchemaError(join_key(path, "m"), "paraboloid has codimension 1");
    f = paraboloid_formula(arg("scale", 1));
  } else if (id == "cone") {
    check_keys(args, {"formula", "N1", "c"}, pp);
    if (m != 1) throw SchemaError(join_key(path, "m"), "cone has codimension 1");
    f = cone_formula(arg("N1", 1), arg("c", 0));
  } else {
    throw SchemaError(pp, "unknown formula '" + id + "'");
  }
  return GraphPatch::from_formula(n, lat, std::move(f), G, p);
}

/// {"patches": [p1, p2, p3]} from a file.
inline std::array<GraphPatch, 3> load_triple(const std::string& file) {
  std::ifstream is(file);
  if (!is) throw InputError("cannot open triple file " + file);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw SchemaError("<root>", std::string("malformed JSON: ") + e.what());
  }
  check_keys(j, {"patches"}, "");
  const auto& ps = need(j, "patches", "");
  if (!ps.is_array() || ps.size() != 3) throw SchemaError("patches", "expected three patches");
  return {patch_from_json(ps[0], "patches[0]"), patch_from_json(ps[1], "patches[1]"),
          patch_from_json(ps[2], "patches[2]")};
}

}  // namespace translab::geometry
