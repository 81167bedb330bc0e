#pragma once

// Experiment registry behind translab_cli. Each experiment declares typed
// parameters with defaults; configs and flags are validated against them and
// the resolved parameter block is embedded in every report.

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "translab/config.hpp"
#include "translab/decomp.hpp"
#include "translab/geometry.hpp"
#include "translab/surface_conv.hpp"
#include "translab/trilinear.hpp"
#include "translab/zakharov.hpp"

#ifndef TRANSLAB_VERSION
#define TRANSLAB_VERSION "0.0.0"
#endif

namespace translab::cli {

using geometry::GraphPatch;

inline constexpr int schema_version = 1;

enum class Kind { number, integer, text, boolean, numbers, integers, integer_or_list, optional_number };

struct Param {
  Kind kind;
  json fallback;
  std::string help;
};

struct Outcome {
  json results = json::object();
  bool pass = true;
  std::string csv;  // written to outputs.csv when requested
};

struct Experiment {
  std::string name, help;
  std::map<std::string, Param> params;
  std::set<std::string> outputs;  // besides "report"
  std::function<Outcome(const json& p, std::uint64_t seed, const json& outputs)> run;
};

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline double parse_number(const std::string& s, const std::string& key) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw SchemaError(key, "expected a number, got '" + s + "'");
  return v;
}

inline long parse_integer(const std::string& s, const std::string& key) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw SchemaError(key, "expected an integer, got '" + s + "'");
  return v;
}

/// A command-line string converted to the parameter's JSON type.
inline json from_flag(const Param& p, const std::string& s, const std::string& key) {
  switch (p.kind) {
    case Kind::number: return parse_number(s, key);
    case Kind::integer: return parse_integer(s, key);
    case Kind::text: return s;
    case Kind::boolean:
      if (s == "true" || s == "1") return true;
      if (s == "false" || s == "0") return false;
      throw SchemaError(key, "expected true or false, got '" + s + "'");
    case Kind::optional_number:
      if (s.empty() || s == "none") return nullptr;
      return parse_number(s, key);
    case Kind::numbers: {
      json a = json::array();
      for (const auto& x : split(s, ',')) a.push_back(parse_number(x, key));
      return a;
    }
    case Kind::integers:
    case Kind::integer_or_list: {
      const auto parts = split(s, ',');
      if (p.kind == Kind::integer_or_list && parts.size() == 1) return parse_integer(s, key);
      json a = json::array();
      for (const auto& x : parts) a.push_back(parse_integer(x, key));
      return a;
    }
  }
  return nullptr;
}

/// Type check of a config-file value; integers given as 8.0 are rejected.
inline void check_value(const Param& p, const json& v, const std::string& key) {
  auto each = [&](auto pred, const char* what) {
    if (!v.is_array() || v.empty()) throw SchemaError(key, std::string("expected a non-empty array of ") + what);
    for (const auto& x : v)
      if (!pred(x)) throw SchemaError(key, std::string("expected a non-empty array of ") + what);
  };
  auto num = [](const json& x) { return x.is_number(); };
  auto intg = [](const json& x) { return x.is_number_integer(); };
  switch (p.kind) {
    case Kind::number:
      if (!num(v)) throw SchemaError(key, "expected a number");
      break;
    case Kind::integer:
      if (!intg(v)) throw SchemaError(key, "expected an integer");
      break;
    case Kind::text:
      if (!v.is_string()) throw SchemaError(key, "expected a string");
      break;
    case Kind::boolean:
      if (!v.is_boolean()) throw SchemaError(key, "expected true or false");
      break;
    case Kind::optional_number:
      if (!v.is_null() && !num(v)) throw SchemaError(key, "expected a number or null");
      break;
    case Kind::numbers: each(num, "numbers"); break;
    case Kind::integers: each(intg, "integers"); break;
    case Kind::integer_or_list:
      if (!intg(v)) each(intg, "integers");
      break;
  }
}

inline json defaults(const Experiment& e) {
  json p = json::object();
  for (const auto& [k, d] : e.params) p[k] = d.fallback;
  return p;
}

/// Merges a user parameter block into the defaults, rejecting unknown keys.
inline void merge_params(const Experiment& e, json& resolved, const json& user, const std::string& path) {
  if (!user.is_object()) throw SchemaError(path, "expected an object");
  for (const auto& [k, v] : user.items()) {
    const auto it = e.params.find(k);
    if (it == e.params.end()) throw SchemaError(join_key(path, k), "unknown key for " + e.name);
    check_value(it->second, v, join_key(path, k));
    resolved[k] = v;
  }
}

inline void check_outputs(const Experiment& e, const json& out, const std::string& path) {
  std::set<std::string> allowed = e.outputs;
  allowed.insert("report");
  check_keys(out, allowed, path);
  for (const auto& [k, v] : out.items())
    if (!v.is_string()) throw SchemaError(join_key(path, k), "expected a path string");
}

inline std::string output(const json& outputs, const std::string& key) {
  return outputs.contains(key) ? outputs.at(key).get<std::string>() : std::string();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write " + path);
  os << text;
  if (!os) throw InputError("write failed: " + path);
}

inline json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open " + path);
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw SchemaError("<root>", path + ": malformed JSON: " + e.what());
  }
}

// ---- parameter helpers -----------------------------------------------------

inline std::vector<double> numbers(const json& v) { return v.get<std::vector<double>>(); }
inline std::vector<long> integers(const json& v) {
  return v.is_array() ? v.get<std::vector<long>>() : std::vector<long>{v.get<long>()};
}

/// "32x32x32x64" or "16" (cube). Returns the listed extents.
inline std::vector<int> parse_grid(const std::string& s, std::size_t want_min, std::size_t want_max,
                                   const std::string& key) {
  std::vector<int> out;
  for (const auto& part : split(s, 'x')) {
    const long v = parse_integer(part, key);
    if (v < 2 || !is_dyadic(v)) throw SchemaError(key, "grid extents must be powers of two >= 2");
    out.push_back(static_cast<int>(v));
  }
  if (out.size() < want_min || out.size() > want_max) throw SchemaError(key, "unexpected number of grid extents");
  return out;
}

inline std::array<GraphPatch, 3> triple_of(const std::string& id, int nodes) {
  for (const char* b : {"coordinate-planes", "plane-paraboloid", "paraboloid-cone"})
    if (id == b) return geometry::builtin_triple(id, nodes);
  return geometry::load_triple(id);
}

inline void require_window(double lo, double hi, const std::string& key) {
  if (!(lo <= hi)) throw SchemaError(key, "empty acceptance window");
}

inline json fit_json(const LineFit& f) { return {{"slope", f.slope}, {"intercept", f.intercept}, {"residual", f.residual}}; }

inline std::string csv_number(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

// ---- experiments -------------------------------------------------------------

inline Experiment geometry_check() {
  Experiment e{"geometry-check", "regularity, theta and the (mn) identity of a triple", {}, {}, {}};
  e.params = {
      {"triple", {Kind::text, "plane-paraboloid", "built-in triple name or patch JSON file"}},
      {"nodes", {Kind::integer, 8, "lattice nodes per axis of built-in triples"}},
      {"transforms", {Kind::integer, 100, "random maps for the (mn) identity"}},
      {"max_cond", {Kind::number, 10.0, "condition number bound of the maps"}},
      {"samples", {Kind::integer, 50, "node triples per map"}},
      {"stride", {Kind::integer, 1, "theta sampling stride"}},
      {"tolerance", {Kind::number, 1e-4, "max relative error of the identity"}},
  };
  e.run = [](const json& p, std::uint64_t seed, const json&) {
    const auto t = triple_of(p["triple"], static_cast<int>(p["nodes"].get<long>()));
    Outcome o;
    json regs = json::array();
    bool regular = true;
    for (const auto& patch : t) {
      const auto r = geometry::check_regularity(patch, 1'000'000, seed);
      regular = regular && r.pass;
      regs.push_back({{"lhs", r.lhs}, {"sup_term", r.sup_term}, {"hoelder_term", r.hoelder_term}, {"pass", r.pass},
                      {"pairs", r.pairs}, {"subsampled", r.subsampled}});
    }
    const auto th = geometry::theta_min(t, static_cast<int>(p["stride"].get<long>()));
    const auto mn = geometry::mn_identity_sweep(t, p["transforms"].get<std::size_t>(), p["max_cond"],
                                                p["samples"].get<std::size_t>(), seed);
    o.results = {{"regularity", regs},
                 {"theta", {{"theta", th.theta}, {"raw_min", th.raw_min}, {"degenerate", th.degenerate}, {"samples", th.samples}}},
                 {"mn", {{"transforms", mn.transforms}, {"evaluated", mn.evaluated}, {"skipped", mn.skipped},
                         {"max_rel_error", mn.max_rel_error}}},
                 {"worst_ratio", mn.max_rel_error / p["tolerance"].get<double>()}};
    o.pass = regular && !th.degenerate && mn.max_rel_error <= p["tolerance"].get<double>();
    return o;
  };
  return e;
}

inline json estimate_json(const conv::EstimateReport& r) {
  return {{"theta", r.theta}, {"R", r.R}, {"beta", r.beta}, {"b_hoelder", r.b_hoelder}, {"eps", r.eps}, {"h", r.h},
          {"measured_constant", r.measured_constant}, {"predicted_bound", r.predicted_bound}, {"ratio", r.ratio},
          {"converged", r.converged}, {"iterations", r.iterations}};
}

inline conv::ExtremizerOptions extremizer_options(const json& p, std::uint64_t seed) {
  conv::ExtremizerOptions opt;
  opt.max_iterations = static_cast<int>(p["max_iterations"].get<long>());
  opt.tolerance = p["tolerance"];
  opt.random_start = p["random_start"];
  opt.seed = seed;
  return opt;
}

inline Experiment conv_estimate() {
  Experiment e{"conv-estimate", "sharp-constant search for the convolution-restriction estimate", {}, {}, {}};
  e.params = {
      {"triple", {Kind::text, "coordinate-planes", "built-in triple name or patch JSON file"}},
      {"nodes", {Kind::integer, 12, "lattice nodes per axis of built-in triples"}},
      {"eps", {Kind::number, 0.0, "slab thickness (0: default from theta)"}},
      {"max_iterations", {Kind::integer, 5000, "extremizer sweeps"}},
      {"tolerance", {Kind::number, 1e-9, "relative quotient change over 3 sweeps"}},
      {"random_start", {Kind::boolean, false, "complex Gaussian start"}},
  };
  e.run = [](const json& p, std::uint64_t seed, const json&) {
    const auto t = triple_of(p["triple"], static_cast<int>(p["nodes"].get<long>()));
    const double theta = geometry::theta_min(t).theta;
    require(theta >= 1e-6, "conv-estimate: triple is degenerate (theta below 1e-6)");
    const double eps = p["eps"].get<double>() > 0 ? p["eps"].get<double>() : conv::default_eps(t, theta);
    const auto r = conv::estimate_constant(t, eps, extremizer_options(p, seed), theta);
    Outcome o;
    o.results = estimate_json(r);
    o.results["worst_ratio"] = r.ratio;
    o.pass = r.pass;
    return o;
  };
  return e;
}

inline Experiment theta_sweep() {
  Experiment e{"theta-sweep", "log-log slope of the measured constant against theta", {}, {"csv"}, {}};
  e.params = {
      {"family", {Kind::text, "tilted-planes", "tilted-planes"}},
      {"thetas", {Kind::numbers, json::array({0.05, 0.08, 0.125, 0.2, 0.32, 0.5}), "theta values"}},
      {"lattice", {Kind::integers, json::array({24, 96, 29, 32}), "first, second fine, second coarse, third nodes"}},
      {"max_iterations", {Kind::integer, 5000, "extremizer sweeps"}},
      {"tolerance", {Kind::number, 1e-9, "relative quotient change over 3 sweeps"}},
      {"random_start", {Kind::boolean, false, "complex Gaussian start"}},
      {"slope_min", {Kind::number, -0.65, "acceptance window"}},
      {"slope_max", {Kind::number, -0.35, "acceptance window"}},
  };
  e.run = [](const json& p, std::uint64_t seed, const json&) {
    if (p["family"] != "tilted-planes") throw SchemaError("params.family", "unknown family (tilted-planes)");
    const auto l = integers(p["lattice"]);
    if (l.size() != 4) throw SchemaError("params.lattice", "expected four node counts");
    const conv::TiltedPlaneLattice lat{static_cast<int>(l[0]), static_cast<int>(l[1]), static_cast<int>(l[2]),
                                       static_cast<int>(l[3])};
    require_window(p["slope_min"], p["slope_max"], "params.slope_min");
    const auto sw = conv::theta_scaling_sweep([&](double th) { return conv::tilted_planes(th, lat); },
                                              numbers(p["thetas"]), extremizer_options(p, seed));
    Outcome o;
    json pts = json::array();
    std::ostringstream csv;
    csv << "theta,measured_constant,predicted_bound,ratio,iterations,converged,slope\n";
    bool converged = true;
    for (const auto& pt : sw.points) {
      pts.push_back(estimate_json(pt.report));
      converged = converged && pt.report.converged;
      csv << csv_number(pt.theta) << ',' << csv_number(pt.report.measured_constant) << ','
          << csv_number(pt.report.predicted_bound) << ',' << csv_number(pt.report.ratio) << ',' << pt.report.iterations
          << ',' << pt.report.converged << ',' << csv_number(sw.fit.slope) << '\n';
    }
    o.csv = csv.str();
    o.results = {{"points", pts}, {"fit", fit_json(sw.fit)}, {"slopes", {{"theta", sw.fit.slope}}}};
    o.pass = converged && sw.fit.slope >= p["slope_min"].get<double>() && sw.fit.slope <= p["slope_max"].get<double>();
    return o;
  };
  return e;
}

inline Experiment decomp_verify() {
  Experiment e{"decomp-verify", "partition-of-unity identities and the cap cover", {}, {}, {}};
  e.params = {
      {"grid", {Kind::text, "32x32x32x64", "nx x ny x nz x nt"}},
      {"maxN", {Kind::integer, 8, "largest frequency band of the random field"}},
      {"maxL", {Kind::integer, 16, "largest modulation band of the random field"}},
      {"A", {Kind::integer, 4, "cap parameter of the angular identity"}},
      {"cover_A", {Kind::integers, json::array({2, 4, 8, 16}), "cap parameters of the cover check"}},
      {"directions", {Kind::integer, 100000, "random directions per cover check"}},
      {"tolerance", {Kind::number, 1e-12, "max identity error"}},
  };
  e.run = [](const json& p, std::uint64_t seed, const json&) {
    const auto g = parse_grid(p["grid"], 4, 4, "params.grid");
    const auto r = decomp::partition_check({g[0], g[1], g[2]}, g[3], p["maxN"], p["maxL"], p["A"], seed);
    Outcome o;
    const double tol = p["tolerance"];
    o.results["partition"] = {{"max_n", r.max_n}, {"max_l", r.max_l}, {"A", r.A}, {"caps", r.caps},
                              {"frequency_bands", r.freq_bands}, {"modulation_bands_s", r.mod_bands_s},
                              {"modulation_bands_w", r.mod_bands_w}, {"err_frequency", r.err_frequency},
                              {"err_mod_s", r.err_mod_s}, {"err_mod_wplus", r.err_mod_wplus},
                              {"err_mod_wminus", r.err_mod_wminus}, {"err_caps", r.err_caps},
                              {"max_error", r.max_error()}};
    o.pass = r.max_error() <= tol;
    json cover = json::array();
    for (long A : integers(p["cover_A"])) {
      const auto c = decomp::cap_cover_check(A, p["directions"].get<std::size_t>(), mix_seed(seed, A));
      cover.push_back({{"A", c.A}, {"caps", c.caps}, {"count_ratio", c.count_ratio}, {"chi_min", c.chi_min},
                       {"chi_max", c.chi_max}, {"directions", c.directions}, {"pass", c.pass()}});
      o.pass = o.pass && c.pass();
    }
    o.results["cover"] = cover;
    o.results["worst_ratio"] = r.max_error() / tol;
    return o;
  };
  return e;
}

inline Experiment trilinear_verify() {
  Experiment e{"trilinear-verify", "dyadic trilinear and bilinear case estimates", {}, {"csv"}, {}};
  e.params = {
      {"case", {Kind::text, "trans-low-mod", "case id"}},
      {"N", {Kind::integer_or_list, nullptr, "wave frequency (default: N1)"}},
      {"N1", {Kind::integer_or_list, 8, "first Schroedinger frequency"}},
      {"N2", {Kind::integer_or_list, nullptr, "second Schroedinger frequency (default: N1)"}},
      {"L", {Kind::integer_or_list, 1, "wave modulation"}},
      {"L1", {Kind::integer_or_list, 1, "first Schroedinger modulation"}},
      {"L2", {Kind::integer_or_list, 1, "second Schroedinger modulation"}},
      {"maxL", {Kind::integers, json::array(), "sweep of the largest modulation"}},
      {"A", {Kind::integer_or_list, 4, "cap parameter"}},
      {"d", {Kind::integer, 0, "cube side of the WS-cube estimate"}},
      {"sign", {Kind::integer, 1, "W+ (1) or W- (-1)"}},
      {"conj1", {Kind::boolean, false, "conjugate the first factor"}},
      {"conj2", {Kind::boolean, false, "conjugate the second factor"}},
      {"trials", {Kind::integer, 64, "random trials per point"}},
      {"sweeps", {Kind::integer, 20, "alternating-maximisation sweeps"}},
      {"margin", {Kind::number, 8.0, "margin factor over the median ratio"}},
      {"slope_max", {Kind::optional_number, nullptr, "upper bound on the log-log slope of max_found"}},
  };
  e.run = [](const json& p, std::uint64_t seed, const json&) {
    tri::CaseSpec c;
    c.id = tri::parse_case(p["case"]);
    std::vector<std::pair<std::string, std::vector<long>>> axes;
    for (const char* k : {"N1", "N", "N2", "L", "L1", "L2", "A"}) {
      if (p[k].is_null()) continue;
      const auto v = integers(p[k]);
      if (p[k].is_array() && v.size() > 1) axes.emplace_back(k, v);
      tri::param_ref(c, k) = v.front();
    }
    if (p["N"].is_null()) c.N = c.N1;
    if (p["N2"].is_null()) c.N2 = c.N1;
    if (!p["maxL"].empty()) {
      const auto v = integers(p["maxL"]);
      if (v.size() < 2) throw SchemaError("params.maxL", "a maxL sweep needs at least two values");
      axes.emplace_back("maxL", v);
    }
    c.d = p["d"];
    c.sign = static_cast<int>(p["sign"].get<long>());
    c.conj1 = p["conj1"];
    c.conj2 = p["conj2"];
    tri::EngineSettings es;
    es.search.trials = static_cast<int>(p["trials"].get<long>());
    es.search.sweeps = static_cast<int>(p["sweeps"].get<long>());
    es.search.seed = seed;
    const double margin = p["margin"];
    Outcome o;
    std::ostringstream csv;
    auto point_json = [](const tri::EstimateReport& r) {
      return json{{"spec", r.spec.describe()}, {"engine", r.engine}, {"best_trial", r.best_trial},
                  {"max_found", r.max_found}, {"predicted", r.predicted}, {"ratio", r.ratio}, {"crude", r.crude},
                  {"crude_ok", r.crude_ok}, {"pass", r.pass}};
    };
    double worst = 0;
    if (axes.empty()) {
      // a single point; the cap pair is chosen as in a sweep
      const auto spec = tri::sweep_point(c, "N1", c.N1);
      auto r = tri::verify_case(spec, es, 0);
      tri::write_csv_header(csv);
      tri::write_csv_row(csv, r);
      o.results = {{"points", json::array({point_json(r)})}};
      o.pass = r.crude_ok;
      worst = r.ratio;
    } else if (axes.size() == 1) {
      const auto s = tri::verify_sweep(c, axes[0].first, axes[0].second, es, margin);
      tri::write_csv(csv, s);
      json pts = json::array();
      for (const auto& r : s.points) {
        pts.push_back(point_json(r));
        worst = std::max(worst, r.ratio);
      }
      o.results = {{"param", s.param}, {"points", pts}, {"margin", s.margin},
                   {"slopes", {{"max_found", s.slope}, {"predicted", s.predicted_slope}, {"ratio", s.ratio_slope}}}};
      o.pass = s.pass;
      if (!p["slope_max"].is_null()) o.pass = o.pass && s.slope <= p["slope_max"].get<double>();
    } else {
      const auto g = tri::verify_grid(c, axes, es, margin);
      tri::write_csv_header(csv);
      json pts = json::array(), env = json::object(), joint = json::object();
      for (const auto& r : g.points) {
        tri::write_csv_row(csv, r);
        pts.push_back(point_json(r));
        worst = std::max(worst, r.ratio);
      }
      for (std::size_t a = 0; a < g.params.size(); ++a) {
        env[g.params[a]] = g.envelope_slope[a];
        joint[g.params[a]] = g.joint_slope[a];
      }
      o.results = {{"points", pts}, {"margin", g.margin}, {"slopes", env}, {"joint_slopes", joint}};
      o.pass = g.pass;
      if (!p["slope_max"].is_null())
        for (double s : g.envelope_slope) o.pass = o.pass && s <= p["slope_max"].get<double>();
    }
    o.results["worst_ratio"] = worst;
    o.csv = csv.str();
    return o;
  };
  return e;
}

inline Experiment summation_check() {
  Experiment e{"summation-check", "both trilinear estimates over the dyadic generator sweep", {}, {"csv"}, {}};
  e.params = {
      {"s", {Kind::number, 0.3, "Schroedinger regularity"}},
      {"sigma", {Kind::number, -0.3, "wave regularity"}},
      {"sign", {Kind::integer, 1, "W+ (1) or W- (-1)"}},
      {"b", {Kind::numbers, json::array({0.25, 0.35, 0.45}), "modulation exponents below 1/2"}},
      {"nodes", {Kind::integer, 16, "spatial nodes per axis"}},
      {"nt", {Kind::integer, 32, "time nodes"}},
      {"maxN", {Kind::integer, 8, "largest resolved frequency band"}},
      {"maxL", {Kind::integer, 8, "largest resolved modulation band"}},
      {"draws", {Kind::integer, 4, "random fields per generator"}},
      {"margin", {Kind::number, 8.0, "margin factor over the median ratio"}},
  };
  e.run = [](const json& p, std::uint64_t seed, const json&) {
    tri::SummationConfig cfg;
    cfg.s = p["s"];
    cfg.sigma = p["sigma"];
    cfg.sign = static_cast<int>(p["sign"].get<long>());
    cfg.bs = numbers(p["b"]);
    const int n = static_cast<int>(p["nodes"].get<long>());
    cfg.nodes = {n, n, n};
    cfg.nt = static_cast<int>(p["nt"].get<long>());
    cfg.max_n = p["maxN"];
    cfg.max_l = p["maxL"];
    cfg.draws = static_cast<int>(p["draws"].get<long>());
    cfg.seed = seed;
    cfg.margin_factor = p["margin"];
    const auto r = tri::summation_check(cfg);
    Outcome o;
    std::ostringstream csv;
    csv << "generator,draw,I,rhs1,rhs2,ratio1,ratio2";
    for (double b : r.bs) csv << ",ratio1_b" << b << ",ratio2_b" << b;
    csv << '\n';
    json samples = json::array();
    double worst = 0;
    for (const auto& s : r.samples) {
      samples.push_back({{"generator", s.generator}, {"draw", s.draw}, {"I", s.I}, {"ratio1", s.ratio1},
                         {"ratio2", s.ratio2}, {"ratio1_b", s.ratio1_b}, {"ratio2_b", s.ratio2_b}});
      worst = std::max({worst, s.ratio1 / r.margin1, s.ratio2 / r.margin2});
      csv << s.generator << ',' << s.draw << ',' << csv_number(s.I) << ',' << csv_number(s.rhs1) << ','
          << csv_number(s.rhs2) << ',' << csv_number(s.ratio1) << ',' << csv_number(s.ratio2);
      for (std::size_t k = 0; k < r.bs.size(); ++k)
        csv << ',' << csv_number(s.ratio1_b[k]) << ',' << csv_number(s.ratio2_b[k]);
      csv << '\n';
    }
    json pb = json::array();
    for (std::size_t k = 0; k < r.bs.size(); ++k) pb.push_back({{"b", r.bs[k]}, {"pass", static_cast<bool>(r.pass_b[k])}});
    o.results = {{"samples", samples}, {"margin1", r.margin1}, {"margin2", r.margin2}, {"pass1", r.pass1},
                 {"pass2", r.pass2}, {"b_variants", pb}, {"worst_ratio", worst}};
    o.csv = csv.str();
    o.pass = r.pass();
    return o;
  };
  return e;
}

inline Experiment zakharov_run() {
  Experiment e{"zakharov-run", "Zakharov evolution, Picard contraction, mass drift and Lipschitz ratios", {}, {"out"}, {}};
  e.params = {
      {"grid", {Kind::text, "16", "nodes per axis (n or nxnxn)"}},
      {"T", {Kind::number, 0.5, "evolution time"}},
      {"dt", {Kind::number, 1e-3, "time step"}},
      {"scheme", {Kind::text, "etd2", "etd1 or etd2"}},
      {"every", {Kind::integer, 50, "steps between stored frames"}},
      {"s", {Kind::number, 0.3, "Schroedinger regularity"}},
      {"sigma", {Kind::number, -0.3, "wave regularity"}},
      {"data", {Kind::text, "", "trajectory file whose first frame is the data (empty: random small data)"}},
      {"amplitude", {Kind::number, 1e-2, "data norm of random data"}},
      {"kmax", {Kind::number, 2.0, "largest wavenumber of random data"}},
      {"picard_T", {Kind::number, 0.1, "Picard interval"}},
      {"picard_iterations", {Kind::integer, 8, "Picard iterations"}},
      {"deltas", {Kind::numbers, json::array({1e-2, 1e-3, 1e-4}), "Lipschitz perturbation sizes"}},
      {"max_contraction", {Kind::number, 0.5, "pass bound on the Picard factor from iteration 2"}},
      {"max_drift", {Kind::number, 1e-4, "pass bound on the relative mass drift"}},
      {"max_spread", {Kind::number, 2.0, "pass bound on max/min Lipschitz ratio"}},
  };
  e.run = [](const json& p, std::uint64_t seed, const json& outputs) {
    const zak::SobolevPair pair{p["s"], p["sigma"]};
    pair.require_admissible("zakharov-run");
    const std::string scheme = p["scheme"];
    if (scheme != "etd1" && scheme != "etd2") throw SchemaError("params.scheme", "expected etd1 or etd2");
    const zak::StepOptions opt{scheme == "etd1" ? zak::Scheme::etd1 : zak::Scheme::etd2, true};
    zak::ZakharovState data;
    const std::string file = p["data"];
    if (!file.empty()) {
      auto tr = zak::read_trajectory(file);
      require(!tr.frames.empty(), "zakharov-run: data file holds no frames");
      data = tr.frames.front();
      data.t = 0;
    } else {
      auto g = parse_grid(p["grid"], 1, 3, "params.grid");
      if (g.size() == 1) g = {g[0], g[0], g[0]};
      if (g.size() != 3) throw SchemaError("params.grid", "expected n or nxnxn");
      const auto torus = std::make_shared<const decomp::Torus>(1.0, std::array<int, 3>{g[0], g[1], g[2]});
      data = zak::small_data(torus, p["amplitude"], p["kmax"], seed, pair);
    }
    const auto tr = zak::evolve(data, p["T"], p["dt"], opt, static_cast<int>(p["every"].get<long>()));
    const std::string out = output(outputs, "out");
    if (!out.empty()) zak::write_trajectory(out, tr);
    const double drift = zak::mass_drift(tr);
    const auto pic = zak::picard_iterate(data, p["picard_T"], static_cast<int>(p["picard_iterations"].get<long>()), pair);
    const auto dir = zak::small_data(data.grid(), 1.0, p["kmax"], mix_seed(seed, 1), pair);
    zak::LipschitzOptions lo;
    const auto lip = zak::lipschitz_probe(data, dir, numbers(p["deltas"]), p["picard_T"], pair, lo);
    double lo_r = 1e300, hi_r = 0;
    json pts = json::array();
    for (const auto& q : lip) {
      pts.push_back({{"delta", q.delta}, {"data_diff", q.data_diff}, {"solution_diff", q.solution_diff},
                     {"ratio", q.ratio}, {"equal", q.equal}});
      if (q.equal) continue;
      lo_r = std::min(lo_r, q.ratio);
      hi_r = std::max(hi_r, q.ratio);
    }
    const double spread = hi_r > 0 ? hi_r / lo_r : 1.0;
    const double contraction = pic.contraction(2);
    Outcome o;
    o.results = {{"frames", tr.frames.size()},
                 {"mass_drift", drift},
                 {"picard", {{"d", pic.d}, {"factors", pic.factors}, {"contraction", contraction},
                             {"z_norm", pic.z_norm}, {"diverged", pic.diverged}, {"iterations", pic.iterations}}},
                 {"lipschitz", {{"points", pts}, {"spread", spread}}},
                 {"worst_ratio", contraction}};
    o.pass = !pic.diverged && contraction <= p["max_contraction"].get<double>() &&
             drift <= p["max_drift"].get<double>() && spread <= p["max_spread"].get<double>();
    return o;
  };
  return e;
}

inline const std::vector<Experiment>& experiments() {
  static const std::vector<Experiment> all = {geometry_check(), conv_estimate(),    theta_sweep(),  decomp_verify(),
                                              trilinear_verify(), summation_check(), zakharov_run()};
  return all;
}

inline const Experiment& find_experiment(const std::string& name, const std::string& key) {
  for (const auto& e : experiments())
    if (e.name == name) return e;
  throw SchemaError(key, "unknown experiment '" + name + "'");
}

/// A run request after validation: everything the report embeds.
struct Resolved {
  const Experiment* exp = nullptr;
  json params;
  json outputs = json::object();
  std::uint64_t seed = 0;
};

/// Applies a config file ({schema_version, experiment, seed, params, outputs})
/// on top of the defaults. `expect` names the experiment when invoked from a
/// subcommand.
inline Resolved resolve_config(const json& cfg, const std::string& expect = "") {
  check_keys(cfg, {"schema_version", "experiment", "seed", "params", "outputs"}, "");
  if (cfg.contains("schema_version") && cfg["schema_version"] != schema_version)
    throw SchemaError("schema_version", "expected " + std::to_string(schema_version));
  std::string name = expect;
  if (cfg.contains("experiment")) {
    if (!cfg["experiment"].is_string()) throw SchemaError("experiment", "expected a string");
    name = cfg["experiment"];
    if (!expect.empty() && name != expect) throw SchemaError("experiment", "config is for '" + name + "'");
  }
  if (name.empty()) throw SchemaError("experiment", "missing");
  Resolved r;
  r.exp = &find_experiment(name, "experiment");
  r.params = defaults(*r.exp);
  if (cfg.contains("seed")) {
    if (!cfg["seed"].is_number_unsigned()) throw SchemaError("seed", "expected a non-negative integer");
    r.seed = cfg["seed"];
  }
  if (cfg.contains("params")) merge_params(*r.exp, r.params, cfg["params"], "params");
  if (cfg.contains("outputs")) {
    check_outputs(*r.exp, cfg["outputs"], "outputs");
    r.outputs = cfg["outputs"];
  }
  return r;
}

/// Runs a resolved request, writes the outputs and returns the report.
inline json execute(const Resolved& r) {
  const Outcome o = r.exp->run(r.params, r.seed, r.outputs);
  json report = {{"schema_version", schema_version},
                 {"code_version", TRANSLAB_VERSION},
                 {"command", r.exp->name},
                 {"config", {{"experiment", r.exp->name}, {"seed", r.seed}, {"params", r.params}, {"outputs", r.outputs}}},
                 {"seed", r.seed},
                 {"results", o.results},
                 {"pass", o.pass}};
  const std::string csv = output(r.outputs, "csv");
  if (!csv.empty()) write_text(csv, o.csv);
  const std::string rep = output(r.outputs, "report");
  if (!rep.empty()) write_text(rep, report.dump(2) + "\n");
  return report;
}

/// Aggregate of several reports: pass counts per command, worst ratios and
/// the table of fitted slopes. Sorted throughout, so input order is irrelevant.
inline json merge_reports(const std::vector<json>& reports) {
  json summary = {{"schema_version", schema_version}, {"reports", 0}, {"passed", 0}, {"failed", 0},
                  {"commands", json::object()}, {"slopes", json::array()}};
  std::vector<json> sorted = reports;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& r = sorted[i];
    const std::string where = "reports[" + std::to_string(i) + "]";
    if (!r.is_object() || !r.contains("schema_version")) throw SchemaError(where, "not a report");
    if (r["schema_version"] != schema_version)
      throw SchemaError(where + ".schema_version", "schema version mismatch: " + r["schema_version"].dump());
    for (const char* k : {"command", "pass", "results", "config"})
      if (!r.contains(k)) throw SchemaError(join_key(where, k), "missing");
  }
  std::sort(sorted.begin(), sorted.end(), [](const json& a, const json& b) {
    return std::pair(a["command"].get<std::string>(), a.dump()) < std::pair(b["command"].get<std::string>(), b.dump());
  });
  std::vector<json> slopes;
  for (const auto& r : sorted) {
    const std::string cmd = r["command"];
    const bool pass = r["pass"];
    summary["reports"] = summary["reports"].get<int>() + 1;
    summary[pass ? "passed" : "failed"] = summary[pass ? "passed" : "failed"].get<int>() + 1;
    auto& c = summary["commands"][cmd];
    if (c.is_null()) c = {{"runs", 0}, {"passed", 0}, {"worst_ratio", nullptr}};
    c["runs"] = c["runs"].get<int>() + 1;
    if (pass) c["passed"] = c["passed"].get<int>() + 1;
    const auto& res = r["results"];
    if (res.contains("worst_ratio") && res["worst_ratio"].is_number()) {
      const double w = res["worst_ratio"];
      if (c["worst_ratio"].is_null() || w > c["worst_ratio"].get<double>()) c["worst_ratio"] = w;
    }
    if (res.contains("slopes") && res["slopes"].is_object())
      for (const auto& [k, v] : res["slopes"].items())
        slopes.push_back({{"command", cmd}, {"param", k}, {"slope", v}, {"pass", pass}});
  }
  std::stable_sort(slopes.begin(), slopes.end(), [](const json& a, const json& b) {
    return std::tie(a["command"].get_ref<const std::string&>(), a["param"].get_ref<const std::string&>()) <
           std::tie(b["command"].get_ref<const std::string&>(), b["param"].get_ref<const std::string&>());
  });
  summary["slopes"] = slopes;
  return summary;
}

}  // namespace translab::cli
