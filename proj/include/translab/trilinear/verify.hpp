#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "translab/core.hpp"
#include "translab/parallel.hpp"
#include "translab/trilinear/cases.hpp"
#include "translab/trilinear/lattice.hpp"
#include "translab/trilinear/radial.hpp"
#include "translab/trilinear/rescaled.hpp"

namespace translab::tri {

/// Resolution and search settings shared by every engine.
struct EngineSettings {
  RadialResolution radial;
  RadialSearch search;
  RescaledLattice rescaled;
  double trans_eps = 0.06;    // slab width of the transverse rescaled triple
  double parallel_eps = 0;    // 0: 2.5 times the normal resolution
  double lattice_h = 0.5, lattice_ht = 0.5;
  int power_steps = 2;
};

enum class StrKind { ss, ws_cube, ws_annulus };

inline std::string to_string(StrKind k) {
  switch (k) {
    case StrKind::ss: return "SS";
    case StrKind::ws_cube: return "WS-cube";
    case StrKind::ws_annulus: return "WS-annulus";
  }
  return "?";
}

inline StrKind parse_str_kind(const std::string& s) {
  for (StrKind k : {StrKind::ss, StrKind::ws_cube, StrKind::ws_annulus})
    if (to_string(k) == s) return k;
  throw InputError("unknown Strichartz kind '" + s + "' (SS, WS-cube, WS-annulus)");
}

struct EstimateReport {
  CaseSpec spec;
  std::string engine;
  double best_trial = 0;  // best random trial, before alternating maximisation
  double max_found = 0;
  double predicted = 0;
  double ratio = 0;       // max_found / predicted
  double crude = 0;       // support-volume bound
  bool crude_ok = true;
  double margin = 0;      // 0: no margin decision
  bool pass = true;
  int sweeps_done = 0;
};

namespace detail {

inline RadialFactor factor(Space space, long N, long L, bool conj) {
  auto f = make_factor(space, N, L);
  return conj ? conjugate(f) : f;
}

inline void finish(EstimateReport& r, double margin) {
  r.predicted = predicted_bound(r.spec);
  r.ratio = r.max_found / r.predicted;
  r.crude = crude_bound(r.spec);
  r.crude_ok = r.max_found <= r.crude * (1 + 1e-9);
  r.margin = margin;
  r.pass = r.crude_ok && (margin <= 0 || r.ratio <= margin);
}

inline EstimateReport run_radial(const CaseSpec& c, const RadialMap& map, std::vector<RadialFactor> fs,
                                 const EngineSettings& es) {
  EstimateReport r;
  r.spec = c;
  r.engine = "radial";
  const auto o = maximize_radial(map, std::move(fs), es.search);
  r.best_trial = o.best_trial;
  r.max_found = o.quotient;
  r.sweeps_done = o.sweeps_done;
  return r;
}

}  // namespace detail

/// Max over random trials (then alternating maximisation) of ||u v|| / (||u|| ||v||)
/// for the bilinear estimates. SS takes (N1, L1), (N2, L2); the WS kinds take
/// the wave factor (N, L, sign) and the Schroedinger factor (N1, L1), and
/// WS-cube restricts the wave factor to a cube of side d centred at (N, 0, 0).
/// conj1 / conj2 conjugate the first / second factor.
inline EstimateReport strichartz_ratio(StrKind kind, const CaseSpec& c, const EngineSettings& es = {},
                                       double margin = 0) {
  check_hypotheses(c);
  EstimateReport r;
  switch (kind) {
    case StrKind::ss: {
      require(c.id == Case::bilinear_ss, "strichartz_ratio: SS needs a bilinear-SS case");
      const RadialResolution res = es.radial;
      RadialMap m = [res](const std::vector<RadialFactor>& f) { return bilinear_product(f[0], f[1], res); };
      r = detail::run_radial(c, m, {detail::factor(Space::S, c.N1, c.L1, c.conj1), detail::factor(Space::S, c.N2, c.L2, c.conj2)}, es);
      break;
    }
    case StrKind::ws_annulus: {
      require(c.id == Case::bilinear_ws && c.d == 0, "strichartz_ratio: WS-annulus needs a bilinear-WS case with d = 0");
      const RadialResolution res = es.radial;
      RadialMap m = [res](const std::vector<RadialFactor>& f) { return bilinear_product(f[0], f[1], res); };
      r = detail::run_radial(c, m,
                             {detail::factor(c.wave_space(), c.N, c.L, c.conj1), detail::factor(Space::S, c.N1, c.L1, c.conj2)},
                             es);
      break;
    }
    case StrKind::ws_cube: {
      require(c.id == Case::bilinear_ws && c.d > 0, "strichartz_ratio: WS-cube needs a bilinear-WS case with d > 0");
      require(es.lattice_ht <= 0.5 && es.lattice_h <= c.d / 2.0,
              "strichartz_ratio: lattice too coarse for the modulation band or the cube");
      const Cube cube{Eigen::Vector3d(static_cast<double>(c.N), 0, 0), static_cast<double>(c.d)};
      auto u = lattice_block(c.wave_space(), c.N, c.L, es.lattice_h, es.lattice_ht, cube);
      auto v = lattice_block(Space::S, c.N1, c.L1, es.lattice_h, es.lattice_ht);
      require(!u.pts.empty() && !v.pts.empty(), "strichartz_ratio: block holds no lattice points");
      if (c.conj1) u = reflect(std::move(u));
      if (c.conj2) v = reflect(std::move(v));
      const LatticeBilinear op(std::move(u), std::move(v));
      require(op.box_size() <= (std::size_t{1} << 24), "strichartz_ratio: lattice box too large, blocks unresolvable");
      const auto o = maximize_lattice(op, es.search, es.power_steps);
      r.spec = c;
      r.engine = "lattice";
      r.best_trial = o.best_trial;
      r.max_found = o.quotient;
      r.sweeps_done = o.sweeps_done;
      break;
    }
  }
  detail::finish(r, margin);
  return r;
}

/// Randomised trials plus alternating maximisation of |I| / (||f|| ||g1|| ||g2||)
/// (or of the bilinear quotient) within the supports of the case. Hypotheses
/// are checked before any computation.
inline EstimateReport verify_case(const CaseSpec& c, const EngineSettings& es = {}, double margin = 0) {
  check_hypotheses(c);
  switch (c.id) {
    case Case::bilinear_ss:
      return strichartz_ratio(StrKind::ss, c, es, margin);
    case Case::bilinear_ws:
      return strichartz_ratio(c.d > 0 ? StrKind::ws_cube : StrKind::ws_annulus, c, es, margin);
    case Case::trans_low_mod:
    case Case::parallel_hh: {
      require(!c.conj1 && !c.conj2, "verify_case: conjugation variants are not defined for the angular cases");
      const bool trans = c.id == Case::trans_low_mod;
      conv::ExtremizerOptions opt;
      opt.seed = es.search.seed;
      const auto rc = rescaled_constant(c.N1, c.A, c.j1, c.j2, c.sign, trans ? es.trans_eps : es.parallel_eps,
                                        es.rescaled, opt);
      EstimateReport r;
      r.spec = c;
      r.engine = "rescaled";
      // |I| <= N1^{-1/2} (L L1 L2)^{1/2} C after undoing the parabolic scaling
      r.max_found = std::sqrt(static_cast<double>(c.L * c.L1 * c.L2) / static_cast<double>(c.N1)) * rc.constant;
      r.best_trial = r.max_found;
      if (!rc.converged) throw NumericalError("verify_case: rescaled extremizer did not converge");
      detail::finish(r, margin);
      return r;
    }
    default: {
      const RadialResolution res = es.radial;
      const WaveTarget f = make_target(c.wave_space(), c.N, c.L);
      RadialMap m = [res, f](const std::vector<RadialFactor>& g) { return trilinear_partner(g[0], g[1], f, res); };
      auto r = detail::run_radial(c, m,
                                  {detail::factor(Space::S, c.N1, c.L1, c.conj1), detail::factor(Space::S, c.N2, c.L2, c.conj2)},
                                  es);
      detail::finish(r, margin);
      return r;
    }
  }
}

/// Parameter slot by name: N, N1, N2, L, L1, L2, A, d.
inline long& param_ref(CaseSpec& c, const std::string& name) {
  if (name == "N") return c.N;
  if (name == "N1") return c.N1;
  if (name == "N2") return c.N2;
  if (name == "L") return c.L;
  if (name == "L1") return c.L1;
  if (name == "L2") return c.L2;
  if (name == "A") return c.A;
  if (name == "d") return c.d;
  throw InputError("unknown case parameter '" + name + "'");
}

inline double param_value(const CaseSpec& c, const std::string& name) {
  if (name == "maxL") return static_cast<double>(c.max_l());
  return static_cast<double>(param_ref(const_cast<CaseSpec&>(c), name));
}

/// The configuration at one sweep value. Sweeping N1 in a high-high case
/// scales N, N2 (and A in the parallel case) with it, keeping their ratios;
/// the cap pair is re-picked whenever A changes.
inline CaseSpec sweep_point(const CaseSpec& base, const std::string& param, long value) {
  CaseSpec c = base;
  const bool high_high = c.id == Case::trans_low_mod || c.id == Case::parallel_hh || c.id == Case::hhl_lm ||
                         c.id == Case::hhl_hm;
  if (param == "N1" && high_high) {
    auto scale = [&](long x) {
      const long y = x * value / base.N1;
      require(y >= 1 && y * base.N1 == x * value, "sweep_point: N1 sweep breaks a dyadic ratio");
      return y;
    };
    c.N = scale(base.N);
    c.N2 = scale(base.N2);
    if (c.id == Case::parallel_hh) c.A = scale(base.A);
  }
  if (param == "maxL") {
    // the largest modulation among L, L1, L2 is swept, the others kept
    long& slot = base.L >= base.L1 && base.L >= base.L2 ? c.L : (base.L1 >= base.L2 ? c.L1 : c.L2);
    slot = value;
  } else {
    param_ref(c, param) = value;
  }
  const bool angular = c.id == Case::trans_low_mod || c.id == Case::parallel_hh;
  if (angular && (c.A != base.A || c.j1 < 0 || c.j2 < 0)) {
    const auto [j1, j2] = pick_caps(c.A, c.id == Case::trans_low_mod);
    c.j1 = j1;
    c.j2 = j2;
  }
  return c;
}

struct SweepReport {
  std::string param;
  std::vector<double> values;
  std::vector<EstimateReport> points;
  double slope = 0;            // log max_found against log param
  double predicted_slope = 0;  // log predicted against log param
  double ratio_slope = 0;      // log (max_found / predicted) against log param
  double margin = 0;           // margin_factor times the median ratio
  bool pass = true;
};

inline double median(std::vector<double> v) {
  require(!v.empty(), "median: empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// verify_case at every value of one parameter; slopes by log-log regression,
/// pass iff every point lies within margin_factor times the median ratio and
/// respects the support-volume bound. Points run in parallel with per-point
/// seeds, so the result does not depend on the worker count.
inline SweepReport verify_sweep(const CaseSpec& base, const std::string& param, const std::vector<long>& values,
                                const EngineSettings& es = {}, double margin_factor = 8) {
  require(values.size() >= 2, "verify_sweep: need at least two sweep values");
  SweepReport s;
  s.param = param;
  std::vector<CaseSpec> specs;
  for (long v : values) {
    specs.push_back(sweep_point(base, param, v));
    check_hypotheses(specs.back());
  }
  s.points.resize(specs.size());
  parallel_for(specs.size(), [&](std::size_t i) {
    EngineSettings local = es;
    local.search.seed = mix_seed(es.search.seed, i);
    s.points[i] = verify_case(specs[i], local);
  });
  std::vector<double> x, found, pred, ratio;
  for (const auto& p : s.points) {
    x.push_back(param_value(p.spec, param));
    found.push_back(p.max_found);
    pred.push_back(p.predicted);
    ratio.push_back(p.ratio);
  }
  s.values = x;
  s.slope = fit_loglog(x, found).slope;
  s.predicted_slope = fit_loglog(x, pred).slope;
  s.ratio_slope = fit_loglog(x, ratio).slope;
  s.margin = margin_factor * median(ratio);
  for (auto& p : s.points) {
    p.margin = s.margin;
    p.pass = p.crude_ok && p.ratio <= s.margin;
    s.pass = s.pass && p.pass;
  }
  return s;
}

/// Several parameters swept jointly over their product grid.
struct GridSweep {
  std::vector<std::string> params;
  std::vector<EstimateReport> points;
  std::vector<double> envelope_slope;  // per parameter: sup over the others, then log-log fit of the ratio
  std::vector<double> joint_slope;     // multivariate log-log regression of the ratio
  double margin = 0;
  bool pass = true;
};

inline GridSweep verify_grid(const CaseSpec& base, const std::vector<std::pair<std::string, std::vector<long>>>& axes,
                             const EngineSettings& es = {}, double margin_factor = 8) {
  require(!axes.empty(), "verify_grid: no axes");
  std::vector<CaseSpec> specs{base};
  for (const auto& [name, vals] : axes) {
    require(vals.size() >= 2, "verify_grid: need at least two values per axis");
    std::vector<CaseSpec> next;
    for (const auto& c : specs)
      for (long v : vals) next.push_back(sweep_point(c, name, v));
    specs = std::move(next);
  }
  for (const auto& c : specs) check_hypotheses(c);
  GridSweep g;
  for (const auto& a : axes) g.params.push_back(a.first);
  g.points.resize(specs.size());
  parallel_for(specs.size(), [&](std::size_t i) {
    EngineSettings local = es;
    local.search.seed = mix_seed(es.search.seed, i);
    g.points[i] = verify_case(specs[i], local);
  });
  std::vector<double> ratios;
  for (const auto& p : g.points) ratios.push_back(p.ratio);
  g.margin = margin_factor * median(ratios);
  for (auto& p : g.points) {
    p.margin = g.margin;
    p.pass = p.crude_ok && p.ratio <= g.margin;
    g.pass = g.pass && p.pass;
  }
  const auto n = static_cast<Eigen::Index>(g.points.size()), k = static_cast<Eigen::Index>(axes.size());
  Eigen::MatrixXd X(n, k + 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1;
    for (Eigen::Index a = 0; a < k; ++a) X(i, a + 1) = std::log(param_value(g.points[i].spec, g.params[a]));
    y(i) = std::log(g.points[i].ratio);
  }
  const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
  for (Eigen::Index a = 0; a < k; ++a) g.joint_slope.push_back(beta(a + 1));
  for (const auto& [name, vals] : axes) {
    std::vector<double> xs, env;
    for (long v : vals) {
      double best = 0;
      for (const auto& p : g.points)
        if (param_value(p.spec, name) == static_cast<double>(v)) best = std::max(best, p.ratio);
      xs.push_back(static_cast<double>(v));
      env.push_back(best);
    }
    g.envelope_slope.push_back(fit_loglog(xs, env).slope);
  }
  return g;
}

inline void write_csv_header(std::ostream& os) {
  os << "case,N,N1,N2,L,L1,L2,A,j1,j2,d,sign,conj1,conj2,engine,best_trial,max_found,max_ratio,predicted,crude,"
        "slope_param,slope,predicted_slope,ratio_slope\n";
}

inline void write_csv_row(std::ostream& os, const EstimateReport& r, const std::string& slope_param = "",
                          double slope = 0, double predicted_slope = 0, double ratio_slope = 0) {
  const auto& c = r.spec;
  std::ostringstream line;
  line << std::setprecision(10);
  line << to_string(c.id) << ',' << c.N << ',' << c.N1 << ',' << c.N2 << ',' << c.L << ',' << c.L1 << ',' << c.L2
       << ',' << c.A << ',' << c.j1 << ',' << c.j2 << ',' << c.d << ',' << (c.sign > 0 ? "+" : "-") << ','
       << c.conj1 << ',' << c.conj2 << ',' << r.engine << ',' << r.best_trial << ',' << r.max_found << ','
       << r.ratio << ',' << r.predicted << ',' << r.crude << ',' << slope_param << ',';
  if (!slope_param.empty()) line << slope << ',' << predicted_slope << ',' << ratio_slope;
  else line << ",,";
  os << line.str() << '\n';
}

inline void write_csv(std::ostream& os, const SweepReport& s) {
  write_csv_header(os);
  for (const auto& p : s.points) write_csv_row(os, p, s.param, s.slope, s.predicted_slope, s.ratio_slope);
}

}  // namespace translab::tri
