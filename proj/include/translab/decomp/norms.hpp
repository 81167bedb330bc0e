#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "translab/core.hpp"
#include "translab/decomp/grid.hpp"
#include "translab/decomp/localize.hpp"

namespace translab::decomp {

/// Largest frequency and modulation bands whose supports the grid resolves:
/// 2N <= xi_nyquist, and 2L + (N^2 or N) <= tau_nyquist.
struct ResolvedBands {
  long max_n = 0;  // 0 if not even N = 1 is resolved
  long max_l = 0;
};

inline ResolvedBands resolved_bands(const SpaceTimeGrid& g, Space space) {
  ResolvedBands rb;
  for (long N = 1; 2.0 * N <= g.xi_nyquist() + 1e-12; N *= 2) rb.max_n = N;
  if (rb.max_n == 0) return rb;
  const double n = static_cast<double>(rb.max_n);
  const double shift = space == Space::S ? n * n : n;
  for (long L = 1; 2.0 * L + shift <= g.tau_nyquist() + 1e-9; L *= 2) rb.max_l = L;
  return rb;
}

/// Squared norms ||S_L P_N u||^2 (or the wave analogue) of every dyadic block
/// touched by the field, plus the mass fraction outside the resolved blocks.
struct BlockNorms {
  std::map<std::pair<long, long>, double> sq;  // (N, L) -> squared norm
  double total_sq = 0;
  double unresolved_fraction = 0;
};

inline BlockNorms block_norms(const Field& field, Space space) {
  const Field f = field.fourier();
  const auto& g = *f.grid;
  const auto& torus = g.space();
  const auto rb = resolved_bands(g, space);
  constexpr int bits = 63;
  std::vector<double> table(bits * bits, 0.0);  // [log2 N][log2 L]
  BlockNorms out;
  double outside = 0;
  const int nt = g.nt();
  std::vector<std::pair<int, double>> nw, lw;
  auto weights = [](double x, std::vector<std::pair<int, double>>& w) {
    w.clear();
    const double a = std::abs(x);
    for (int e = 0; e < bits && (e == 0 || std::ldexp(1.0, e) < 2 * a); ++e) {
      const double v = psi(1L << e, x);
      if (v != 0) w.emplace_back(e, v);
    }
  };
  for (std::size_t k = 0; k < torus.size(); ++k) {
    const double r = torus.wavevector(k).norm();
    weights(r, nw);
    for (int it = 0; it < nt; ++it) {
      const double c2 = std::norm(f.values[g.flatten(k, it)]);
      if (c2 == 0) continue;
      out.total_sq += c2;
      const double m = modulation(space, r, g.tau(it));
      double covered = 0;
      if (rb.max_n > 0 && rb.max_l > 0)
        covered = bump(r / static_cast<double>(rb.max_n)) * bump(m / static_cast<double>(rb.max_l));
      outside += c2 * (1 - covered);
      weights(m, lw);
      for (const auto& [en, wn] : nw)
        for (const auto& [el, wl] : lw) table[en * bits + el] += c2 * wn * wn * wl * wl;
    }
  }
  for (int en = 0; en < bits; ++en)
    for (int el = 0; el < bits; ++el)
      if (table[en * bits + el] != 0) out.sq[{1L << en, 1L << el}] = table[en * bits + el];
  out.unresolved_fraction = out.total_sq > 0 ? outside / out.total_sq : 0;
  return out;
}

inline constexpr double unresolved_tolerance = 1e-8;

/// ( sum_N N^{2s} ( sum_L L^{pb} ||S_L P_N u||^p )^{2/p} )^{1/2} from
/// precomputed block norms; p = infinity takes the supremum over L.
inline double bourgain_from_blocks(const BlockNorms& blocks, double s, double b, double p) {
  require(p >= 1, "bourgain_norm: p must lie in [1, infinity]");
  std::map<long, double> inner;  // N -> l^p sum over L (before the 1/p power)
  const bool sup = std::isinf(p);
  for (const auto& [nl, sq] : blocks.sq) {
    const double term = std::pow(static_cast<double>(nl.second), b) * std::sqrt(sq);
    double& acc = inner[nl.first];
    acc = sup ? std::max(acc, term) : acc + std::pow(term, p);
  }
  double total = 0;
  for (const auto& [N, acc] : inner) {
    const double lp = sup ? acc : std::pow(acc, 1.0 / p);
    total += std::pow(static_cast<double>(N), 2 * s) * lp * lp;
  }
  return std::sqrt(total);
}

/// Block norms of a field, rejecting fields with more than 1e-8 of the
/// squared mass outside the blocks the grid resolves.
inline BlockNorms resolved_block_norms(const Field& field, Space space) {
  auto blocks = block_norms(field, space);
  if (blocks.unresolved_fraction > unresolved_tolerance)
    throw NumericalError("bourgain_norm: grid too small, unresolved mass fraction " +
                         std::to_string(blocks.unresolved_fraction));
  return blocks;
}

/// ( sum_N N^{2s} ( sum_L L^{pb} ||S_L P_N u||^p )^{2/p} )^{1/2}; p = infinity
/// takes the supremum over L. Throws NumericalError when more than 1e-8 of
/// the squared mass lies outside the blocks the grid resolves.
inline double bourgain_norm(const Field& field, Space space, double s, double b, double p) {
  require(p >= 1, "bourgain_norm: p must lie in [1, infinity]");
  return bourgain_from_blocks(resolved_block_norms(field, space), s, b, p);
}

/// ||u||_{H^k} = ( sum_xi <xi>^{2k} |c_xi|^2 )^{1/2} on the torus.
inline double sobolev_norm(const SpatialField& u, double k) {
  const SpatialField f = u.fourier();
  double s = 0;
  for (std::size_t i = 0; i < f.size(); ++i)
    s += std::pow(1 + f.grid->wavevector(i).squaredNorm(), k) * std::norm(f.values[i]);
  return std::sqrt(s);
}

/// Samples of a spatial field at increasing times.
struct Trajectory {
  std::vector<double> times;
  std::vector<SpatialField> frames;
};

/// sup_t ( ||u||^2_{H^k} + ||n||^2_{H^l} + ||dn/dt||^2_{H^{l-1}} )^{1/2}.
inline double z_norm(const Trajectory& u, const Trajectory& n, const Trajectory& nt, double k, double l) {
  require(u.times.size() == u.frames.size() && n.times.size() == n.frames.size() &&
              nt.times.size() == nt.frames.size(),
          "z_norm: trajectory with mismatched times and frames");
  require(u.times.size() == n.times.size() && u.times.size() == nt.times.size(),
          "z_norm: trajectories sampled at different numbers of times");
  for (std::size_t i = 0; i < u.times.size(); ++i)
    require(std::abs(u.times[i] - n.times[i]) <= 1e-12 && std::abs(u.times[i] - nt.times[i]) <= 1e-12,
            "z_norm: trajectories sampled on different time grids");
  double best = 0;
  for (std::size_t i = 0; i < u.times.size(); ++i) {
    const double a = sobolev_norm(u.frames[i], k), b = sobolev_norm(n.frames[i], l),
                 c = sobolev_norm(nt.frames[i], l - 1);
    best = std::max(best, std::sqrt(a * a + b * b + c * c));
  }
  return best;
}

struct GainPoint {
  double T = 0;
  double cut_norm = 0;   // ||eta_T u||_{X_{s,b,1}}
  double full_norm = 0;  // ||u||_{X_{s,1/2,1}}
  double ratio = 0;      // cut_norm / (T^{1/2-b} full_norm)
};

/// Smooth time cutoff eta_T(t) = bump(t / T) on the periodic window
/// (t taken in [-P/2, P/2)); it equals 1 on [0, T], so eta_T u is one
/// admissible extension of u restricted to (0, T) and its norm bounds the
/// restriction norm from above.
inline Field time_cutoff(const Field& field, double T) {
  Field out = field.physical();
  const auto& g = *out.grid;
  require(T > 0, "time_cutoff: T must be positive");
  require(4 * T <= g.period() + 1e-12, "time_cutoff: cutoff support 4T exceeds the time period");
  for (int it = 0; it < g.nt(); ++it) {
    double t = g.time(it);
    if (t >= g.period() / 2) t -= g.period();
    const double w = bump(t / T);
    for (std::size_t k = 0; k < g.space().size(); ++k) out.values[g.flatten(k, it)] *= w;
  }
  return out;
}

/// Ratio ||eta_T u||_{X_{s,b,1}} / (T^{1/2-b} ||u||_{X_{s,1/2,1}}) across a
/// T sweep; bounded uniformly as T -> 0 when the time-localisation gain holds.
inline std::vector<GainPoint> time_gain_check(const Field& field, Space space, double s, double b,
                                              const std::vector<double>& Ts) {
  require(b >= 0 && b < 0.5, "time_gain_check: b must lie in [0, 1/2)");
  require(!Ts.empty(), "time_gain_check: empty T sweep");
  const double full = bourgain_norm(field, space, s, 0.5, 1);
  require(full > 0, "time_gain_check: zero field");
  std::vector<GainPoint> out;
  for (double T : Ts) {
    GainPoint gp;
    gp.T = T;
    gp.full_norm = full;
    gp.cut_norm = bourgain_norm(time_cutoff(field, T), space, s, b, 1);
    gp.ratio = gp.cut_norm / (std::pow(T, 0.5 - b) * full);
    out.push_back(gp);
  }
  return out;
}

}  // namespace translab::decomp
