#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "translab/core.hpp"
#include "translab/decomp/field_io.hpp"
#include "translab/decomp/grid.hpp"
#include "translab/decomp/norms.hpp"
#include "translab/fft.hpp"
#include "translab/parallel.hpp"
#include "translab/region.hpp"

// Periodic desk-scale analog of
//   i u_t + Lap u = n u,   n_tt - Lap n = Lap |u|^2
// on the torus of side 2 pi lambda. The wave part is carried by the half-wave
// variable n+ = n + i <D>^{-1} n_t (n- is its conjugate), which obeys
//   d/dt n+ = -i <D> n+ + i <D>^{-1} (n + Lap |u|^2).
// The linear parts e^{it Lap} and e^{-it <D>} are applied exactly; the
// forcing holds n u, Lap <D>^{-1} |u|^2 and the lower-order <D>^{-1} n.

namespace translab::zak {

using decomp::Side;
using decomp::SpatialField;
using decomp::Torus;

/// Regularity of the data (u, n, n_t) in H^s x H^sigma x H^{sigma-1}.
struct SobolevPair {
  double s = 0.3, sigma = -0.3;
  std::vector<std::string> violations() const { return region_violations(s, sigma); }
  bool admissible() const { return violations().empty(); }
  void require_admissible(const std::string& who) const { require_region(s, sigma, who); }
};

/// Physical-side fields at time t. n and nt are real.
struct ZakharovState {
  SpatialField u, n, nt;
  double t = 0;

  static ZakharovState zeros(std::shared_ptr<const Torus> g) {
    return {SpatialField::zeros(g, Side::physical), SpatialField::zeros(g, Side::physical),
            SpatialField::zeros(g, Side::physical), 0.0};
  }
  const std::shared_ptr<const Torus>& grid() const { return u.grid; }
};

/// max |Im f| / max |f| on the physical side.
inline double imag_defect(const SpatialField& f) {
  const auto p = f.physical();
  double im = 0, all = 0;
  for (const auto& v : p.values) {
    im = std::max(im, std::abs(v.imag()));
    all = std::max(all, std::abs(v));
  }
  return all > 0 ? im / all : im;
}

/// max |c(-xi) - conj c(xi)| / max |c|: zero exactly for real fields.
inline double hermitian_defect(const SpatialField& f) {
  const auto c = f.fourier();
  const auto& g = *c.grid;
  double num = 0, den = 0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const auto i = g.unflatten(k);
    const auto nk = g.index_of({-i[0], -i[1], -i[2]});
    num = std::max(num, std::abs(c.values[nk] - std::conj(c.values[k])));
    den = std::max(den, std::abs(c.values[k]));
  }
  return den > 0 ? num / den : num;
}

/// Rejects states on mixed grids, non-finite values, or n, nt with an
/// imaginary part above 1e-12 (relative).
inline void validate(const ZakharovState& s) {
  require(s.u.grid && s.n.grid && s.nt.grid, "ZakharovState: null grid");
  require(*s.u.grid == *s.n.grid && *s.u.grid == *s.nt.grid, "ZakharovState: fields on different grids");
  for (const auto* f : {&s.u, &s.n, &s.nt})
    for (const auto& v : f->values)
      require(std::isfinite(v.real()) && std::isfinite(v.imag()), "ZakharovState: non-finite value");
  require(imag_defect(s.n) <= 1e-12, "ZakharovState: n is not real");
  require(imag_defect(s.nt) <= 1e-12, "ZakharovState: nt is not real");
}

/// ( ||u||^2_{H^s} + ||n||^2_{H^sigma} + ||nt||^2_{H^{sigma-1}} )^{1/2}
inline double data_norm(const ZakharovState& d, const SobolevPair& p) {
  const double a = decomp::sobolev_norm(d.u, p.s), b = decomp::sobolev_norm(d.n, p.sigma),
               c = decomp::sobolev_norm(d.nt, p.sigma - 1);
  return std::sqrt(a * a + b * b + c * c);
}

/// Raised when a step produces NaN or overflow; carries the last good state.
class IntegratorFailure : public NumericalError {
 public:
  IntegratorFailure(const std::string& what, ZakharovState last) : NumericalError(what), snapshot(std::move(last)) {}
  ZakharovState snapshot;
};

enum class Scheme { etd1, etd2 };

struct StepOptions {
  Scheme scheme = Scheme::etd1;
  bool nonlinear = true;  // false: free propagators only
};

namespace detail {

using Vec = std::vector<cplx>;

/// phi_k(z) = sum_j z^j / (j + k)!, by series near 0.
inline cplx phi(int k, cplx z) {
  if (std::abs(z) < 0.1) {
    cplx term = 1, sum = 0;
    double fact = 1;
    for (int j = 2; j <= k; ++j) fact *= j;
    term /= fact;
    for (int j = 0; j < 12; ++j) {
      sum += term;
      term *= z / static_cast<double>(j + k + 1);
    }
    return sum;
  }
  if (k == 1) return (std::exp(z) - 1.0) / z;
  return (std::exp(z) - 1.0 - z) / (z * z);
}

/// Fourier-side machinery shared by the stepper and the Picard iteration.
class Engine {
 public:
  explicit Engine(std::shared_ptr<const Torus> g) : g_(std::move(g)), fft_(g_->dims()) {
    const std::size_t m = g_->size();
    lap_.resize(m);
    jb_.resize(m);
    neg_.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      lap_[k] = g_->wavevector(k).squaredNorm();
      jb_[k] = std::sqrt(1 + lap_[k]);
      const auto i = g_->unflatten(k);
      neg_[k] = g_->index_of({-i[0], -i[1], -i[2]});
    }
  }

  const std::shared_ptr<const Torus>& grid() const { return g_; }
  std::size_t size() const { return lap_.size(); }
  double lap(std::size_t k) const { return lap_[k]; }
  double jb(std::size_t k) const { return jb_[k]; }
  cplx lambda_u(std::size_t k) const { return {0, -lap_[k]}; }
  cplx lambda_p(std::size_t k) const { return {0, -jb_[k]}; }

  void forward(Vec& v) const {
    fft_.forward(v);
    const double inv = 1.0 / static_cast<double>(v.size());
    for (auto& x : v) x *= inv;
  }
  void inverse(Vec& v) const { fft_.inverse(v); }

  /// Fourier coefficients of n and nt from n+.
  void split(const Vec& P, Vec& N, Vec& Nt) const {
    N.resize(P.size());
    Nt.resize(P.size());
    for (std::size_t k = 0; k < P.size(); ++k) {
      const cplx m = std::conj(P[neg_[k]]);
      N[k] = 0.5 * (P[k] + m);
      Nt[k] = jb_[k] * (P[k] - m) / cplx(0, 2);
    }
  }

  void to_fourier(const ZakharovState& s, Vec& U, Vec& P) const {
    U = s.u.fourier().values;
    const auto N = s.n.fourier().values, Nt = s.nt.fourier().values;
    P.resize(N.size());
    for (std::size_t k = 0; k < N.size(); ++k) P[k] = N[k] + cplx(0, 1) * Nt[k] / jb_[k];
  }

  /// Back to physical fields; n and nt are taken as real parts.
  ZakharovState to_state(const Vec& U, const Vec& P, double t) const {
    auto s = ZakharovState::zeros(g_);
    s.t = t;
    s.u.values = U;
    s.u.side = Side::fourier;
    s.u.to_physical();
    Vec N, Nt;
    split(P, N, Nt);
    inverse(N);
    inverse(Nt);
    for (std::size_t k = 0; k < N.size(); ++k) {
      s.n.values[k] = N[k].real();
      s.nt.values[k] = Nt[k].real();
    }
    return s;
  }

  /// Forcing of (u, n+) in Fourier coefficients.
  void forcing(const Vec& U, const Vec& P, Vec& NU, Vec& NP) const {
    Vec u = U, n, nt;
    inverse(u);
    split(P, n, nt);
    inverse(n);
    Vec rho(u.size());
    NU.resize(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) {
      const double nr = n[k].real();
      n[k] = nr;
      NU[k] = cplx(0, -1) * nr * u[k];
      rho[k] = std::norm(u[k]);
    }
    forward(NU);
    forward(rho);
    forward(n);
    NP.resize(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) NP[k] = cplx(0, 1) * (n[k] - lap_[k] * rho[k]) / jb_[k];
  }

 private:
  std::shared_ptr<const Torus> g_;
  Fft fft_;
  std::vector<double> lap_, jb_;
  std::vector<std::size_t> neg_;
};

/// Exponential-integrator stepper with cached propagators for one dt.
class Stepper {
 public:
  Stepper(const Engine& e, double dt, StepOptions opt) : e_(e), dt_(dt), opt_(opt) {
    const std::size_t m = e.size();
    Eu_.resize(m), Ep_.resize(m), F1u_.resize(m), F1p_.resize(m), F2u_.resize(m), F2p_.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      const cplx zu = dt * e.lambda_u(k), zp = dt * e.lambda_p(k);
      Eu_[k] = std::exp(zu);
      Ep_[k] = std::exp(zp);
      F1u_[k] = dt * phi(1, zu);
      F1p_[k] = dt * phi(1, zp);
      F2u_[k] = dt * phi(2, zu);
      F2p_[k] = dt * phi(2, zp);
    }
  }

  void step(Vec& U, Vec& P) const {
    const std::size_t m = U.size();
    if (!opt_.nonlinear) {
      for (std::size_t k = 0; k < m; ++k) {
        U[k] *= Eu_[k];
        P[k] *= Ep_[k];
      }
      return;
    }
    Vec NU, NP;
    e_.forcing(U, P, NU, NP);
    Vec U1(m), P1(m);
    for (std::size_t k = 0; k < m; ++k) {
      U1[k] = Eu_[k] * U[k] + F1u_[k] * NU[k];
      P1[k] = Ep_[k] * P[k] + F1p_[k] * NP[k];
    }
    if (opt_.scheme == Scheme::etd2) {
      Vec NU1, NP1;
      e_.forcing(U1, P1, NU1, NP1);
      for (std::size_t k = 0; k < m; ++k) {
        U1[k] += F2u_[k] * (NU1[k] - NU[k]);
        P1[k] += F2p_[k] * (NP1[k] - NP[k]);
      }
    }
    U.swap(U1);
    P.swap(P1);
  }

 private:
  const Engine& e_;
  double dt_;
  StepOptions opt_;
  Vec Eu_, Ep_, F1u_, F1p_, F2u_, F2p_;
};

inline bool finite(const Vec& v) {
  for (const auto& x : v)
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
  return true;
}

}  // namespace detail

/// Half-wave pair (physical side); minus is the conjugate of plus for real n, nt.
struct HalfWave {
  SpatialField plus, minus;
};

/// n+- = n +- i <D>^{-1} nt.
inline HalfWave wave_reduce(const ZakharovState& s) {
  const auto N = s.n.fourier(), Nt = s.nt.fourier();
  HalfWave h{N, N};
  const auto& g = *s.n.grid;
  for (std::size_t k = 0; k < N.size(); ++k) {
    const cplx w = cplx(0, 1) * Nt.values[k] / std::sqrt(1 + g.wavevector(k).squaredNorm());
    h.plus.values[k] += w;
    h.minus.values[k] -= w;
  }
  h.plus.to_physical();
  h.minus.to_physical();
  return h;
}

/// Inverse of wave_reduce: n = (n+ + n-)/2, nt = <D>(n+ - n-)/(2i), real parts kept.
inline std::pair<SpatialField, SpatialField> wave_restore(const HalfWave& h) {
  require(*h.plus.grid == *h.minus.grid, "wave_restore: fields on different grids");
  const auto P = h.plus.fourier(), M = h.minus.fourier();
  auto n = P, nt = P;
  const auto& g = *P.grid;
  for (std::size_t k = 0; k < P.size(); ++k) {
    n.values[k] = 0.5 * (P.values[k] + M.values[k]);
    nt.values[k] = std::sqrt(1 + g.wavevector(k).squaredNorm()) * (P.values[k] - M.values[k]) / cplx(0, 2);
  }
  n.to_physical();
  nt.to_physical();
  for (auto* f : {&n, &nt})
    for (auto& v : f->values) v = v.real();
  return {n, nt};
}

/// Largest admissible dt: 1 / (1 + max|n| + 2 xi_max max|u|), the Lipschitz
/// size of the forcing. The linear parts are exact and impose no limit.
inline double stability_cap(const ZakharovState& s) {
  double nu = 0, nn = 0;
  for (const auto& v : s.u.physical().values) nu = std::max(nu, std::abs(v));
  for (const auto& v : s.n.physical().values) nn = std::max(nn, std::abs(v));
  return 1.0 / (1 + nn + 2 * s.u.grid->xi_max() * nu);
}

/// Samples of a solution at increasing times.
struct ZakharovTrajectory {
  std::vector<ZakharovState> frames;
  std::vector<double> times() const {
    std::vector<double> t;
    for (const auto& f : frames) t.push_back(f.t);
    return t;
  }
};

/// One exponential-integrator step of size dt.
inline ZakharovState duhamel_step(const ZakharovState& s, double dt, StepOptions opt = {}) {
  validate(s);
  require(dt > 0 && dt <= stability_cap(s), "duhamel_step: dt outside (0, stability cap]");
  detail::Engine e(s.grid());
  detail::Vec U, P;
  e.to_fourier(s, U, P);
  detail::Stepper(e, dt, opt).step(U, P);
  if (!detail::finite(U) || !detail::finite(P))
    throw IntegratorFailure("duhamel_step: non-finite state after step at t = " + std::to_string(s.t), s);
  return e.to_state(U, P, s.t + dt);
}

/// round(T / dt) steps, keeping every `every`-th state (and the last).
inline ZakharovTrajectory evolve(const ZakharovState& s0, double T, double dt, StepOptions opt = {}, int every = 1) {
  validate(s0);
  require(T > 0 && dt > 0, "evolve: T and dt must be positive");
  require(every >= 1, "evolve: sampling stride must be >= 1");
  const long steps = std::lround(T / dt);
  require(steps >= 1 && std::abs(steps * dt - T) <= 1e-9 * T, "evolve: T must be a multiple of dt");
  require(dt <= stability_cap(s0), "evolve: dt above the stability cap of the data");
  detail::Engine e(s0.grid());
  detail::Stepper st(e, dt, opt);
  detail::Vec U, P;
  e.to_fourier(s0, U, P);
  ZakharovTrajectory tr;
  tr.frames.push_back(s0);
  for (long i = 1; i <= steps; ++i) {
    const detail::Vec U0 = U, P0 = P;
    st.step(U, P);
    if (!detail::finite(U) || !detail::finite(P)) {
      std::ostringstream os;
      os << "evolve: non-finite state at step " << i << " (t = " << s0.t + (i - 1) * dt << ")";
      throw IntegratorFailure(os.str(), e.to_state(U0, P0, s0.t + (i - 1) * dt));
    }
    if (i % every == 0 || i == steps) tr.frames.push_back(e.to_state(U, P, s0.t + i * dt));
  }
  return tr;
}

/// max_t | ||u(t)|| - ||u(0)|| | / ||u(0)||, grid-averaged L2.
inline double mass_drift(const ZakharovTrajectory& tr) {
  require(!tr.frames.empty(), "mass_drift: empty trajectory");
  const double m0 = tr.frames.front().u.norm();
  require(m0 > 0, "mass_drift: zero initial u");
  double d = 0;
  for (const auto& f : tr.frames) d = std::max(d, std::abs(f.u.norm() - m0) / m0);
  return d;
}

/// Random smooth data on integer modes |m| <= kmax, rescaled so that
/// data_norm = amplitude. n and nt are real.
inline ZakharovState small_data(std::shared_ptr<const Torus> g, double amplitude, double kmax, std::uint64_t seed,
                                 const SobolevPair& p = {}) {
  require(amplitude >= 0, "small_data: negative amplitude");
  auto rng = stream_rng(seed, 0);
  std::normal_distribution<double> gauss(0, 1);
  auto s = ZakharovState::zeros(g);
  for (auto* f : {&s.u, &s.n, &s.nt}) f->side = Side::fourier;
  for (std::size_t k = 0; k < g->size(); ++k) {
    const bool in = g->wavevector(k).norm() * g->lambda() <= kmax + 1e-12;
    const double a = gauss(rng), b = gauss(rng), c = gauss(rng), d = gauss(rng), e = gauss(rng), f = gauss(rng);
    if (!in) continue;
    s.u.values[k] = {a, b};
    s.n.values[k] = {c, d};
    s.nt.values[k] = {e, f};
  }
  s.u.to_physical();
  for (auto* f : {&s.n, &s.nt}) {
    f->to_physical();
    for (auto& v : f->values) v = v.real();
  }
  const double nrm = data_norm(s, p);
  require(nrm > 0, "small_data: no modes below kmax");
  for (auto* f : {&s.u, &s.n, &s.nt})
    for (auto& v : f->values) v *= amplitude / nrm;
  return s;
}

// ---------------------------------------------------------------- Picard

struct PicardOptions {
  double nodes_per_unit = 64;  // composite trapezoid nodes per unit time
  int min_intervals = 2;
  double stop_below = 0;       // stop once d_k <= stop_below * Z norm of the iterate
};

struct PicardReport {
  std::vector<double> times;     // quadrature nodes
  std::vector<double> d;         // d[k-1] = Z distance between iterates k and k-1
  std::vector<double> factors;   // d[k] / d[k-1]
  double z_norm = 0;             // Z norm of the last iterate
  double floor = 0;              // roundoff level of d: 64 eps z_norm
  bool diverged = false;         // d grew on 3 consecutive steps
  int iterations = 0;
  ZakharovTrajectory last;       // last iterate at the nodes

  /// Largest d_{k+1} / d_k with k >= from (iterations counted from 1).
  /// Factors whose numerator is at the roundoff floor carry no information
  /// and are skipped.
  double contraction(int from = 2) const {
    double c = 0;
    for (std::size_t i = 0; i < factors.size(); ++i)
      if (static_cast<int>(i) + 2 > from && d[i + 1] > floor) c = std::max(c, factors[i]);
    return c;
  }
};

namespace detail {

/// sup over nodes of (||u||^2_{H^k} + ||n||^2_{H^l} + ||nt||^2_{H^{l-1}})^{1/2}.
inline double z_norm_nodes(const Engine& e, const std::vector<Vec>& U, const std::vector<Vec>& P, double k, double l) {
  double best = 0;
  Vec N, Nt;
  for (std::size_t j = 0; j < U.size(); ++j) {
    e.split(P[j], N, Nt);
    double s = 0;
    for (std::size_t q = 0; q < e.size(); ++q) {
      const double w = 1 + e.lap(q);
      s += std::pow(w, k) * std::norm(U[j][q]) + std::pow(w, l) * std::norm(N[q]) + std::pow(w, l - 1) * std::norm(Nt[q]);
    }
    best = std::max(best, std::sqrt(s));
  }
  return best;
}

}  // namespace detail

/// Picard iteration of the Duhamel formulation on [0, T]. Iterate 0 is the
/// free evolution; iterate k+1 integrates the forcing of iterate k against
/// the exact propagators by the composite trapezoid rule. d_k is measured in
/// Z^{s,sigma}_T (sup over the nodes).
inline PicardReport picard_iterate(const ZakharovState& data, double T, int K, const SobolevPair& pair,
                                   PicardOptions opt = {}) {
  pair.require_admissible("picard_iterate");
  validate(data);
  require(T > 0 && std::isfinite(T), "picard_iterate: T must be positive");
  require(K >= 1, "picard_iterate: need at least one iteration");
  const int M = std::max(opt.min_intervals, static_cast<int>(std::ceil(opt.nodes_per_unit * T - 1e-9)));
  const double h = T / M;
  detail::Engine e(data.grid());
  const std::size_t m = e.size();
  detail::Vec U0, P0;
  e.to_fourier(data, U0, P0);

  PicardReport rep;
  for (int j = 0; j <= M; ++j) rep.times.push_back(j * h);
  // e^{lambda t_j} per node
  std::vector<detail::Vec> Eu(M + 1, detail::Vec(m)), Ep(M + 1, detail::Vec(m));
  for (int j = 0; j <= M; ++j)
    for (std::size_t q = 0; q < m; ++q) {
      Eu[j][q] = std::exp(rep.times[j] * e.lambda_u(q));
      Ep[j][q] = std::exp(rep.times[j] * e.lambda_p(q));
    }
  std::vector<detail::Vec> U(M + 1, detail::Vec(m)), P(M + 1, detail::Vec(m));
  for (int j = 0; j <= M; ++j)
    for (std::size_t q = 0; q < m; ++q) {
      U[j][q] = Eu[j][q] * U0[q];
      P[j][q] = Ep[j][q] * P0[q];
    }

  int growing = 0;
  for (int it = 1; it <= K; ++it) {
    std::vector<detail::Vec> NU(M + 1), NP(M + 1);
    for (int j = 0; j <= M; ++j) e.forcing(U[j], P[j], NU[j], NP[j]);
    std::vector<detail::Vec> Un(M + 1, detail::Vec(m)), Pn(M + 1, detail::Vec(m));
    detail::Vec Hu(m, 0.0), Hp(m, 0.0);  // sum_{i<j} h e^{-lambda t_i} G_i
    for (int j = 0; j <= M; ++j) {
      for (std::size_t q = 0; q < m; ++q) {
        const cplx gu = NU[j][q] / Eu[j][q], gp = NP[j][q] / Ep[j][q];
        const cplx gu0 = NU[0][q], gp0 = NP[0][q];
        cplx iu = 0, ip = 0;
        if (j > 0) {
          iu = Hu[q] - 0.5 * h * gu0 + 0.5 * h * gu;
          ip = Hp[q] - 0.5 * h * gp0 + 0.5 * h * gp;
        }
        Un[j][q] = Eu[j][q] * (U0[q] + iu);
        Pn[j][q] = Ep[j][q] * (P0[q] + ip);
        Hu[q] += h * gu;
        Hp[q] += h * gp;
      }
      if (!detail::finite(Un[j]) || !detail::finite(Pn[j]))
        throw NumericalError("picard_iterate: non-finite iterate " + std::to_string(it));
    }
    std::vector<detail::Vec> DU(M + 1, detail::Vec(m)), DP(M + 1, detail::Vec(m));
    for (int j = 0; j <= M; ++j)
      for (std::size_t q = 0; q < m; ++q) {
        DU[j][q] = Un[j][q] - U[j][q];
        DP[j][q] = Pn[j][q] - P[j][q];
      }
    const double dk = detail::z_norm_nodes(e, DU, DP, pair.s, pair.sigma);
    if (!rep.d.empty()) {
      rep.factors.push_back(rep.d.back() > 0 ? dk / rep.d.back() : 0.0);
      growing = dk > rep.d.back() ? growing + 1 : 0;
    }
    rep.d.push_back(dk);
    U.swap(Un);
    P.swap(Pn);
    rep.iterations = it;
    if (growing >= 3 && dk > 64 * std::numeric_limits<double>::epsilon() * detail::z_norm_nodes(e, U, P, pair.s, pair.sigma)) {
      rep.diverged = true;
      break;
    }
    if (opt.stop_below > 0 && dk <= opt.stop_below * detail::z_norm_nodes(e, U, P, pair.s, pair.sigma)) break;
  }
  rep.z_norm = detail::z_norm_nodes(e, U, P, pair.s, pair.sigma);
  rep.floor = 64 * std::numeric_limits<double>::epsilon() * rep.z_norm;
  for (int j = 0; j <= M; ++j) rep.last.frames.push_back(e.to_state(U[j], P[j], rep.times[j]));
  return rep;
}

struct HorizonReport {
  std::vector<double> Ts;
  std::vector<double> contraction;  // max factor from iteration 2 on, per T
  std::vector<bool> diverged;
  double first_failure = 0;         // first T with factor > 1/2 or divergence; 0 if none
};

/// Doubles T from T0 up to Tmax and records the first T at which the
/// iteration stops contracting by 1/2: an empirical existence-time proxy.
inline HorizonReport contraction_horizon(const ZakharovState& data, double T0, double Tmax, int K,
                                         const SobolevPair& pair, PicardOptions opt = {}) {
  require(T0 > 0 && Tmax >= T0, "contraction_horizon: need 0 < T0 <= Tmax");
  HorizonReport h;
  for (double T = T0; T <= Tmax * (1 + 1e-12); T *= 2) h.Ts.push_back(T);
  h.contraction.resize(h.Ts.size());
  h.diverged.resize(h.Ts.size());
  parallel_for(h.Ts.size(), [&](std::size_t i) {
    const auto r = picard_iterate(data, h.Ts[i], K, pair, opt);
    h.contraction[i] = r.contraction(2);
    h.diverged[i] = r.diverged;
  });
  for (std::size_t i = 0; i < h.Ts.size(); ++i)
    if (h.diverged[i] || h.contraction[i] > 0.5) {
      h.first_failure = h.Ts[i];
      break;
    }
  return h;
}

// ---------------------------------------------------------------- Lipschitz

struct LipschitzPoint {
  double delta = 0;
  double data_diff = 0;      // ||delta e||_{H^s x H^sigma x H^{sigma-1}}
  double solution_diff = 0;  // Z^{s,sigma}_T distance of the two solutions
  double ratio = 0;
  bool equal = false;        // delta = 0: identical runs, ratio not formed
};

struct LipschitzOptions {
  int iterations = 30;
  double tolerance = 1e-15;  // Picard stops once d_k <= tolerance * Z norm
  PicardOptions picard{};
};

/// Solutions for data and data + delta * direction, both by Picard iteration
/// to convergence, for each delta. Aborts (NumericalError) when either run
/// fails to contract by 1/2.
inline std::vector<LipschitzPoint> lipschitz_probe(const ZakharovState& data, const ZakharovState& direction,
                                                   const std::vector<double>& deltas, double T,
                                                   const SobolevPair& pair, LipschitzOptions opt = {}) {
  pair.require_admissible("lipschitz_probe");
  validate(data);
  validate(direction);
  require(*data.grid() == *direction.grid(), "lipschitz_probe: data and direction on different grids");
  require(!deltas.empty(), "lipschitz_probe: empty delta sweep");
  for (double d : deltas) require(d >= 0 && std::isfinite(d), "lipschitz_probe: delta must be >= 0");
  auto popt = opt.picard;
  popt.stop_below = opt.tolerance;
  auto solve = [&](const ZakharovState& d, const std::string& which) {
    auto r = picard_iterate(d, T, opt.iterations, pair, popt);
    if (r.diverged || r.contraction(2) > 0.5) {
      std::ostringstream os;
      os << "lipschitz_probe: " << which << " run does not contract (factor " << r.contraction(2)
         << (r.diverged ? ", diverged" : "") << ")";
      throw NumericalError(os.str());
    }
    return r;
  };
  const auto base = solve(data, "base");
  const double unit = data_norm(direction, pair);
  require(unit > 0, "lipschitz_probe: zero direction");
  detail::Engine e(data.grid());
  std::vector<LipschitzPoint> out(deltas.size());
  parallel_for(deltas.size(), [&](std::size_t i) {
    LipschitzPoint lp;
    lp.delta = deltas[i];
    if (lp.delta == 0) {
      lp.equal = true;
      out[i] = lp;
      return;
    }
    auto d = data;
    for (auto [dst, src] : {std::pair{&d.u, &direction.u}, {&d.n, &direction.n}, {&d.nt, &direction.nt}}) {
      const auto a = src->physical();
      for (std::size_t k = 0; k < dst->size(); ++k) dst->values[k] += lp.delta * a.values[k];
    }
    std::ostringstream tag;
    tag << "perturbed (delta = " << lp.delta << ")";
    const auto pert = solve(d, tag.str());
    std::vector<detail::Vec> DU, DP;
    for (std::size_t j = 0; j < base.last.frames.size(); ++j) {
      detail::Vec U1, P1, U2, P2;
      e.to_fourier(pert.last.frames[j], U1, P1);
      e.to_fourier(base.last.frames[j], U2, P2);
      for (std::size_t q = 0; q < U1.size(); ++q) {
        U1[q] -= U2[q];
        P1[q] -= P2[q];
      }
      DU.push_back(std::move(U1));
      DP.push_back(std::move(P1));
    }
    lp.data_diff = lp.delta * unit;
    lp.solution_diff = detail::z_norm_nodes(e, DU, DP, pair.s, pair.sigma);
    lp.ratio = lp.solution_diff / lp.data_diff;
    out[i] = lp;
  });
  return out;
}

/// Largest relative differences of the n-trajectory and the |u|-trajectory
/// between data and data with u replaced by e^{i theta0} u.
inline std::pair<double, double> gauge_defect(const ZakharovState& data, double theta0, double T, double dt,
                                              StepOptions opt = {}) {
  auto rot = data;
  for (auto& v : rot.u.values) v *= std::polar(1.0, theta0);
  const auto a = evolve(data, T, dt, opt), b = evolve(rot, T, dt, opt);
  double dn = 0, du = 0, sn = 0, su = 0;
  for (std::size_t j = 0; j < a.frames.size(); ++j) {
    const auto& fa = a.frames[j];
    const auto& fb = b.frames[j];
    for (std::size_t k = 0; k < fa.n.size(); ++k) {
      dn = std::max(dn, std::abs(fa.n.values[k] - fb.n.values[k]));
      sn = std::max(sn, std::abs(fa.n.values[k]));
      du = std::max(du, std::abs(std::abs(fa.u.values[k]) - std::abs(fb.u.values[k])));
      su = std::max(su, std::abs(fa.u.values[k]));
    }
  }
  return {sn > 0 ? dn / sn : dn, su > 0 ? du / su : du};
}

// ---------------------------------------------------------------- dump

// Trajectory file: char[8] "TLTRAJ01", int32 frame count, then per frame
// int32 time index, float64 time, and u, n, nt as field blobs with t extent 1.
inline constexpr char trajectory_magic[8] = {'T', 'L', 'T', 'R', 'A', 'J', '0', '1'};

inline void write_trajectory(const std::string& path, const ZakharovTrajectory& tr) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("write_trajectory: cannot open " + path);
  os.write(trajectory_magic, 8);
  const std::int32_t count = static_cast<std::int32_t>(tr.frames.size());
  os.write(reinterpret_cast<const char*>(&count), 4);
  for (std::int32_t i = 0; i < count; ++i) {
    const auto& f = tr.frames[i];
    os.write(reinterpret_cast<const char*>(&i), 4);
    os.write(reinterpret_cast<const char*>(&f.t), 8);
    for (const auto* c : {&f.u, &f.n, &f.nt}) {
      const auto p = c->physical();
      decomp::FieldBlob b;
      const auto& nodes = p.grid->nodes();
      b.dims = {nodes[0], nodes[1], nodes[2], 1};
      b.lambda = p.grid->lambda();
      b.values = p.values;
      decomp::write_blob(os, b);
    }
  }
  if (!os) throw NumericalError("write_trajectory: write failed for " + path);
}

inline ZakharovTrajectory read_trajectory(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("read_trajectory: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, trajectory_magic, 8) != 0) throw InputError("read_trajectory: bad magic in " + path);
  std::int32_t count = 0;
  is.read(reinterpret_cast<char*>(&count), 4);
  if (!is || count < 0) throw InputError("read_trajectory: bad frame count in " + path);
  ZakharovTrajectory tr;
  std::shared_ptr<const Torus> g;
  for (std::int32_t i = 0; i < count; ++i) {
    std::int32_t idx = -1;
    double t = 0;
    is.read(reinterpret_cast<char*>(&idx), 4);
    is.read(reinterpret_cast<char*>(&t), 8);
    if (!is || idx != i) throw InputError("read_trajectory: bad time index in " + path);
    std::array<decomp::FieldBlob, 3> b;
    for (auto& x : b) {
      x = decomp::read_blob(is, path);
      if (x.dims[3] != 1 || x.side != Side::physical) throw InputError("read_trajectory: frame is not a spatial snapshot in " + path);
    }
    if (!g) g = std::make_shared<const Torus>(b[0].lambda, std::array<int, 3>{b[0].dims[0], b[0].dims[1], b[0].dims[2]});
    for (const auto& x : b)
      if (x.lambda != g->lambda() || x.dims[0] != g->nodes()[0] || x.dims[1] != g->nodes()[1] || x.dims[2] != g->nodes()[2])
        throw InputError("read_trajectory: frames on different grids in " + path);
    auto s = ZakharovState::zeros(g);
    s.t = t;
    s.u.values = std::move(b[0].values);
    s.n.values = std::move(b[1].values);
    s.nt.values = std::move(b[2].values);
    tr.frames.push_back(std::move(s));
  }
  if (is.peek() != std::char_traits<char>::eof()) throw InputError("read_trajectory: trailing bytes in " + path);
  return tr;
}

}  // namespace translab::zak
