#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "translab/core.hpp"
#include "translab/decomp/localize.hpp"
#include "translab/fft.hpp"

// Continuum engine for functions of the form g(xi, tau) = a(|xi|) b(tau + phi(|xi|))
// on R^3 x R. Convolutions of two such functions are again radial in xi, and the
// spatial integral reduces to the bipolar formula
//   int_{R^3} F(|xi1|, |xi - xi1|) dxi1 = (2 pi / s) int int F(r1, r2) r1 r2 dr1 dr2
// over the triangle |r1 - r2| <= s <= r1 + r2, s = |xi|. No Fourier lattice is
// involved, so there is no lattice floor and dyadic parameters up to N ~ 32 are
// cheap on one core.

namespace translab::tri {

using decomp::Space;

struct Band {
  double lo = 0, hi = 0;
};

/// Support of psi_v: [v/2, 2v], or [0, 2] for v = 1.
inline Band dyadic_band(long v) {
  require(is_dyadic(v), "dyadic_band: value must be a power of two >= 1");
  const double d = static_cast<double>(v);
  return v == 1 ? Band{0, 2} : Band{d / 2, 2 * d};
}

/// Piecewise-constant function on equal bins of [lo, hi). Inactive bins are
/// pinned to zero (they lie outside the allowed support).
struct Profile {
  double lo = 0, hi = 0;
  std::vector<double> w;
  std::vector<char> active;

  std::size_t bins() const { return w.size(); }
  double width() const { return (hi - lo) / static_cast<double>(w.size()); }
  double edge(std::size_t i) const { return lo + width() * static_cast<double>(i); }
  double operator()(double x) const {
    if (x < lo || x >= hi) return 0;
    const auto i = std::min(w.size() - 1, static_cast<std::size_t>((x - lo) / width()));
    return w[i];
  }
};

/// One factor a(|xi|) b(tau + phi(|xi|)). sign = -1 describes a complex-conjugated
/// factor: its transform is conj(g(-zeta)), so phi and the modulation flip.
struct RadialFactor {
  Space space = Space::S;
  int sign = 1;
  Band rad, mod;  // |xi| in rad, |tau + phi| in mod
  Profile a, b;   // a on rad, b on [-mod.hi, mod.hi)

  double phi(double r) const {
    const double base = space == Space::S ? r * r : (space == Space::Wplus ? r : -r);
    return sign * base;
  }
  double dphi_abs(double r) const { return space == Space::S ? 2 * r : 1.0; }
  /// r >= 0 with phi(r) = v, or -1 when there is none.
  double phi_inverse(double v) const {
    const double x = sign * v;
    if (space == Space::S) return x >= 0 ? std::sqrt(x) : -1;
    const double r = space == Space::Wplus ? x : -x;
    return r >= 0 ? r : -1;
  }
  double norm() const {
    double ra = 0, rb = 0;
    for (std::size_t i = 0; i < a.bins(); ++i) {
      const double r0 = a.edge(i), r1 = a.edge(i + 1);
      ra += a.w[i] * a.w[i] * (r1 * r1 * r1 - r0 * r0 * r0) / 3;
    }
    for (std::size_t i = 0; i < b.bins(); ++i) rb += b.w[i] * b.w[i] * b.width();
    return std::sqrt(4 * pi * ra * rb);
  }
};

/// Factor with unit-constant profiles on bins_a radial and bins_b modulation
/// bins. bins_b should be a multiple of 8 so the gap |c| < L/2 is a union of bins.
inline RadialFactor make_factor(Space space, long N, long L, int bins_a = 8, int bins_b = 8) {
  require(bins_a >= 1 && bins_b >= 2 && bins_b % 2 == 0, "make_factor: bad bin counts");
  RadialFactor f;
  f.space = space;
  f.rad = dyadic_band(N);
  f.mod = dyadic_band(L);
  f.a = {f.rad.lo, f.rad.hi, std::vector<double>(bins_a, 1.0), std::vector<char>(bins_a, 1)};
  f.b = {-f.mod.hi, f.mod.hi, std::vector<double>(bins_b, 0.0), std::vector<char>(bins_b, 0)};
  for (int i = 0; i < bins_b; ++i) {
    const double x0 = f.b.edge(i), x1 = f.b.edge(i + 1);
    const bool ok = x1 <= -f.mod.lo + 1e-12 || x0 >= f.mod.lo - 1e-12;
    f.b.active[i] = ok;
    f.b.w[i] = ok ? 1.0 : 0.0;
  }
  return f;
}

inline RadialFactor conjugate(RadialFactor f) {
  f.sign = -f.sign;
  std::reverse(f.b.w.begin(), f.b.w.end());
  std::reverse(f.b.active.begin(), f.b.active.end());
  return f;
}

/// Support of the wave factor f in the trilinear form; f itself is eliminated
/// by duality (the optimal f is the restricted partner G).
struct WaveTarget {
  Space space = Space::Wplus;
  Band rad, mod;
};

inline WaveTarget make_target(Space space, long N, long L) {
  require(space != Space::S, "make_target: the f factor lives on a wave modulation");
  return {space, dyadic_band(N), dyadic_band(L)};
}

struct RadialResolution {
  int nr = 64;         // radial quadrature nodes of the integrated factor
  int ns = 48;         // nodes in |xi| of the output
  int mod_steps = 8;   // modulation nodes per unit of the narrowest band half-width
};

/// Samples of a radial function of (|xi|, tau): row k holds tau = t0 + (n0[k] + j) h.
struct RadialField {
  std::vector<double> s, ws;  // nodes and weights 4 pi s^2 ds
  double h = 0, t0 = 0;
  std::vector<long> n0;
  std::vector<std::vector<double>> rows;

  double dot(const RadialField& o) const {
    double acc = 0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      double r = 0;
      const auto& x = rows[k];
      const auto& y = o.rows[k];
      for (std::size_t j = 0; j < x.size(); ++j) r += x[j] * y[j];
      acc += ws[k] * r;
    }
    return acc * h;
  }
  double sq_norm() const { return dot(*this); }
};

namespace detail {

// Midpoint samples of a profile on the grid c_j = -hi + (j + 1/2) h.
inline std::vector<double> sample_mod(const Profile& b, double h) {
  const long n = std::lround((b.hi - b.lo) / h);
  std::vector<double> v(n);
  for (long j = 0; j < n; ++j) v[j] = b(b.lo + (j + 0.5) * h);
  return v;
}

// out[n] = h sum_m x[m] y[n + m] for n in [-(nx-1), ny); returned with offset nx - 1.
// Direct for small inputs, FFT otherwise.
inline std::vector<double> correlate(const std::vector<double>& x, const std::vector<double>& y, double h) {
  const std::size_t nx = x.size(), ny = y.size(), nout = nx + ny - 1;
  std::vector<double> out(nout, 0.0);
  if (nx * ny <= 1u << 16) {
    for (std::size_t m = 0; m < nx; ++m) {
      if (x[m] == 0) continue;
      const double xm = x[m] * h;
      double* o = out.data() + (nx - 1 - m);
      for (std::size_t j = 0; j < ny; ++j) o[j] += xm * y[j];
    }
    return out;
  }
  std::size_t p = 1;
  while (p < nout) p <<= 1;
  Fft fft({static_cast<int>(p)});
  std::vector<cplx> X(p), Y(p);
  for (std::size_t m = 0; m < nx; ++m) X[nx - 1 - m] = x[m];
  for (std::size_t j = 0; j < ny; ++j) Y[j] = y[j];
  fft.forward(X);
  fft.forward(Y);
  for (std::size_t k = 0; k < p; ++k) X[k] *= Y[k];
  fft.inverse(X);
  const double scale = h / static_cast<double>(p);
  for (std::size_t n = 0; n < nout; ++n) out[n] = X[n].real() * scale;
  return out;
}

// Angular-integrated kernel on the u grid ub*h + m h, m in [0, nu):
//   D(s, u) = (2 pi / s) int drA aA(rA) aB(rB) rA rB / |phiB'(rB)|,
// where rB solves u = phiA(rA) + q phiB(rB) inside the triangle |rA - rB| <= s <= rA + rB.
inline std::vector<double> pair_kernel(const RadialFactor& A, const RadialFactor& B, int q, double s, double h,
                                       long ub, long nu, int nr) {
  std::vector<double> D(nu, 0.0);
  const double dr = (A.rad.hi - A.rad.lo) / nr;
  for (int i = 0; i < nr; ++i) {
    const double ra = A.rad.lo + (i + 0.5) * dr;
    const double wa = A.a(ra);
    if (wa == 0) continue;
    const double blo = std::max(std::abs(s - ra), B.rad.lo), bhi = std::min(s + ra, B.rad.hi);
    if (blo >= bhi) continue;
    const double pa = A.phi(ra);
    double u0 = pa + q * B.phi(blo), u1 = pa + q * B.phi(bhi);
    if (u0 > u1) std::swap(u0, u1);
    const long m0 = std::max<long>(0, static_cast<long>(std::ceil(u0 / h)) - ub);
    const long m1 = std::min<long>(nu - 1, static_cast<long>(std::floor(u1 / h)) - ub);
    const double c = 2 * pi / s * dr * wa * ra;
    for (long m = m0; m <= m1; ++m) {
      const double u = (ub + m) * h;
      const double rb = B.phi_inverse(q * (u - pa));
      if (rb < blo || rb > bhi) continue;
      D[m] += c * B.a(rb) * rb / B.dphi_abs(rb);
    }
  }
  return D;
}

// Range of u = phiA(rA) + q phiB(rB) over the triangle at fixed s.
inline std::pair<double, double> u_range(const RadialFactor& A, const RadialFactor& B, int q, double s, int nr) {
  double lo = 1e300, hi = -1e300;
  const double dr = (A.rad.hi - A.rad.lo) / nr;
  for (int i = 0; i < nr; ++i) {
    const double ra = A.rad.lo + (i + 0.5) * dr;
    const double blo = std::max(std::abs(s - ra), B.rad.lo), bhi = std::min(s + ra, B.rad.hi);
    if (blo >= bhi) continue;
    for (double rb : {blo, bhi}) {
      const double u = A.phi(ra) + q * B.phi(rb);
      lo = std::min(lo, u);
      hi = std::max(hi, u);
    }
  }
  return {lo, hi};
}

inline double mod_step(std::initializer_list<Band> bands, int steps) {
  double w = 1e300;
  for (const auto& b : bands) w = std::min(w, b.hi);
  return w / (2.0 * steps);
}

}  // namespace detail

/// Samples of g1 * g2 (space-time convolution).
inline RadialField bilinear_product(const RadialFactor& g1, const RadialFactor& g2, const RadialResolution& res) {
  // Integrate over the lower-frequency factor; solve for the other.
  const bool swap = g1.rad.hi > g2.rad.hi;
  const RadialFactor& A = swap ? g2 : g1;
  const RadialFactor& B = swap ? g1 : g2;
  const double h = detail::mod_step({g1.mod, g2.mod}, res.mod_steps);
  const auto b1 = detail::sample_mod(g1.b, h), b2 = detail::sample_mod(g2.b, h);
  // H = b1 * b2 on x = -hi1 - hi2 + (j + 1) h.
  std::vector<double> rb2(b2.rbegin(), b2.rend());
  const auto H = detail::correlate(rb2, b1, h);
  const double xH0 = -g1.mod.hi - g2.mod.hi + h;
  const long nH = static_cast<long>(H.size());

  RadialField out;
  out.h = h;
  out.t0 = xH0;
  const double slo = std::max({0.0, g2.rad.lo - g1.rad.hi, g1.rad.lo - g2.rad.hi}), shi = g1.rad.hi + g2.rad.hi;
  const double hs = (shi - slo) / res.ns;
  for (int k = 0; k < res.ns; ++k) {
    const double s = slo + (k + 0.5) * hs;
    out.s.push_back(s);
    out.ws.push_back(4 * pi * s * s * hs);
    const auto [ulo, uhi] = detail::u_range(A, B, 1, s, res.nr);
    if (ulo > uhi) {
      out.n0.push_back(0);
      out.rows.emplace_back();
      continue;
    }
    const long ub = static_cast<long>(std::floor(ulo / h)) - 1;
    const long nu = static_cast<long>(std::ceil(uhi / h)) - ub + 2;
    const auto D = detail::pair_kernel(A, B, 1, s, h, ub, nu, res.nr);
    // F(tau_n) = h sum_m D[m] H[n + m + ub], tau_n = xH0 + n h.
    const auto F = detail::correlate(D, H, h);
    out.n0.push_back(-(nu - 1) - ub);
    out.rows.push_back(F);
    (void)nH;
  }
  return out;
}

/// Samples of G(zeta) = int g1(zeta + zeta2) g2(zeta2) dzeta2 restricted to the
/// support of the wave factor; its norm is sup_f |I(f, g1, g2)| / ||f||.
inline RadialField trilinear_partner(const RadialFactor& g1, const RadialFactor& g2, const WaveTarget& f,
                                     const RadialResolution& res) {
  const double h = detail::mod_step({g1.mod, g2.mod, f.mod}, res.mod_steps);
  const auto b1 = detail::sample_mod(g1.b, h), b2 = detail::sample_mod(g2.b, h);
  // C(x) = int b1(x + y) b2(y) dy on x = -hi1 + hi2 + (j - (n2 - 1)) h.
  const auto C = detail::correlate(b2, b1, h);
  const long n2 = static_cast<long>(b2.size()), nC = static_cast<long>(C.size());
  const double xC0 = -g1.mod.hi + g2.mod.hi - (n2 - 1) * h;
  RadialFactor fshape;
  fshape.space = f.space;

  RadialField out;
  out.h = h;
  out.t0 = xC0;
  const double slo = std::max({f.rad.lo, 0.0, g2.rad.lo - g1.rad.hi, g1.rad.lo - g2.rad.hi});
  const double shi = std::min(f.rad.hi, g1.rad.hi + g2.rad.hi);
  require(slo < shi, "trilinear_partner: wave support misses the difference set");
  const double hs = (shi - slo) / res.ns;
  for (int k = 0; k < res.ns; ++k) {
    const double s = slo + (k + 0.5) * hs;
    out.s.push_back(s);
    out.ws.push_back(4 * pi * s * s * hs);
    // tau window: |tau + phi_f(s)| in f.mod, tau = xC0 + n h.
    const double pf = fshape.phi(s);
    const long nlo = static_cast<long>(std::ceil((-pf - f.mod.hi - xC0) / h));
    const long nhi = static_cast<long>(std::floor((-pf + f.mod.hi - xC0) / h));
    const long nwin = nhi - nlo + 1;
    std::vector<double> row(std::max<long>(nwin, 0), 0.0);
    out.n0.push_back(nlo);
    // G(tau_n) = h sum_m D[m] C[n + m + ub]; only u with n + m + ub in [0, nC) matter.
    auto [ulo, uhi] = detail::u_range(g1, g2, -1, s, res.nr);
    ulo = std::max(ulo, (-nhi) * h - h);
    uhi = std::min(uhi, (nC - nlo) * h + h);
    if (nwin > 0 && ulo <= uhi) {
      const long ub = static_cast<long>(std::floor(ulo / h)) - 1;
      const long nu = static_cast<long>(std::ceil(uhi / h)) - ub + 2;
      const auto D = detail::pair_kernel(g1, g2, -1, s, h, ub, nu, res.nr);
      for (long j = 0; j < nwin; ++j) {
        const long n = nlo + j;
        const double c = std::abs(xC0 + n * h + pf);
        if (c < f.mod.lo || c > f.mod.hi) continue;
        double acc = 0;
        const long m0 = std::max<long>(0, -n - ub), m1 = std::min<long>(nu, nC - n - ub);
        for (long m = m0; m < m1; ++m) acc += D[m] * C[n + m + ub];
        row[j] = acc * h;
      }
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

/// Output of a multilinear map whose norm, divided by the factor norms, is the
/// quotient being maximised.
using RadialMap = std::function<RadialField(const std::vector<RadialFactor>&)>;

struct RadialSearch {
  int trials = 64;
  int sweeps = 20;
  double tolerance = 1e-4;  // relative quotient gain below which sweeps stop
  std::uint64_t seed = 0;
};

struct RadialOutcome {
  double best_trial = 0;   // max quotient over the random trials
  double quotient = 0;     // after alternating maximisation
  int sweeps_done = 0;
  std::vector<RadialFactor> factors;
};

inline double radial_quotient(const RadialMap& map, const std::vector<RadialFactor>& fs) {
  double den = 1;
  for (const auto& f : fs) den *= f.norm();
  require(den > 0, "radial_quotient: zero factor");
  return std::sqrt(map(fs).sq_norm()) / den;
}

namespace detail {

// Top generalised eigenvector of (M, diag(nrm)) restricted to the active bins.
inline std::vector<double> best_weights(const Eigen::MatrixXd& M, const std::vector<double>& nrm) {
  const auto n = static_cast<Eigen::Index>(nrm.size());
  Eigen::MatrixXd S(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) S(i, j) = M(i, j) / std::sqrt(nrm[i] * nrm[j]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  const Eigen::VectorXd v = es.eigenvectors().col(n - 1);
  std::vector<double> w(n);
  for (Eigen::Index i = 0; i < n; ++i) w[i] = std::abs(v(i)) / std::sqrt(nrm[i]);
  return w;
}

// Replace one profile by its best response with the others frozen.
inline void improve_profile(const RadialMap& map, std::vector<RadialFactor>& fs, std::size_t k, bool radial) {
  Profile& p = radial ? fs[k].a : fs[k].b;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < p.bins(); ++i)
    if (p.active[i]) idx.push_back(i);
  if (idx.empty()) return;
  const std::vector<double> saved = p.w;
  std::vector<RadialField> outs;
  std::vector<double> nrm;
  for (std::size_t i : idx) {
    std::fill(p.w.begin(), p.w.end(), 0.0);
    p.w[i] = 1.0;
    outs.push_back(map(fs));
    const double x0 = p.edge(i), x1 = p.edge(i + 1);
    nrm.push_back(radial ? (x1 * x1 * x1 - x0 * x0 * x0) / 3 : x1 - x0);
  }
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd M(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) M(i, j) = M(j, i) = outs[i].dot(outs[j]);
  if (M.norm() == 0) {
    p.w = saved;
    return;
  }
  const auto w = best_weights(M, nrm);
  std::fill(p.w.begin(), p.w.end(), 0.0);
  for (std::size_t t = 0; t < idx.size(); ++t) p.w[idx[t]] = w[t];
}

}  // namespace detail

/// Random nonnegative trials (bin weights are moduli of complex Gaussians)
/// followed by alternating best responses from the best trial. Each sweep
/// updates every profile once and cannot decrease the quotient.
inline RadialOutcome maximize_radial(const RadialMap& map, std::vector<RadialFactor> fs, const RadialSearch& opt) {
  require(opt.trials >= 1, "maximize_radial: need at least one trial");
  RadialOutcome out;
  std::vector<RadialFactor> best = fs;
  for (int t = 0; t < opt.trials; ++t) {
    auto rng = stream_rng(opt.seed, static_cast<std::uint64_t>(t));
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto draw = [&](Profile& p) {
      for (std::size_t i = 0; i < p.bins(); ++i) {
        const double x = gauss(rng), y = gauss(rng);
        p.w[i] = p.active[i] ? std::hypot(x, y) : 0.0;
      }
    };
    for (auto& f : fs) {
      draw(f.a);
      draw(f.b);
    }
    const double q = radial_quotient(map, fs);
    if (q > out.best_trial) {
      out.best_trial = q;
      best = fs;
    }
  }
  double q = out.best_trial;
  for (int sweep = 0; sweep < opt.sweeps; ++sweep) {
    for (std::size_t k = 0; k < best.size(); ++k) {
      detail::improve_profile(map, best, k, true);
      detail::improve_profile(map, best, k, false);
    }
    const double next = radial_quotient(map, best);
    ++out.sweeps_done;
    const bool small = next - q <= opt.tolerance * q;
    q = std::max(q, next);
    if (small) break;
  }
  out.quotient = q;
  out.factors = best;
  return out;
}

}  // namespace translab::tri
