#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "translab/core.hpp"
#include "translab/decomp/localize.hpp"
#include "translab/fft.hpp"
#include "translab/trilinear/radial.hpp"

// Direct Fourier-lattice engine for the bilinear estimates: supports are sets
// of lattice points (h m, ht t), the product is formed in physical space on a
// box large enough that the convolution does not wrap, and the quotient is
// rescaled by the square root of the cell volume so that it approximates the
// continuum ||u v|| / (||u|| ||v||). Only small blocks fit, so this engine is
// used for the cube-restricted estimate and for exact symmetry checks.

namespace translab::tri {

using Point4 = std::array<int, 4>;

struct LatticeSupport {
  double h = 0.5, ht = 0.5;
  std::vector<Point4> pts;  // canonical order; draws follow it
  bool reflected = false;   // support and coefficients of the conjugate

  Point4 at(std::size_t i) const {
    Point4 p = pts[i];
    if (reflected)
      for (int& x : p) x = -x;
    return p;
  }
};

/// Axis-aligned cube of side d centred at c (d = 0: no restriction).
struct Cube {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  double d = 0;
  bool contains(const Eigen::Vector3d& x) const {
    return d <= 0 || (x - c).cwiseAbs().maxCoeff() <= d / 2;
  }
};

/// Lattice points of the dyadic block {|xi| in band N, |modulation| in band L}.
inline LatticeSupport lattice_block(Space space, long N, long L, double h, double ht, const Cube& cube = {}) {
  require(h > 0 && ht > 0, "lattice_block: spacings must be positive");
  const Band rad = dyadic_band(N), mod = dyadic_band(L);
  LatticeSupport s;
  s.h = h;
  s.ht = ht;
  const int m = static_cast<int>(std::floor(rad.hi / h));
  for (int a = -m; a <= m; ++a)
    for (int b = -m; b <= m; ++b)
      for (int c = -m; c <= m; ++c) {
        const Eigen::Vector3d xi(a * h, b * h, c * h);
        const double r = xi.norm();
        if (r < rad.lo || r > rad.hi || !cube.contains(xi)) continue;
        // tau with |modulation(r, tau)| in [mod.lo, mod.hi]
        const double centre = -decomp::modulation(space, r, 0.0);
        const int t0 = static_cast<int>(std::ceil((centre - mod.hi) / ht));
        const int t1 = static_cast<int>(std::floor((centre + mod.hi) / ht));
        for (int t = t0; t <= t1; ++t) {
          const double w = std::abs(decomp::modulation(space, r, t * ht));
          if (w >= mod.lo && w <= mod.hi) s.pts.push_back({a, b, c, t});
        }
      }
  return s;
}

inline LatticeSupport reflect(LatticeSupport s) {
  s.reflected = !s.reflected;
  return s;
}

/// The map (a, b) -> a * b between two supports, evaluated on a padded box.
class LatticeBilinear {
 public:
  LatticeBilinear(LatticeSupport u, LatticeSupport v) : u_(std::move(u)), v_(std::move(v)) {
    require(!u_.pts.empty() && !v_.pts.empty(), "LatticeBilinear: empty support");
    require(u_.h == v_.h && u_.ht == v_.ht, "LatticeBilinear: supports on different lattices");
    Point4 ulo, uhi, vlo, vhi;
    bounds(u_, ulo, uhi);
    bounds(v_, vlo, vhi);
    dims_.resize(4);
    for (int a = 0; a < 4; ++a) dims_[a] = (uhi[a] - ulo[a] + 1) + (vhi[a] - vlo[a] + 1) - 1;
    total_ = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2] * dims_[3];
    place(u_, ulo, upos_);
    place(v_, vlo, vpos_);
    cell_ = u_.h * u_.h * u_.h * u_.ht;
  }

  const LatticeSupport& u() const { return u_; }
  const LatticeSupport& v() const { return v_; }
  std::size_t box_size() const { return total_; }

  /// sqrt(cell) ||a * b|| / (||a|| ||b||); coefficients are listed in the
  /// canonical order of each support and conjugated on reflected ones.
  double quotient(const std::vector<cplx>& a, const std::vector<cplx>& b) const {
    const auto U = physical(a, u_, upos_), V = physical(b, v_, vpos_);
    double s = 0;
    for (std::size_t k = 0; k < total_; ++k) s += std::norm(U[k] * V[k]);
    const double conv = std::sqrt(s / static_cast<double>(total_));
    return std::sqrt(cell_) * conv / (l2(a) * l2(b));
  }

  /// Power-iteration steps on the first (which = 0) or second argument with
  /// the other frozen; each step cannot decrease the quotient.
  void improve(std::vector<cplx>& a, std::vector<cplx>& b, int which, int steps) const {
    auto& x = which == 0 ? a : b;
    const auto& xs = which == 0 ? u_ : v_;
    const auto& xpos = which == 0 ? upos_ : vpos_;
    const auto Y = which == 0 ? physical(b, v_, vpos_) : physical(a, u_, upos_);
    Fft fft(dims_);
    for (int it = 0; it < steps; ++it) {
      auto X = physical(x, xs, xpos);
      for (std::size_t k = 0; k < total_; ++k) X[k] *= std::norm(Y[k]);
      fft.forward(X);
      for (std::size_t i = 0; i < x.size(); ++i) {
        const cplx c = X[xpos[i]];
        x[i] = xs.reflected ? std::conj(c) : c;
      }
      const double n = l2(x);
      if (n == 0) return;
      for (auto& c : x) c /= n;
    }
  }

 private:
  static void bounds(const LatticeSupport& s, Point4& lo, Point4& hi) {
    lo.fill(1 << 30);
    hi.fill(-(1 << 30));
    for (std::size_t i = 0; i < s.pts.size(); ++i) {
      const Point4 p = s.at(i);
      for (int a = 0; a < 4; ++a) {
        lo[a] = std::min(lo[a], p[a]);
        hi[a] = std::max(hi[a], p[a]);
      }
    }
  }
  void place(const LatticeSupport& s, const Point4& lo, std::vector<std::size_t>& pos) const {
    pos.resize(s.pts.size());
    for (std::size_t i = 0; i < s.pts.size(); ++i) {
      const Point4 p = s.at(i);
      std::size_t q = 0;
      for (int a = 0; a < 4; ++a) q = q * dims_[a] + static_cast<std::size_t>(p[a] - lo[a]);
      pos[i] = q;
    }
  }
  std::vector<cplx> physical(const std::vector<cplx>& c, const LatticeSupport& s,
                             const std::vector<std::size_t>& pos) const {
    require(c.size() == pos.size(), "LatticeBilinear: one coefficient per support point");
    std::vector<cplx> X(total_, cplx(0));
    for (std::size_t i = 0; i < c.size(); ++i) X[pos[i]] = s.reflected ? std::conj(c[i]) : c[i];
    Fft(dims_).inverse(X);
    return X;
  }
  static double l2(const std::vector<cplx>& c) {
    double s = 0;
    for (const auto& x : c) s += std::norm(x);
    return std::sqrt(s);
  }

  LatticeSupport u_, v_;
  std::vector<int> dims_;
  std::size_t total_ = 0;
  std::vector<std::size_t> upos_, vpos_;
  double cell_ = 0;
};

struct LatticeOutcome {
  double best_trial = 0;
  double quotient = 0;
  int sweeps_done = 0;
};

/// Random nonnegative trials then alternating power steps from the best one.
/// Draws follow the canonical support order, so a reflected (conjugated)
/// support sees the conjugate of the same fields.
inline LatticeOutcome maximize_lattice(const LatticeBilinear& op, const RadialSearch& opt, int power_steps = 2) {
  require(opt.trials >= 1, "maximize_lattice: need at least one trial");
  LatticeOutcome out;
  std::vector<cplx> a(op.u().pts.size()), b(op.v().pts.size()), ba, bb;
  for (int t = 0; t < opt.trials; ++t) {
    auto rng = stream_rng(opt.seed, static_cast<std::uint64_t>(t));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& c : a) c = std::hypot(gauss(rng), gauss(rng));
    for (auto& c : b) c = std::hypot(gauss(rng), gauss(rng));
    const double q = op.quotient(a, b);
    if (q > out.best_trial) {
      out.best_trial = q;
      ba = a;
      bb = b;
    }
  }
  double q = out.best_trial;
  for (int s = 0; s < opt.sweeps; ++s) {
    op.improve(ba, bb, 0, power_steps);
    op.improve(ba, bb, 1, power_steps);
    const double next = op.quotient(ba, bb);
    ++out.sweeps_done;
    const bool small = next - q <= opt.tolerance * q;
    q = std::max(q, next);
    if (small) break;
  }
  out.quotient = q;
  return out;
}

}  // namespace translab::tri
