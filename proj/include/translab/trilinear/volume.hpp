#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "translab/core.hpp"
#include "translab/decomp/grid.hpp"
#include "translab/trilinear/lattice.hpp"

namespace translab::tri {

/// Supports of the cube-restricted wave-Schroedinger product: the wave factor
/// on {|xi| in band N, |tau +- |xi|| in band L} inside a cube of side d
/// centred at (N, 0, 0), the Schroedinger factor on {|xi| in band N1,
/// |tau + |xi|^2| in band L1}. h is the xi1 lattice step (0: d / 48).
struct VolumeParams {
  Space space = Space::Wplus;
  long N = 4, L = 1;
  long N1 = 4, L1 = 1;
  double d = 1;
  double h = 0;

  double step() const { return h > 0 ? h : d / 48; }
  Cube cube() const { return {Eigen::Vector3d(static_cast<double>(N), 0, 0), d}; }
};

namespace detail {

// Union of the intervals {x : |x| in band}.
inline std::vector<Band> signed_band(long L) {
  const Band b = dyadic_band(L);
  if (b.lo == 0) return {{-b.hi, b.hi}};
  return {{-b.hi, -b.lo}, {b.lo, b.hi}};
}

// K(x) = |{a in A : x - a in B}| for unions of intervals A, B.
inline double overlap_kernel(const std::vector<Band>& A, const std::vector<Band>& B, double x) {
  double s = 0;
  for (const auto& a : A)
    for (const auto& b : B) s += std::max(0.0, std::min(a.hi, x - b.lo) - std::max(a.lo, x - b.hi));
  return s;
}

// tau-shift c(xi1) = +-|xi1| + |xi - xi1|^2 of every admissible xi1 lattice point.
inline std::vector<double> volume_shifts(const Eigen::Vector3d& xi, const VolumeParams& p) {
  const double h = p.step();
  const Band rf = dyadic_band(p.N), rg = dyadic_band(p.N1);
  const Cube cube = p.cube();
  const int m = static_cast<int>(std::ceil(p.d / (2 * h)));
  const int sgn = p.space == Space::Wplus ? 1 : -1;
  std::vector<double> out;
  for (int a = -m; a < m; ++a)
    for (int b = -m; b < m; ++b)
      for (int c = -m; c < m; ++c) {
        const Eigen::Vector3d x1 = cube.c + h * Eigen::Vector3d(a + 0.5, b + 0.5, c + 0.5);
        if (!cube.contains(x1)) continue;
        const double r1 = x1.norm(), r2 = (xi - x1).norm();
        if (r1 < rf.lo || r1 > rf.hi || r2 < rg.lo || r2 > rg.hi) continue;
        out.push_back(sgn * r1 + r2 * r2);
      }
  return out;
}

}  // namespace detail

/// |E(xi, tau)| for E = {(xi1, tau1) in supp f : (xi - xi1, tau - tau1) in supp g}:
/// a lattice sum over xi1 with the tau1 measure exact. With a = tau1 +- |xi1|
/// and b = tau - tau1 + |xi - xi1|^2 the tau1 measure is K(tau + c(xi1)),
/// K the overlap of the two modulation sets.
inline double volume_oracle(const Eigen::Vector3d& xi, double tau, const VolumeParams& p) {
  const auto A = detail::signed_band(p.L), B = detail::signed_band(p.L1);
  const double h = p.step();
  double s = 0;
  for (double c : detail::volume_shifts(xi, p)) s += detail::overlap_kernel(A, B, tau + c);
  return s * h * h * h;
}

/// sup over tau of |E(xi, tau)|, through a histogram of the shifts c(xi1)
/// with bins far finer than the modulation bands.
inline double volume_sup_tau(const Eigen::Vector3d& xi, const VolumeParams& p) {
  const auto shifts = detail::volume_shifts(xi, p);
  if (shifts.empty()) return 0;
  const auto A = detail::signed_band(p.L), B = detail::signed_band(p.L1);
  const double w = static_cast<double>(std::min(p.L, p.L1)) / 64;
  const double reach = 2.0 * (p.L + p.L1);  // K vanishes beyond
  const auto [cmin, cmax] = std::minmax_element(shifts.begin(), shifts.end());
  const long nb = static_cast<long>((*cmax - *cmin) / w) + 1;
  std::vector<double> hist(nb, 0.0);
  for (double c : shifts) hist[static_cast<long>((c - *cmin) / w)] += 1;
  const long kr = static_cast<long>(reach / w) + 2;
  std::vector<double> kern(2 * kr + 1);
  for (long j = -kr; j <= kr; ++j) kern[j + kr] = detail::overlap_kernel(A, B, j * w);
  double best = 0;
  // tau = -(cmin + (i + 1/2) w) + j w; sum over bins of K(tau + c_bin).
  for (long i = -kr; i < nb + kr; ++i) {
    double s = 0;
    for (long b = std::max(0L, i - kr); b < std::min(nb, i + kr + 1); ++b) s += hist[b] * kern[b - i + kr];
    best = std::max(best, s);
  }
  const double h = p.step();
  return best * h * h * h;
}

/// sup |E| over xi at distance 3/4, 1 and 3/2 times N1 from the cube centre
/// in 26 lattice directions, and over tau.
inline double volume_sup(const VolumeParams& p) {
  double best = 0;
  const Eigen::Vector3d c = p.cube().c;
  for (double r : {0.75, 1.0, 1.5})
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        for (int e = -1; e <= 1; ++e) {
          if (a == 0 && b == 0 && e == 0) continue;
          const Eigen::Vector3d dir = Eigen::Vector3d(a, b, e).normalized();
          best = std::max(best, volume_sup_tau(c + r * static_cast<double>(p.N1) * dir, p));
        }
  return best;
}

/// min(d, N1)^2 N1^{-1} min(L, L1) max(L, L1).
inline double volume_predicted(const VolumeParams& p) {
  const double n1 = static_cast<double>(p.N1), m = std::min(p.d, n1);
  return m * m / n1 * static_cast<double>(std::min(p.L, p.L1) * std::max(p.L, p.L1));
}

/// ||xi1|^2 - |xi2|^2 + sign |xi1 - xi2||.
inline double resonance_gate(const Eigen::Vector3d& xi1, const Eigen::Vector3d& xi2, int sign) {
  require(sign == 1 || sign == -1, "resonance_gate: sign must be +1 or -1");
  return std::abs(xi1.squaredNorm() - xi2.squaredNorm() + sign * (xi1 - xi2).norm());
}

struct ResonanceSweep {
  long N1 = 1, N2 = 1;
  int sign = 1;
  bool core_shell = false;
  double lattice_step = 0;
  std::size_t pairs = 0;
  double min_value = 0;
  Eigen::Vector3d w1 = Eigen::Vector3d::Zero(), w2 = Eigen::Vector3d::Zero();  // minimiser
  double threshold = 0;  // N2^2 / 4
  bool pass = false;
};

/// Exhaustive minimum of the resonance over all lattice pairs of a torus with
/// `nodes` points per axis fitted to resolve |xi| <= 2 N2. xi1 ranges over
/// the frequency block of N1 and xi2 over that of N2; with core_shell the
/// ranges are |xi1| <= N1 and N2 <= |xi2| <= 2 N2 instead.
inline ResonanceSweep resonance_sweep(long N1, long N2, int sign, int nodes = 32, bool core_shell = false) {
  require(is_dyadic(N1) && is_dyadic(N2) && N1 <= N2, "resonance_sweep: need dyadic N1 <= N2");
  const decomp::Torus torus(nodes / (4.0 * static_cast<double>(N2)), {nodes, nodes, nodes});
  const Band b1 = core_shell ? Band{0, static_cast<double>(N1)} : dyadic_band(N1);
  const Band b2 = core_shell ? Band{static_cast<double>(N2), 2.0 * N2} : dyadic_band(N2);
  std::vector<Eigen::Vector3d> s1, s2;
  for (std::size_t k = 0; k < torus.size(); ++k) {
    const Eigen::Vector3d xi = torus.wavevector(k);
    const double r = xi.norm();
    if (r >= b1.lo && r <= b1.hi) s1.push_back(xi);
    if (r >= b2.lo && r <= b2.hi) s2.push_back(xi);
  }
  ResonanceSweep out;
  out.N1 = N1;
  out.N2 = N2;
  out.sign = sign;
  out.core_shell = core_shell;
  out.lattice_step = 1 / torus.lambda();
  out.threshold = static_cast<double>(N2 * N2) / 4;
  out.min_value = 1e300;
  for (const auto& x1 : s1)
    for (const auto& x2 : s2) {
      const double v = resonance_gate(x1, x2, sign);
      ++out.pairs;
      if (v < out.min_value) {
        out.min_value = v;
        out.w1 = x1;
        out.w2 = x2;
      }
    }
  require(out.pairs > 0, "resonance_sweep: empty frequency blocks on this lattice");
  out.pass = out.min_value >= out.threshold;
  return out;
}

}  // namespace translab::tri
