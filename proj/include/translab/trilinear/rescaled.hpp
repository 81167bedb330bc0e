#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>

#include "translab/core.hpp"
#include "translab/decomp/caps.hpp"
#include "translab/geometry/patch.hpp"
#include "translab/surface_conv.hpp"

// High-high interactions with angular localisation, after the parabolic scaling
// (xi, tau) -> (N1 xi, N1^2 tau). In the rescaled frame the two Schroedinger
// factors live on paraboloid patches tau = -|xi|^2 and tau = +|xi|^2 (the second
// factor reflected) over cubes of side ~1/A at unit distance from the origin,
// and the wave factor on the flattened cone tau = -+|xi| / N1 (W+ / W-). The trilinear form
// over N1^{-2}-neighbourhoods is eps^{1/2} times the surface form, and undoing
// the scaling gives
//   |I| <= N1^{-1/2} (L1 L2 L)^{1/2} C(N1, A)
// with C the sharp constant of the surface triple. C is measured on a fixed
// resolvable slab width; N1^{-2} itself is out of reach on a desk lattice.

namespace translab::tri {

using geometry::GraphPatch;
using geometry::Lattice;

struct RescaledLattice {
  int nodes = 12;    // per axis on each Schroedinger cube
  int nodes_f = 14;  // per axis on the wave patch
};

/// Centres of caps j1, j2 of the cap set for A.
inline std::array<Eigen::Vector3d, 2> cap_pair(long A, long j1, long j2) {
  const decomp::CapSet caps(A);
  require(j1 >= 0 && j2 >= 0 && j1 < static_cast<long>(caps.size()) && j2 < static_cast<long>(caps.size()),
          "cap_pair: cap index outside the cap set");
  return {caps.center(j1), caps.center(j2)};
}

/// tau = sign |xi| / N1 (the cone formula only covers the upper sheet).
inline geometry::GraphFormula signed_cone(double n1, int sign) {
  require(n1 > 0 && (sign == 1 || sign == -1), "signed_cone: need N1 > 0 and sign +-1");
  if (sign > 0) return geometry::cone_formula(n1, 0.0);
  geometry::GraphFormula f;
  f.id = "cone-";
  f.codim = 1;
  f.phi = [n1](const geometry::VectorXd& x) { return geometry::VectorXd::Constant(1, -x.norm() / n1).eval(); };
  f.dphi = [n1](const geometry::VectorXd& x) -> geometry::MatrixXd {
    const double r = x.norm();
    if (r == 0) return geometry::MatrixXd::Zero(1, x.size());
    return geometry::MatrixXd(-x.transpose() / (n1 * r));
  };
  return f;
}

/// The rescaled surface triple for caps (j1, j2) of size 1/A at frequency N1.
/// The third surface carries zeta1 - zeta2, so W+ (tau = -|xi|) is the lower
/// cone sheet.
inline std::array<GraphPatch, 3> rescaled_triple(long N1, long A, long j1, long j2, int wave_sign,
                                                 const RescaledLattice& lat = {}) {
  require(N1 >= 2 && A >= 1, "rescaled_triple: need N1 >= 2, A >= 1");
  require(lat.nodes >= 2 && lat.nodes_f >= 2, "rescaled_triple: at least 2 nodes per axis");
  const double w = 0.25 / static_cast<double>(A);  // cube half-width
  const auto [e1, e2] = cap_pair(A, j1, j2);
  const Eigen::Vector3d c1 = e1, c2 = -e2, c3 = c1 + c2;
  require(c3.cwiseAbs().maxCoeff() > 2 * w, "rescaled_triple: wave patch would contain the cone vertex");
  auto box = [](const Eigen::Vector3d& c, double half, int n) {
    return Lattice({c[0] - half, c[1] - half, c[2] - half}, {c[0] + half, c[1] + half, c[2] + half}, {n, n, n});
  };
  const GraphPatch::Params p{1.0, 1.0, 4 * w};
  const Eigen::MatrixXd G = Eigen::MatrixXd::Identity(4, 4);
  return {GraphPatch::from_formula(4, box(c1, w, lat.nodes), geometry::paraboloid_formula(-1.0), G, p),
          GraphPatch::from_formula(4, box(c2, w, lat.nodes), geometry::paraboloid_formula(1.0), G, p),
          GraphPatch::from_formula(4, box(c3, 2 * w, lat.nodes_f),
                                   signed_cone(static_cast<double>(N1), -wave_sign), G, p)};
}

struct RescaledReport {
  long N1 = 0, A = 0;
  double eps = 0, h = 0;
  double constant = 0;
  bool converged = false;
};

/// Sharp constant of the rescaled triple on slab width eps (0: 2.5 h).
inline RescaledReport rescaled_constant(long N1, long A, long j1, long j2, int wave_sign, double eps = 0,
                                        const RescaledLattice& lat = {}, const conv::ExtremizerOptions& opt = {}) {
  const auto t = rescaled_triple(N1, A, j1, j2, wave_sign, lat);
  RescaledReport r;
  r.N1 = N1;
  r.A = A;
  r.h = conv::normal_resolution(t[0], t[1], t[2]);
  r.eps = eps > 0 ? eps : 2.5 * r.h;
  const auto slab = conv::SlabTensor::build(t[0], t[1], t[2], r.eps);
  const auto ex = conv::maximize_form(slab, opt);
  r.constant = ex.quotient;
  r.converged = ex.converged;
  return r;
}

}  // namespace translab::tri
