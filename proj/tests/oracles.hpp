#pragma once

// Independent oracles shared by the unit tests and the acceptance binary.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "translab/surface_conv.hpp"
#include "translab/trilinear.hpp"

namespace oracle {

using namespace translab;
using conv::TiltedPlaneLattice;
using geometry::GraphPatch;
using geometry::Lattice;
using Triple = std::array<GraphPatch, 3>;
using Eigen::MatrixXd;

/// Coordinate-plane triple x1 = 0, x2 = 0, x3 = z0 with small lattices:
/// first and second on [0,1]^2, third on [0,1]^2 at height z0.
inline Triple small_coordinate_triple(int n1, int n2c, int n2d, int n3, double z0 = 1.0) {
  TiltedPlaneLattice lat{n1, n2c, n2d, n3};
  auto t = conv::tilted_planes(1.0, lat);
  // replace the third surface by a unit square at height z0
  MatrixXd G3 = MatrixXd::Identity(3, 3);
  t[2] = GraphPatch::from_formula(3, Lattice({0.0, 0.0}, {1.0, 1.0}, {n3, n3}), geometry::plane_formula(1, z0), G3,
                                  {1.0, 1.0, 3.0});
  return t;
}

/// Brute force over lattice coordinates of the coordinate-plane triple:
/// first (0, a, b), second (c, 0, d), third (e, f, z0). Returns the dense
/// tensor c_ijk = w1 w2 / eps with the membership test written directly in
/// coordinates.
inline std::vector<double> dense_coordinate_tensor(const Triple& t, double eps, double z0) {
  const auto& L1 = t[0].lattice();
  const auto& L2 = t[1].lattice();
  const auto& L3 = t[2].lattice();
  const std::size_t K1 = L1.size(), K2 = L2.size(), K3 = L3.size();
  std::vector<double> T(K1 * K2 * K3, 0.0);
  const double w1 = L1.cell_volume(), w2 = L2.cell_volume();
  for (int ia = 0; ia < L1.nodes()[0]; ++ia)
    for (int ib = 0; ib < L1.nodes()[1]; ++ib)
      for (int ic = 0; ic < L2.nodes()[0]; ++ic)
        for (int id = 0; id < L2.nodes()[1]; ++id) {
          const double a = L1.coordinate(0, ia), b = L1.coordinate(1, ib);
          const double c = L2.coordinate(0, ic), d = L2.coordinate(1, id);
          const double px = c, py = a, pz = b + d;
          if (pz - z0 < -eps / 2 || pz - z0 >= eps / 2) continue;
          const int ie = static_cast<int>(std::floor(px / L3.spacing(0)));
          const int jf = static_cast<int>(std::floor(py / L3.spacing(1)));
          if (ie < 0 || jf < 0 || ie >= L3.nodes()[0] || jf >= L3.nodes()[1]) continue;
          const std::size_t i = L1.flatten({ia, ib}), j = L2.flatten({ic, id}), k = L3.flatten({ie, jf});
          T[(i * K2 + j) * K3 + k] += w1 * w2 / eps;
        }
  return T;
}

/// max |T(F,G,H)| over unit vectors in the weight-normalized variables by
/// alternating a full SVD over (F,G) with an update of H.
inline double dense_oracle(const std::vector<double>& T, const Triple& t) {
  const std::size_t K1 = t[0].size(), K2 = t[1].size(), K3 = t[2].size();
  std::vector<double> r1(K1), r2(K2), r3(K3);
  for (std::size_t i = 0; i < K1; ++i) r1[i] = 1 / std::sqrt(t[0].weight(i));
  for (std::size_t j = 0; j < K2; ++j) r2[j] = 1 / std::sqrt(t[1].weight(j));
  for (std::size_t k = 0; k < K3; ++k) r3[k] = 1 / std::sqrt(t[2].weight(k));
  Eigen::VectorXd H = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(K3)).normalized();
  double sigma = 0;
  for (int it = 0; it < 500; ++it) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K1), static_cast<Eigen::Index>(K2));
    for (std::size_t i = 0; i < K1; ++i)
      for (std::size_t j = 0; j < K2; ++j) {
        double s = 0;
        for (std::size_t k = 0; k < K3; ++k) s += T[(i * K2 + j) * K3 + k] * r3[k] * H[static_cast<Eigen::Index>(k)];
        M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s * r1[i] * r2[j];
      }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd u = svd.matrixU().col(0), v = svd.matrixV().col(0);
    Eigen::VectorXd Hn = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K3));
    for (std::size_t i = 0; i < K1; ++i)
      for (std::size_t j = 0; j < K2; ++j)
        for (std::size_t k = 0; k < K3; ++k)
          Hn[static_cast<Eigen::Index>(k)] += T[(i * K2 + j) * K3 + k] * r1[i] * r2[j] * r3[k] *
                                              u[static_cast<Eigen::Index>(i)] * v[static_cast<Eigen::Index>(j)];
    const double s = Hn.norm();
    H = Hn / s;
    if (std::abs(s - sigma) < 1e-13 * s) return s;
    sigma = s;
  }
  return sigma;
}

// O(M^2) double sum over signed lattice indices; zeta1 - zeta2 only where it
// is itself a grid frequency.
inline cplx brute_force_I(const decomp::Field& f, const decomp::Field& g1, const decomp::Field& g2) {
  const auto& g = *f.grid;
  const auto n = g.dims();
  const std::size_t M = g.size();
  auto signed_of = [&](std::size_t k) {
    std::array<int, 4> s{};
    const auto sp = g.space().unflatten(k / g.nt());
    for (int a = 0; a < 3; ++a) s[a] = decomp::signed_index(sp[a], n[a]);
    s[3] = decomp::signed_index(static_cast<int>(k % g.nt()), n[3]);
    return s;
  };
  auto index_of = [&](const std::array<int, 4>& s, std::size_t& out) {
    for (int a = 0; a < 4; ++a)
      if (s[a] < -n[a] / 2 || s[a] >= n[a] / 2) return false;
    const std::size_t k = g.space().index_of({s[0], s[1], s[2]});
    out = g.flatten(k, (s[3] + n[3]) % n[3]);
    return true;
  };
  std::vector<std::array<int, 4>> sig(M);
  for (std::size_t k = 0; k < M; ++k) sig[k] = signed_of(k);
  cplx acc(0);
  for (std::size_t a = 0; a < M; ++a)
    for (std::size_t b = 0; b < M; ++b) {
      std::array<int, 4> d{};
      for (int i = 0; i < 4; ++i) d[i] = sig[a][i] - sig[b][i];
      std::size_t k;
      if (index_of(d, k)) acc += f.values[k] * g1.values[a] * g2.values[b];
    }
  const double cell = tri::fourier_cell(g);
  return acc * cell * cell;
}

}  // namespace oracle
