#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <vector>

#include "translab/core.hpp"
#include "translab/geometry/patch.hpp"
#include "translab/geometry/transversality.hpp"

namespace translab::geometry {

namespace detail {

inline void exponents_rec(int dim, int remaining, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == dim - 1) {
    cur.push_back(remaining);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    cur.push_back(e);
    exponents_rec(dim, remaining - e, cur, out);
    cur.pop_back();
  }
}

/// Multi-indices alpha with lo <= |alpha| <= hi.
inline std::vector<std::vector<int>> exponents(int dim, int lo, int hi) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  for (int deg = lo; deg <= hi; ++deg) exponents_rec(dim, deg, cur, out);
  return out;
}

}  // namespace detail

/// phi(x) = phi_c + sum_alpha c_alpha ((x - x_c)/scale)^alpha, 2 <= |alpha| <= degree
/// (degree 4, lowered when the node set is too small).
/// The differential vanishes at x_c by construction.
inline GraphFormula polynomial_formula(VectorXd xc, VectorXd phic, double scale,
                                       std::vector<std::vector<int>> alphas, MatrixXd coef) {
  GraphFormula f;
  f.id = "polynomial";
  f.codim = static_cast<int>(phic.size());
  f.phi = [=](const VectorXd& x) {
    VectorXd v = phic;
    const VectorXd u = (x - xc) / scale;
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      double mono = 1;
      for (int i = 0; i < u.size(); ++i) mono *= std::pow(u[i], alphas[a][i]);
      v += coef.col(static_cast<Eigen::Index>(a)) * mono;
    }
    return v;
  };
  f.dphi = [=](const VectorXd& x) {
    const auto d = x.size();
    MatrixXd J = MatrixXd::Zero(phic.size(), d);
    const VectorXd u = (x - xc) / scale;
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      for (Eigen::Index i = 0; i < d; ++i) {
        if (alphas[a][i] == 0) continue;
        double mono = alphas[a][i] / scale;
        for (Eigen::Index l = 0; l < d; ++l)
          mono *= std::pow(u[l], alphas[a][l] - (l == i ? 1 : 0));
        J.col(i) += coef.col(static_cast<Eigen::Index>(a)) * mono;
      }
    }
    return J;
  };
  return f;
}

/// Re-expresses the nodes `subset` of a surface as a graph over the tangent
/// plane at node `center`: the rotation is (tangent basis, normal basis) there,
/// and phi is a least-squares polynomial fit with vanishing differential at the
/// centre. The new lattice spans the cells of the bounding box of the
/// projected nodes with the given node counts.
inline GraphPatch regraph(const Surface& s, const std::vector<std::size_t>& subset, std::size_t center,
                          std::vector<int> nodes, GraphPatch::Params params) {
  const int n = s.n, m = s.m, d = n - m;
  require(static_cast<int>(nodes.size()) == d, "regraph: node counts must match the surface dimension");
  MatrixXd O(n, n);
  O << gram_schmidt(s.jacobians[center]), s.frame(center);
  O = gram_schmidt(O);  // removes rounding-level drift from orthogonality

  const VectorXd yc = O.transpose() * s.points[center];
  const VectorXd xc = yc.head(d), phic = yc.tail(m);
  std::vector<double> lo(d, 1e300), hi(d, -1e300);
  std::vector<VectorXd> ys;
  for (auto k : subset) {
    ys.push_back(O.transpose() * s.points[k]);
    for (int a = 0; a < d; ++a) {
      lo[a] = std::min(lo[a], ys.back()[a]);
      hi[a] = std::max(hi[a], ys.back()[a]);
    }
  }
  double scale = 0;
  for (int a = 0; a < d; ++a) scale = std::max(scale, hi[a] - lo[a]);
  require(scale > 0, "regraph: projected nodes span no area");

  int degree = 4;
  auto alphas = detail::exponents(d, 2, degree);
  while (degree > 2 && alphas.size() * 2 > subset.size()) alphas = detail::exponents(d, 2, --degree);
  MatrixXd V(static_cast<Eigen::Index>(subset.size()), static_cast<Eigen::Index>(alphas.size()));
  MatrixXd rhs(static_cast<Eigen::Index>(subset.size()), m);
  for (std::size_t r = 0; r < ys.size(); ++r) {
    const VectorXd u = (ys[r].head(d) - xc) / scale;
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      double mono = 1;
      for (int i = 0; i < d; ++i) mono *= std::pow(u[i], alphas[a][i]);
      V(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(a)) = mono;
    }
    rhs.row(static_cast<Eigen::Index>(r)) = (ys[r].tail(m) - phic).transpose();
  }
  const MatrixXd coef = V.colPivHouseholderQr().solve(rhs).transpose();  // m x #alphas

  // The projected nodes are cell centres: pad by half a node spacing so a
  // rigid motion reproduces the original cells. Degenerate boxes get a sliver.
  for (int a = 0; a < d; ++a) {
    if (hi[a] - lo[a] < 1e-12 * scale) { lo[a] -= 0.5e-6 * scale; hi[a] += 0.5e-6 * scale; continue; }
    const double pad = 0.5 * (hi[a] - lo[a]) / (nodes[static_cast<std::size_t>(a)] - 1);
    lo[a] -= pad;
    hi[a] += pad;
  }
  Lattice lat(lo, hi, std::move(nodes));
  return GraphPatch::from_formula(n, std::move(lat), polynomial_formula(xc, phic, scale, alphas, coef), O, params);
}

struct LinearImage {
  SurfaceTriple surfaces;            // exact pointwise images
  std::array<GraphPatch, 3> patches; // re-graphed images
  ThetaResult theta;                 // from the mapped normal frames
};

/// Maps a triple through T. theta is recomputed from the exact mapped frames
/// (inverse transpose, then Gram-Schmidt); the patches are re-fitted graphs.
inline LinearImage apply_linear(const std::array<GraphPatch, 3>& triple, const MatrixXd& T, int stride = 1) {
  const SurfaceTriple base = surfaces_of(triple);
  SurfaceTriple mapped{transform(base[0], T), transform(base[1], T), transform(base[2], T)};
  auto image = [&](int i) {
    const auto& p = triple[i];
    std::vector<std::size_t> all(p.size());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    GraphPatch::Params prm = p.params();
    double d2 = 0;
    for (std::size_t a = 0; a < all.size(); ++a)
      for (std::size_t b = a + 1; b < all.size(); ++b)
        d2 = std::max(d2, (mapped[i].points[a] - mapped[i].points[b]).squaredNorm());
    prm.R = std::max(prm.R, std::sqrt(d2));
    return regraph(mapped[i], all, p.lattice().center(), p.lattice().nodes(), prm);
  };
  ThetaResult th = theta_min(mapped, stride);
  return {mapped, {image(0), image(1), image(2)}, th};
}

struct PatchPiece {
  GraphPatch patch;
  std::vector<std::size_t> source_nodes;  // nodes of the input lattice covered by this piece
};

/// Splits the lattice into contiguous blocks whose node images have diameter
/// at most delta; each block is re-graphed over its own tangent plane with R = delta.
inline std::vector<PatchPiece> partition_patch(const GraphPatch& patch, double delta) {
  const auto& prm = patch.params();
  const Lattice& lat = patch.lattice();
  require(delta > 0 && delta <= prm.R * (1 + 1e-12), "partition_patch: need 0 < delta <= R");
  require(delta >= 2 * lat.max_spacing(), "partition_patch: delta below 2h cannot be resolved");
  const int d = lat.dim();
  if (patch.diameter() <= delta) {
    std::vector<std::size_t> all(patch.size());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    return {PatchPiece{patch, std::move(all)}};
  }
  const Surface surf = surface_of(patch);
  int blocks = std::max(1, static_cast<int>(std::ceil(prm.R / delta - 1e-9)));
  for (;; ++blocks) {
    for (int a = 0; a < d; ++a)
      require(lat.nodes()[a] >= 2 * blocks, "partition_patch: delta too small for the lattice");
    // block b on axis a holds nodes [start(b), start(b+1))
    auto start = [&](int a, int b) { return static_cast<int>((static_cast<long>(b) * lat.nodes()[a]) / blocks); };
    std::vector<std::vector<std::size_t>> groups;
    std::vector<int> bidx(d, 0);
    bool fits = true;
    for (;;) {
      std::vector<std::size_t> members;
      std::vector<int> lo(d), cnt(d);
      for (int a = 0; a < d; ++a) { lo[a] = start(a, bidx[a]); cnt[a] = start(a, bidx[a] + 1) - lo[a]; }
      std::vector<int> off(d, 0);
      for (;;) {
        std::vector<int> idx(d);
        for (int a = 0; a < d; ++a) idx[a] = lo[a] + off[a];
        members.push_back(lat.flatten(idx));
        int a = d - 1;
        while (a >= 0 && ++off[a] == cnt[a]) off[a--] = 0;
        if (a < 0) break;
      }
      double d2 = 0;
      for (std::size_t i = 0; i < members.size() && fits; ++i)
        for (std::size_t j = i + 1; j < members.size(); ++j)
          d2 = std::max(d2, (surf.points[members[i]] - surf.points[members[j]]).squaredNorm());
      if (std::sqrt(d2) > delta) fits = false;
      groups.push_back(std::move(members));
      int a = d - 1;
      while (a >= 0 && ++bidx[a] == blocks) bidx[a--] = 0;
      if (a < 0 || !fits) break;
    }
    if (!fits) continue;
    std::vector<PatchPiece> out;
    for (auto& g : groups) {
      // centre node of the block (its middle multi-index)
      std::vector<int> lo = lat.unflatten(g.front()), hi = lat.unflatten(g.back()), mid(d), cnt(d);
      for (int a = 0; a < d; ++a) { mid[a] = (lo[a] + hi[a]) / 2; cnt[a] = hi[a] - lo[a] + 1; }
      GraphPatch::Params p = prm;
      p.R = delta;
      out.push_back({regraph(surf, g, lat.flatten(mid), cnt, p), std::move(g)});
    }
    return out;
  }
}

/// Level sets of x -> sigma(x).v binned into equal-width slabs.
struct Foliation {
  VectorXd direction;
  std::vector<double> edges;               // slabs + 1 values of c
  std::vector<std::vector<std::size_t>> slices;
  std::vector<double> tangent_factor;      // |projection of v onto the tangent space| per node

  double width() const { return edges[1] - edges[0]; }
  std::size_t count() const { return slices.size(); }
  double extent() const { return edges.back() - edges.front(); }
};

/// Coarea slicing of a patch along direction v. Rejects v whose tangential
/// projection falls below min_tangent anywhere on the patch.
inline Foliation foliate(const GraphPatch& patch, const VectorXd& v, int slabs, double min_tangent = 1e-3) {
  require(slabs >= 1, "foliate: need at least one slab");
  require(v.size() == patch.ambient_dim(), "foliate: direction dimension mismatch");
  require(std::abs(v.norm() - 1.0) < 1e-12, "foliate: direction must be a unit vector");
  Foliation f;
  f.direction = v;
  const std::size_t K = patch.size();
  std::vector<double> c(K);
  f.tangent_factor.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    c[k] = patch.points()[k].dot(v);
    const MatrixXd N = gram_schmidt(patch.raw_normals(k));
    const double t2 = std::max(0.0, 1.0 - (N.transpose() * v).squaredNorm());
    f.tangent_factor[k] = std::sqrt(t2);
    require(f.tangent_factor[k] >= min_tangent, "foliate: direction is tangent-degenerate on the patch");
  }
  const double lo = *std::min_element(c.begin(), c.end());
  double hi = *std::max_element(c.begin(), c.end());
  if (hi - lo < 1e-14) hi = lo + 1e-14;
  const double w = (hi - lo) / slabs;
  for (int i = 0; i <= slabs; ++i) f.edges.push_back(lo + i * w);
  f.slices.assign(static_cast<std::size_t>(slabs), {});
  for (std::size_t k = 0; k < K; ++k) {
    const int b = std::min(slabs - 1, static_cast<int>((c[k] - lo) / w));
    f.slices[static_cast<std::size_t>(b)].push_back(k);
  }
  return f;
}

/// Squared L^2 norm of f on slice s, taken against d(mu_c) / |grad(sigma.v)|
/// (the coarea weighting), so width * sum over slices reproduces the surface
/// norm exactly. The gradient is tangent_factor, close to 1 for the slicings used.
template <class Values>
double slice_norm_sq(const Foliation& fol, const GraphPatch& patch, const Values& f, std::size_t s) {
  double acc = 0;
  for (auto k : fol.slices[s]) acc += std::norm(f[k]) * patch.weight(k);
  return acc / fol.width();
}

}  // namespace translab::geometry
