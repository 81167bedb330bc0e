#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <vector>

#include "translab/core.hpp"
#include "translab/geometry/patch.hpp"

namespace translab::geometry {

inline constexpr double degenerate_det = 1e-10;

struct RegularityReport {
  double sup_term = 0;     // R^-beta * max |Dphi|
  double hoelder_term = 0; // max |Dphi(x) - Dphi(y)| / |x - y|^beta
  double lhs = 0;
  bool pass = false;
  std::size_t pairs = 0;
  bool subsampled = false;
};

inline double operator_norm(const MatrixXd& A) {
  if (A.rows() == 1 || A.cols() == 1) return A.norm();
  return Eigen::JacobiSVD<MatrixXd>(A).singularValues()(0);
}

/// Lattice version of the C^{1,beta} bound. Node pairs beyond pair_cap are
/// replaced by pair_cap uniformly drawn pairs.
inline RegularityReport check_regularity(const GraphPatch& patch, std::size_t pair_cap = 1'000'000,
                                         std::uint64_t seed = 0) {
  const auto& p = patch.params();
  const std::size_t K = patch.size();
  RegularityReport rep;
  double sup = 0;
  for (std::size_t k = 0; k < K; ++k) sup = std::max(sup, operator_norm(patch.dphi(k)));
  rep.sup_term = std::pow(p.R, -p.beta) * sup;

  std::vector<VectorXd> xs(K);
  for (std::size_t k = 0; k < K; ++k) xs[k] = patch.lattice().point(k);
  auto quotient = [&](std::size_t i, std::size_t j) {
    const double dx = (xs[i] - xs[j]).norm();
    return operator_norm(patch.dphi(i) - patch.dphi(j)) / std::pow(dx, p.beta);
  };
  const std::size_t all_pairs = K * (K - 1) / 2;
  double q = 0;
  if (all_pairs <= pair_cap) {
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t j = i + 1; j < K; ++j) q = std::max(q, quotient(i, j));
    rep.pairs = all_pairs;
  } else {
    auto rng = stream_rng(seed, 0);
    std::uniform_int_distribution<std::size_t> pick(0, K - 1);
    for (std::size_t t = 0; t < pair_cap; ++t) {
      const std::size_t i = pick(rng), j = pick(rng);
      if (i != j) q = std::max(q, quotient(i, j));
    }
    rep.pairs = pair_cap;
    rep.subsampled = true;
  }
  rep.hoelder_term = q;
  rep.lhs = rep.sup_term + rep.hoelder_term;
  rep.pass = rep.lhs <= p.b_hoelder;
  return rep;
}

/// Pointwise data of a parametrized surface: node images, parametrization
/// Jacobians and raw normal spans. Linear images of graph patches stay exact
/// here (Jacobians map by T, normals by T^-T) without re-graphing.
struct Surface {
  int n = 0, m = 0;
  Lattice lattice;
  std::vector<VectorXd> points;
  std::vector<MatrixXd> jacobians;  // n x (n-m)
  std::vector<MatrixXd> normals;    // n x m, raw (not orthonormal)

  std::size_t size() const { return points.size(); }
  MatrixXd frame(std::size_t k) const { return gram_schmidt(normals[k]); }
};

inline Surface surface_of(const GraphPatch& patch) {
  Surface s;
  s.n = patch.ambient_dim();
  s.m = patch.codim();
  s.lattice = patch.lattice();
  s.points = patch.points();
  for (std::size_t k = 0; k < patch.size(); ++k) {
    s.jacobians.push_back(patch.tangent(k));
    s.normals.push_back(patch.raw_normals(k));
  }
  return s;
}

inline void require_invertible(const MatrixXd& T, int n) {
  require(T.rows() == n && T.cols() == n, "linear map: must be n x n");
  require(std::abs(T.determinant()) > 1e-12, "linear map: |det T| <= 1e-12 (near-singular)");
}

inline Surface transform(const Surface& s, const MatrixXd& T) {
  require_invertible(T, s.n);
  const MatrixXd Tinv_t = T.inverse().transpose();
  Surface out = s;
  for (std::size_t k = 0; k < s.size(); ++k) {
    out.points[k] = T * s.points[k];
    out.jacobians[k] = T * s.jacobians[k];
    out.normals[k] = Tinv_t * s.normals[k];
  }
  return out;
}

using SurfaceTriple = std::array<Surface, 3>;

inline SurfaceTriple surfaces_of(const std::array<GraphPatch, 3>& patches) {
  return {surface_of(patches[0]), surface_of(patches[1]), surface_of(patches[2])};
}

struct ThetaResult {
  double theta = 0;      // min |d| over sampled triples (0 if degenerate)
  double raw_min = 0;    // min |d| before the degenerate cut-off
  double corrected = 0;  // theta minus the Lipschitz slack over the sampling gap
  bool degenerate = false;
  std::array<std::size_t, 3> argmin{};
  std::size_t samples = 0;
};

/// Minimum of |d| over all stride-sampled node triples. lipschitz_slack is a
/// bound on the Lipschitz constant of d in parameter space; the corrected
/// value subtracts it times the largest distance to a sampled node.
inline ThetaResult theta_min(const SurfaceTriple& s, int stride = 1, double lipschitz_slack = 0.0) {
  const int n = s[0].n;
  require(s[1].n == n && s[2].n == n, "theta_min: ambient dimension mismatch");
  require(s[0].m + s[1].m + s[2].m == n, "theta_min: codimensions must sum to n");
  std::array<std::vector<std::size_t>, 3> idx;
  std::array<std::vector<MatrixXd>, 3> frames;
  for (int i = 0; i < 3; ++i) {
    const auto nodes = s[i].lattice.strided(stride);
    require(!nodes.empty(), "theta_min: empty sample set");
    // bitwise-identical frames give identical determinants; keep the first
    std::map<std::vector<double>, std::size_t> seen;
    for (auto k : nodes) {
      MatrixXd F = s[i].frame(k);
      std::vector<double> key(F.data(), F.data() + F.size());
      if (!seen.emplace(std::move(key), k).second) continue;
      idx[i].push_back(k);
      frames[i].push_back(std::move(F));
    }
  }
  ThetaResult r;
  r.raw_min = std::numeric_limits<double>::infinity();
  const bool cross3 = n == 3;
  MatrixXd M(n, n);
  for (std::size_t a = 0; a < idx[0].size(); ++a) {
    for (std::size_t b = 0; b < idx[1].size(); ++b) {
      Eigen::Vector3d c12;
      if (cross3) {
        c12 = Eigen::Vector3d(frames[0][a].col(0)).cross(Eigen::Vector3d(frames[1][b].col(0)));
      }
      for (std::size_t c = 0; c < idx[2].size(); ++c) {
        double d;
        if (cross3) {
          d = c12.dot(Eigen::Vector3d(frames[2][c].col(0)));
        } else {
          M << frames[0][a], frames[1][b], frames[2][c];
          d = M.determinant();
        }
        ++r.samples;
        if (std::abs(d) < r.raw_min) {
          r.raw_min = std::abs(d);
          r.argmin = {idx[0][a], idx[1][b], idx[2][c]};
        }
      }
    }
  }
  r.degenerate = r.raw_min < degenerate_det;
  r.theta = r.degenerate ? 0.0 : r.raw_min;
  double gap = 0;
  for (int i = 0; i < 3; ++i) {
    double g2 = 0;
    for (int a = 0; a < s[i].lattice.dim(); ++a) {
      // farthest node from the sampled sub-lattice along this axis
      const int last = s[i].lattice.nodes()[a] - 1;
      const double gi = std::max(stride / 2, last % stride) * s[i].lattice.spacing(a);
      g2 += gi * gi;
    }
    gap = std::max(gap, std::sqrt(g2));
  }
  r.corrected = std::max(0.0, r.theta - lipschitz_slack * gap);
  return r;
}

inline ThetaResult theta_min(const std::array<GraphPatch, 3>& patches, int stride = 1, double lipschitz_slack = 0.0) {
  return theta_min(surfaces_of(patches), stride, lipschitz_slack);
}

struct MnResult {
  double max_rel_error = 0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // samples with |d'| below the degenerate threshold
};

inline double gram_det(const MatrixXd& J) { return (J.transpose() * J).determinant(); }

/// Checks M / |det T| = (|d| / |d'|)^{1/2} with M the product of the fourth
/// roots of the Gram determinant ratios, at the given node triples.
inline MnResult verify_mn_identity(const SurfaceTriple& s, const MatrixXd& T,
                                   const std::vector<std::array<std::size_t, 3>>& samples) {
  const int n = s[0].n;
  require_invertible(T, n);
  const double detT = std::abs(T.determinant());
  const MatrixXd Tinv_t = T.inverse().transpose();
  MnResult res;
  MatrixXd A(n, n), B(n, n);
  for (const auto& smp : samples) {
    double Mprod = 1;
    for (int i = 0; i < 3; ++i) {
      require(smp[i] < s[i].size(), "verify_mn_identity: sample outside lattice");
      const MatrixXd& J = s[i].jacobians[smp[i]];
      Mprod *= std::pow(gram_det(T * J) / gram_det(J), 0.25);
    }
    A << s[0].frame(smp[0]), s[1].frame(smp[1]), s[2].frame(smp[2]);
    B << gram_schmidt(Tinv_t * s[0].normals[smp[0]]), gram_schmidt(Tinv_t * s[1].normals[smp[1]]),
        gram_schmidt(Tinv_t * s[2].normals[smp[2]]);
    const double d = std::abs(A.determinant()), dp = std::abs(B.determinant());
    if (dp < degenerate_det) {
      ++res.skipped;
      continue;
    }
    const double lhs = Mprod / detT;
    const double rhs = std::sqrt(d / dp);
    res.max_rel_error = std::max(res.max_rel_error, std::abs(lhs / rhs - 1.0));
    ++res.evaluated;
  }
  return res;
}

}  // namespace translab::geometry
