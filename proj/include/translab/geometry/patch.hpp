#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "translab/core.hpp"
#include "translab/geometry/lattice.hpp"

namespace translab::geometry {

/// Closed-form graph map x -> phi(x) in R^m with its Jacobian (m x (n-m)).
struct GraphFormula {
  std::string id;
  int codim = 1;
  std::function<VectorXd(const VectorXd&)> phi;
  std::function<MatrixXd(const VectorXd&)> dphi;
};

/// Constant map phi = offset (a flat patch shifted along its normal).
inline GraphFormula plane_formula(int codim = 1, double offset = 0.0) {
  GraphFormula f;
  f.id = "plane";
  f.codim = codim;
  f.phi = [codim, offset](const VectorXd&) { return VectorXd::Constant(codim, offset).eval(); };
  f.dphi = [codim](const VectorXd& x) { return MatrixXd::Zero(codim, x.size()).eval(); };
  return f;
}

/// phi(x) = scale * |x|^2 (codimension one).
inline GraphFormula paraboloid_formula(double scale = 1.0) {
  GraphFormula f;
  f.id = "paraboloid";
  f.codim = 1;
  f.phi = [scale](const VectorXd& x) { return VectorXd::Constant(1, scale * x.squaredNorm()).eval(); };
  f.dphi = [scale](const VectorXd& x) { return MatrixXd(2.0 * scale * x.transpose()); };
  return f;
}

/// Rescaled cone phi(x) = |x| / n1 + c / n1^2; smooth away from the origin.
inline GraphFormula cone_formula(double n1, double c) {
  require(n1 > 0, "cone: N1 must be positive");
  GraphFormula f;
  f.id = "cone";
  f.codim = 1;
  f.phi = [n1, c](const VectorXd& x) { return VectorXd::Constant(1, x.norm() / n1 + c / (n1 * n1)).eval(); };
  f.dphi = [n1](const VectorXd& x) -> MatrixXd {
    const double r = x.norm();
    if (r == 0) return MatrixXd::Zero(1, x.size()).eval();
    return (x.transpose() / (n1 * r)).eval();
  };
  return f;
}

/// A rotated graph sigma = G (x, phi(x)) sampled on a lattice over U.
class GraphPatch {
public:
  struct Params {
    double beta = 1.0;
    double b_hoelder = 1.0;
    double R = 1.0;
  };

  static GraphPatch from_formula(int n, Lattice lattice, GraphFormula formula, MatrixXd G, Params p) {
    const int m = formula.codim;
    GraphPatch patch(n, m, std::move(lattice), std::move(G), p);
    const std::size_t K = patch.lattice_.size();
    patch.phi_.resize(m, static_cast<Eigen::Index>(K));
    patch.dphi_.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
      const VectorXd x = patch.lattice_.point(k);
      const VectorXd v = formula.phi(x);
      const MatrixXd J = formula.dphi(x);
      require(v.size() == m && J.rows() == m && J.cols() == n - m, "graph formula: wrong output shape");
      patch.phi_.col(static_cast<Eigen::Index>(k)) = v;
      patch.dphi_.push_back(J);
    }
    patch.formula_ = std::make_shared<GraphFormula>(std::move(formula));
    patch.finish();
    return patch;
  }

  /// phi values given per node (m x K); the Jacobian is recovered by central
  /// differences, one-sided on the boundary.
  static GraphPatch from_table(int n, Lattice lattice, MatrixXd phi_values, MatrixXd G, Params p) {
    const int m = static_cast<int>(phi_values.rows());
    GraphPatch patch(n, m, std::move(lattice), std::move(G), p);
    const std::size_t K = patch.lattice_.size();
    require(static_cast<std::size_t>(phi_values.cols()) == K, "graph table: one column per lattice node required");
    patch.phi_ = std::move(phi_values);
    const int d = n - m;
    patch.dphi_.assign(K, MatrixXd::Zero(m, d));
    for (std::size_t k = 0; k < K; ++k) {
      const auto idx = patch.lattice_.unflatten(k);
      for (int a = 0; a < d; ++a) {
        const int na = patch.lattice_.nodes()[a];
        auto lo_idx = idx, hi_idx = idx;
        lo_idx[a] = std::max(0, idx[a] - 1);
        hi_idx[a] = std::min(na - 1, idx[a] + 1);
        const double span = (hi_idx[a] - lo_idx[a]) * patch.lattice_.spacing(a);
        patch.dphi_[k].col(a) =
            (patch.phi_.col(static_cast<Eigen::Index>(patch.lattice_.flatten(hi_idx))) -
             patch.phi_.col(static_cast<Eigen::Index>(patch.lattice_.flatten(lo_idx)))) / span;
      }
    }
    patch.finish();
    return patch;
  }

  int ambient_dim() const { return n_; }
  int codim() const { return m_; }
  int dim() const { return n_ - m_; }
  const Lattice& lattice() const { return lattice_; }
  std::size_t size() const { return lattice_.size(); }
  const MatrixXd& rotation() const { return G_; }
  const Params& params() const { return params_; }
  const MatrixXd& phi_values() const { return phi_; }
  const MatrixXd& dphi(std::size_t k) const { return dphi_[k]; }
  bool analytic() const { return static_cast<bool>(formula_); }
  std::string formula_id() const { return formula_ ? formula_->id : std::string("table"); }
  const GraphFormula* formula() const { return formula_.get(); }

  /// Graph point G (x, phi(x)) of node k.
  VectorXd point(std::size_t k) const {
    VectorXd y(n_);
    y.head(dim()) = lattice_.point(k);
    y.tail(m_) = phi_.col(static_cast<Eigen::Index>(k));
    return G_ * y;
  }

  /// Jacobian of the parametrization x -> G (x, phi(x)), n x (n-m).
  MatrixXd tangent(std::size_t k) const {
    MatrixXd J(n_, dim());
    J.topRows(dim()) = MatrixXd::Identity(dim(), dim());
    J.bottomRows(m_) = dphi_[k];
    return G_ * J;
  }

  /// Columns of G (-Dphi^T; I), spanning the normal space.
  MatrixXd raw_normals(std::size_t k) const {
    MatrixXd N(n_, m_);
    N.topRows(dim()) = -dphi_[k].transpose();
    N.bottomRows(m_) = MatrixXd::Identity(m_, m_);
    return G_ * N;
  }

  /// Surface element times cell volume.
  double weight(std::size_t k) const {
    const MatrixXd& D = dphi_[k];
    const MatrixXd gram = MatrixXd::Identity(dim(), dim()) + D.transpose() * D;
    return std::sqrt(gram.determinant()) * lattice_.cell_volume();
  }

  const std::vector<VectorXd>& points() const { return points_; }

  /// Largest distance between two node images.
  double diameter() const {
    double d2 = 0;
    for (std::size_t i = 0; i < points_.size(); ++i)
      for (std::size_t j = i + 1; j < points_.size(); ++j)
        d2 = std::max(d2, (points_[i] - points_[j]).squaredNorm());
    return std::sqrt(d2);
  }

private:
  GraphPatch(int n, int m, Lattice lattice, MatrixXd G, Params p)
      : n_(n), m_(m), lattice_(std::move(lattice)), G_(std::move(G)), params_(p) {
    require(m_ >= 1 && n_ - m_ >= 1, "patch: need m >= 1 and n - m >= 1");
    require(lattice_.dim() == n_ - m_, "patch: lattice dimension must equal n - m");
    require(G_.rows() == n_ && G_.cols() == n_, "patch: rotation must be n x n");
    require((G_.transpose() * G_ - MatrixXd::Identity(n_, n_)).cwiseAbs().maxCoeff() <= 1e-12,
            "patch: rotation G is not orthogonal");
    require(p.beta > 0 && p.beta <= 1, "patch: beta must lie in (0, 1]");
    require(p.b_hoelder > 0 && p.R > 0, "patch: b_hoelder and R must be positive");
  }

  void finish() {
    points_.clear();
    points_.reserve(size());
    for (std::size_t k = 0; k < size(); ++k) points_.push_back(point(k));
  }

  int n_ = 0, m_ = 0;
  Lattice lattice_;
  MatrixXd G_;
  Params params_;
  MatrixXd phi_;
  std::vector<MatrixXd> dphi_;
  std::vector<VectorXd> points_;
  std::shared_ptr<const GraphFormula> formula_;
};

/// Orthonormal basis of the normal space at a point.
struct NormalFrame {
  VectorXd base;
  MatrixXd vectors;  // n x m, orthonormal columns
};

/// Modified Gram-Schmidt on the columns of A.
inline MatrixXd gram_schmidt(const MatrixXd& A) {
  MatrixXd Q = A;
  for (Eigen::Index j = 0; j < Q.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) Q.col(j) -= Q.col(i).dot(Q.col(j)) * Q.col(i);
    const double nrm = Q.col(j).norm();
    if (nrm == 0) throw NumericalError("gram_schmidt: linearly dependent columns");
    Q.col(j) /= nrm;
  }
  return Q;
}

/// Orthogonal matrix with positive determinant whose last column is the unit
/// vector nu; the remaining columns complete it to a basis (deterministically).
inline MatrixXd rotation_with_normal(const VectorXd& nu) {
  const auto n = nu.size();
  require(std::abs(nu.norm() - 1.0) < 1e-12, "rotation_with_normal: nu must be a unit vector");
  MatrixXd A(n, n);
  A.col(0) = nu;
  // pad with the coordinate axes least aligned with nu
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(nu[a]) < std::abs(nu[b]); });
  for (Eigen::Index j = 1; j < n; ++j) A.col(j) = VectorXd::Unit(n, order[static_cast<std::size_t>(j - 1)]);
  MatrixXd Q = gram_schmidt(A);
  MatrixXd G(n, n);
  G.leftCols(n - 1) = Q.rightCols(n - 1);
  G.col(n - 1) = nu;
  if (G.determinant() < 0) G.col(0) = -G.col(0);
  return G;
}

inline NormalFrame normal_frame(const GraphPatch& patch, std::size_t node) {
  require(node < patch.size(), "normal_frame: node outside lattice");
  return {patch.points()[node], gram_schmidt(patch.raw_normals(node))};
}

/// Determinant of the concatenated frame vectors.
inline double transversality_det(const NormalFrame& f1, const NormalFrame& f2, const NormalFrame& f3) {
  const auto n = f1.vectors.rows();
  require(f2.vectors.rows() == n && f3.vectors.rows() == n, "transversality_det: ambient dimension mismatch");
  require(f1.vectors.cols() + f2.vectors.cols() + f3.vectors.cols() == n,
          "transversality_det: codimensions must sum to n");
  MatrixXd M(n, n);
  M << f1.vectors, f2.vectors, f3.vectors;
  return M.determinant();
}

}  // namespace translab::geometry
