#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <algorithm>
#include <memory>
#include <random>
#include <vector>

#include "translab/core.hpp"
#include "translab/geometry.hpp"

namespace translab::conv {

using geometry::GraphPatch;
using geometry::MatrixXd;
using geometry::VectorXd;

/// Sampled L^2 density on a patch with surface quadrature weights.
struct SurfaceDensity {
  std::shared_ptr<const GraphPatch> patch;
  std::vector<cplx> values;
  std::vector<double> weights;

  SurfaceDensity() = default;
  SurfaceDensity(std::shared_ptr<const GraphPatch> p, std::vector<cplx> v) : patch(std::move(p)), values(std::move(v)) {
    require(patch != nullptr, "density: missing patch");
    require(values.size() == patch->size(), "density: one value per lattice node required");
    weights.resize(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) weights[k] = patch->weight(k);
  }

  static SurfaceDensity constant(std::shared_ptr<const GraphPatch> p, cplx c) {
    const auto K = p->size();
    return SurfaceDensity(std::move(p), std::vector<cplx>(K, c));
  }

  double norm_sq() const {
    double s = 0;
    for (std::size_t k = 0; k < values.size(); ++k) s += std::norm(values[k]) * weights[k];
    return s;
  }
  double norm() const { return std::sqrt(norm_sq()); }
};

/// Finest lattice step of surface 1 or 2 measured along the normal space of
/// surface 3 at its centre; slabs thinner than twice this can miss every pair.
inline double normal_resolution(const GraphPatch& s1, const GraphPatch& s2, const GraphPatch& s3) {
  const MatrixXd N3 = geometry::normal_frame(s3, s3.lattice().center()).vectors;
  auto step = [&](const GraphPatch& s) {
    const MatrixXd J = s.tangent(s.lattice().center());
    double h = 0;
    for (int a = 0; a < s.dim(); ++a) h = std::max(h, (N3.transpose() * J.col(a)).norm() * s.lattice().spacing(a));
    return h;
  };
  return std::min(step(s1), step(s2));
}

/// Sparse nonnegative 3-tensor T_ijk = w1_i w2_j / eps^m3 over the node
/// triples with x_i + y_j inside the eps-slab around node k of the third
/// surface. The slab of node k is the vertical prism over its lattice cell
/// cut to -eps/2 <= N3^T (p - sigma_k) < eps/2 componentwise (half-open, so
/// slabs whose width is a multiple of the sum-lattice step count exactly).
class SlabTensor {
public:
  struct Entry {
    std::uint32_t i, j, k;
    double c;
  };

  static SlabTensor build(const GraphPatch& s1, const GraphPatch& s2, const GraphPatch& s3, double eps) {
    const int n = s3.ambient_dim();
    require(s1.ambient_dim() == n && s2.ambient_dim() == n, "slab tensor: ambient dimension mismatch");
    require(eps > 0, "slab tensor: eps must be positive");
    const double h = normal_resolution(s1, s2, s3);
    require(eps >= 2 * h, "slab tensor: eps below twice the lattice resolution (empty slabs)");
    SlabTensor t;
    t.eps_ = eps;
    t.sizes_ = {s1.size(), s2.size(), s3.size()};
    t.w_[0].resize(s1.size());
    t.w_[1].resize(s2.size());
    t.w_[2].resize(s3.size());
    for (std::size_t i = 0; i < s1.size(); ++i) t.w_[0][i] = s1.weight(i);
    for (std::size_t j = 0; j < s2.size(); ++j) t.w_[1][j] = s2.weight(j);
    for (std::size_t k = 0; k < s3.size(); ++k) t.w_[2][k] = s3.weight(k);

    const int d3 = s3.dim(), m3 = s3.codim();
    const auto& lat = s3.lattice();
    const MatrixXd Gt = s3.rotation().transpose();
    std::vector<MatrixXd> Nt(s3.size());
    for (std::size_t k = 0; k < s3.size(); ++k) Nt[k] = geometry::normal_frame(s3, k).vectors.transpose();
    const double scale = 1.0 / std::pow(eps, m3);
    const double half = 0.5 * eps;
    std::vector<int> idx(static_cast<std::size_t>(d3));
    VectorXd p(n), y(n);
    for (std::size_t i = 0; i < s1.size(); ++i) {
      for (std::size_t j = 0; j < s2.size(); ++j) {
        p = s1.points()[i] + s2.points()[j];
        y.noalias() = Gt * p;
        bool inside = true;
        for (int a = 0; a < d3 && inside; ++a) {
          const double u = (y[a] - lat.lo()[a]) / lat.spacing(a);
          if (u < 0 || u >= lat.nodes()[a]) inside = false;
          else idx[static_cast<std::size_t>(a)] = static_cast<int>(u);
        }
        if (!inside) continue;
        const std::size_t k = lat.flatten(idx);
        const VectorXd off = Nt[k] * (p - s3.points()[k]);
        if (off.minCoeff() < -half || off.maxCoeff() >= half) continue;
        const double c = t.w_[0][i] * t.w_[1][j] * scale;
        if (!std::isfinite(c)) throw NumericalError("slab tensor: weight overflow");
        t.entries_.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                              static_cast<std::uint32_t>(k), c});
      }
    }
    return t;
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size(int mode) const { return sizes_[static_cast<std::size_t>(mode)]; }
  const std::vector<double>& weights(int mode) const { return w_[static_cast<std::size_t>(mode)]; }
  double eps() const { return eps_; }

  /// Sum over entries of c * a_i * b_j * c_k with the `skip` slot left free;
  /// returns the vector indexed by that slot.
  std::vector<cplx> contract(int skip, const std::vector<cplx>& a, const std::vector<cplx>& b) const {
    std::vector<cplx> out(size(skip), cplx{});
    for (const auto& e : entries_) {
      switch (skip) {
        case 0: out[e.i] += e.c * a[e.j] * b[e.k]; break;
        case 1: out[e.j] += e.c * a[e.i] * b[e.k]; break;
        default: out[e.k] += e.c * a[e.i] * b[e.j]; break;
      }
    }
    return out;
  }

  cplx form(const std::vector<cplx>& f, const std::vector<cplx>& g, const std::vector<cplx>& h) const {
    cplx s{};
    for (const auto& e : entries_) s += e.c * f[e.i] * g[e.j] * h[e.k];
    return s;
  }

private:
  double eps_ = 0;
  std::array<std::size_t, 3> sizes_{};
  std::array<std::vector<double>, 3> w_;
  std::vector<Entry> entries_;
};

/// Mollified trace of f * g on the third surface: the slab mass of each node
/// divided by its surface weight.
inline SurfaceDensity convolve_restrict(const SurfaceDensity& f, const SurfaceDensity& g,
                                        std::shared_ptr<const GraphPatch> s3, double eps) {
  const auto t = SlabTensor::build(*f.patch, *g.patch, *s3, eps);
  SurfaceDensity out(s3, t.contract(2, f.values, g.values));
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    out.values[k] /= out.weights[k];
    if (!std::isfinite(out.values[k].real()) || !std::isfinite(out.values[k].imag()))
      throw NumericalError("convolve_restrict: sum overflow");
  }
  return out;
}

/// Sum over slab triples of f g h w1 w2 / eps^m3; equals the L^2(Sigma3)
/// pairing of convolve_restrict(f, g) with h (no conjugation on h).
inline cplx trilinear_surface_form(const SurfaceDensity& f, const SurfaceDensity& g, const SurfaceDensity& h,
                                   double eps) {
  const auto t = SlabTensor::build(*f.patch, *g.patch, *h.patch, eps);
  return t.form(f.values, g.values, h.values);
}

struct EstimateReport {
  double theta = 0, R = 0, beta = 0, b_hoelder = 0, eps = 0, h = 0;
  double measured_constant = 0;
  double predicted_bound = 0;
  double ratio = 0;
  bool converged = false;
  bool pass = false;
  int iterations = 0;
  std::vector<double> history;  // quotient after every sweep
};

struct ExtremizerOptions {
  int max_iterations = 5000;
  // Relative change required over `window` consecutive sweeps. Looser values
  // stop on the plateau around the symmetric saddle of plane families.
  double tolerance = 1e-9;
  int window = 3;
  bool random_start = false;  // complex Gaussian start instead of jittered ones
  std::uint64_t seed = 0;
};

struct ExtremizerResult {
  double quotient = 0;
  std::array<std::vector<cplx>, 3> vectors;  // unit vectors in the weight-normalized variables
  std::vector<double> history;
  bool converged = false;
  bool monotone = true;
};

/// Higher-order power iteration for max |T(F,G,H)| over unit vectors, where
/// T_ijk = c_ijk / sqrt(w1_i w2_j w3_k). Each block update replaces one
/// argument by the normalized conjugate partial contraction, which is the
/// exact maximizer with the other two frozen, so the quotient never drops.
/// The default start is the all-ones vector with a seeded positive jitter;
/// the exact all-ones vector can sit on a symmetric critical point.
inline ExtremizerResult maximize_form(const SlabTensor& t, const ExtremizerOptions& opt = {}) {
  std::array<std::vector<double>, 3> rs;
  for (int m = 0; m < 3; ++m) {
    rs[static_cast<std::size_t>(m)].resize(t.size(m));
    for (std::size_t k = 0; k < t.size(m); ++k) rs[static_cast<std::size_t>(m)][k] = 1.0 / std::sqrt(t.weights(m)[k]);
  }
  ExtremizerResult res;
  auto rng = stream_rng(opt.seed, 1);
  std::normal_distribution<double> gauss;
  for (int m = 0; m < 3; ++m) {
    auto& v = res.vectors[static_cast<std::size_t>(m)];
    v.resize(t.size(m));
    for (auto& x : v) x = opt.random_start ? cplx(gauss(rng), gauss(rng)) : cplx(1.0 + 0.3 * gauss(rng));
  }
  auto normalize = [](std::vector<cplx>& v) {
    double s = 0;
    for (const auto& x : v) s += std::norm(x);
    s = std::sqrt(s);
    if (s == 0) return 0.0;
    for (auto& x : v) x /= s;
    return s;
  };
  for (auto& v : res.vectors) normalize(v);
  // contraction in the normalized variables: scale inputs by r, output by r
  auto partial = [&](int free) {
    const int a = free == 0 ? 1 : 0, b = free == 2 ? 1 : 2;
    std::vector<cplx> va = res.vectors[static_cast<std::size_t>(a)], vb = res.vectors[static_cast<std::size_t>(b)];
    for (std::size_t k = 0; k < va.size(); ++k) va[k] *= rs[static_cast<std::size_t>(a)][k];
    for (std::size_t k = 0; k < vb.size(); ++k) vb[k] *= rs[static_cast<std::size_t>(b)][k];
    auto out = t.contract(free, va, vb);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::conj(out[k] * rs[static_cast<std::size_t>(free)][k]);
    return out;
  };
  double prev = 0;
  int stable = 0;
  for (int it = 0; it < opt.max_iterations; ++it) {
    double q = 0;
    for (int m = 0; m < 3; ++m) {
      auto v = partial(m);
      q = normalize(v);
      if (q == 0) break;
      res.vectors[static_cast<std::size_t>(m)] = std::move(v);
    }
    if (!std::isfinite(q)) throw NumericalError("maximize_form: non-finite quotient");
    if (!res.history.empty() && q < res.history.back() * (1 - 1e-12)) res.monotone = false;
    res.history.push_back(q);
    if (q == 0) {
      res.converged = true;
      break;
    }
    stable = (prev > 0 && std::abs(q - prev) <= opt.tolerance * q) ? stable + 1 : 0;
    prev = q;
    if (stable >= opt.window) {
      res.converged = true;
      break;
    }
  }
  res.quotient = res.history.empty() ? 0.0 : res.history.back();
  return res;
}

/// Sharp-constant search for a triple: measured constant against theta^{-1/2}.
inline EstimateReport estimate_constant(const std::array<GraphPatch, 3>& triple, double eps,
                                        const ExtremizerOptions& opt = {}, double theta = -1) {
  EstimateReport rep;
  rep.theta = theta > 0 ? theta : geometry::theta_min(triple).theta;
  require(rep.theta >= 1e-6, "estimate_constant: theta below 1e-6");
  const auto& p3 = triple[2].params();
  rep.R = p3.R;
  rep.beta = p3.beta;
  rep.b_hoelder = p3.b_hoelder;
  rep.eps = eps;
  rep.h = normal_resolution(triple[0], triple[1], triple[2]);
  const auto t = SlabTensor::build(triple[0], triple[1], triple[2], eps);
  const auto ex = maximize_form(t, opt);
  if (!ex.monotone) throw NumericalError("estimate_constant: extremizer quotient decreased");
  rep.measured_constant = ex.quotient;
  rep.history = ex.history;
  rep.iterations = static_cast<int>(ex.history.size());
  rep.converged = ex.converged;
  rep.predicted_bound = 1.0 / std::sqrt(rep.theta);
  rep.ratio = rep.measured_constant / rep.predicted_bound;
  rep.pass = rep.converged;
  return rep;
}

/// Node counts for the tilted-plane family. The second surface carries the
/// extremizer's thin strip (width ~ theta) and is refined across it.
struct TiltedPlaneLattice {
  int first = 32;
  int second_fine = 128;
  int second_coarse = 39;
  int third = 48;
};

/// Unit squares Sigma1 = {x1 = 0}, Sigma2 = {x2 = 0} and a plane Sigma3 with
/// normal (sqrt(1 - theta^2), 0, theta) through the centre of their sum set,
/// so |d| = theta everywhere. theta = 1 gives the three coordinate planes.
inline std::array<GraphPatch, 3> tilted_planes(double theta, const TiltedPlaneLattice& lat = {}) {
  require(theta > 0 && theta <= 1, "tilted_planes: theta must lie in (0, 1]");
  const double s = std::sqrt(1 - theta * theta);
  const Eigen::Vector3d e1 = Eigen::Vector3d::UnitX(), e2 = Eigen::Vector3d::UnitY(), e3 = Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d nu(s, 0, theta), t1(theta, 0, -s);
  MatrixXd G1(3, 3), G2(3, 3), G3(3, 3);
  G1 << e2, e3, e1;
  G2 << e1, e3, e2;
  G3 << t1, e2, nu;
  const GraphPatch::Params P{1.0, 1.0, 3.0};
  using geometry::Lattice;
  auto s1 = GraphPatch::from_formula(3, Lattice({0.0, 0.0}, {1.0, 1.0}, {lat.first, lat.first}),
                                     geometry::plane_formula(), G1, P);
  auto s2 = GraphPatch::from_formula(3, Lattice({0.0, 0.0}, {1.0, 1.0}, {lat.second_fine, lat.second_coarse}),
                                     geometry::plane_formula(), G2, P);
  const Eigen::Vector3d y0 = G3.transpose() * Eigen::Vector3d(0.5, 0.5, 1.0);
  auto s3 = GraphPatch::from_formula(
      3, Lattice({y0[0] - 1.2, y0[1] - 0.55}, {y0[0] + 1.2, y0[1] + 0.55}, {lat.third, lat.third / 2 + 3}),
      geometry::plane_formula(1, y0[2]), G3, P);
  return {std::move(s1), std::move(s2), std::move(s3)};
}

/// Default slab thickness: a quarter of theta, but never below 2.5 lattice steps.
inline double default_eps(const std::array<GraphPatch, 3>& t, double theta) {
  return std::max(0.25 * theta, 2.5 * normal_resolution(t[0], t[1], t[2]));
}

struct SweepPoint {
  double theta = 0;
  EstimateReport report;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  LineFit fit;  // log measured constant against log theta
};

using FamilyGenerator = std::function<std::array<GraphPatch, 3>(double theta)>;

/// Measured constant over a theta family and its log-log slope against the
/// requested theta values. Requires at
/// least five values spanning a decade, each with R^beta b / theta <= cap.
inline SweepResult theta_scaling_sweep(const FamilyGenerator& family, const std::vector<double>& thetas,
                                       const ExtremizerOptions& opt = {}, double cap = 1e3) {
  require(thetas.size() >= 5, "theta_scaling_sweep: need at least 5 theta values");
  const auto [lo, hi] = std::minmax_element(thetas.begin(), thetas.end());
  require(*hi / *lo >= 10.0 * (1 - 1e-12), "theta_scaling_sweep: theta values must span at least one decade");
  SweepResult out;
  std::vector<double> xs, ys;
  for (double th : thetas) {
    const auto triple = family(th);
    const double theta = geometry::theta_min(triple).theta;
    const auto& p = triple[2].params();
    require(theta > 0 && std::pow(p.R, p.beta) * p.b_hoelder / theta <= cap,
            "theta_scaling_sweep: R^beta b / theta exceeds the declared cap");
    auto rep = estimate_constant(triple, default_eps(triple, theta), opt, theta);
    xs.push_back(th);
    ys.push_back(rep.measured_constant);
    out.points.push_back({theta, std::move(rep)});
  }
  out.fit = fit_loglog(xs, ys);
  return out;
}

struct InvarianceResult {
  double theta = 0, theta_mapped = 0, theta_inverse = 0;
  double constant = 0, constant_mapped = 0, constant_inverse = 0;
  double r = 0;          // C' theta'^{1/2} / (C theta^{1/2}) for T
  double r_inverse = 0;  // same for T^{-1}
};

/// Compares the theta-normalized sharp constants of a triple and of its
/// images under T and T^{-1} (re-graphed).
inline InvarianceResult transform_invariance_check(const std::array<GraphPatch, 3>& triple, const MatrixXd& T,
                                                   const ExtremizerOptions& opt = {}) {
  InvarianceResult r;
  r.theta = geometry::theta_min(triple).theta;
  const auto base = estimate_constant(triple, default_eps(triple, r.theta), opt, r.theta);
  r.constant = base.measured_constant;
  auto mapped = [&](const MatrixXd& M, double& theta_out, double& c_out) {
    const auto img = geometry::apply_linear(triple, M);
    require(!img.theta.degenerate, "transform_invariance_check: mapped triple is degenerate");
    theta_out = img.theta.theta;
    c_out = estimate_constant(img.patches, default_eps(img.patches, theta_out), opt, theta_out).measured_constant;
    return c_out * std::sqrt(theta_out) / (r.constant * std::sqrt(r.theta));
  };
  r.r = mapped(T, r.theta_mapped, r.constant_mapped);
  r.r_inverse = mapped(T.inverse(), r.theta_inverse, r.constant_inverse);
  return r;
}

}  // namespace translab::conv
