#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "translab/core.hpp"
#include "translab/decomp/grid.hpp"

namespace translab::decomp {

using Eigen::Vector3d;

inline double angle_between(const Vector3d& x, const Vector3d& y) {
  // atan2 form stays accurate for nearly parallel vectors
  return std::atan2(x.cross(y).norm(), x.dot(y));
}

namespace detail {

inline std::vector<Vector3d> icosahedron_vertices() {
  const double g = (1 + std::sqrt(5.0)) / 2;
  std::vector<Vector3d> v;
  for (double s1 : {-1.0, 1.0})
    for (double s2 : {-1.0, 1.0}) {
      v.emplace_back(0, s1, s2 * g);
      v.emplace_back(s1, s2 * g, 0);
      v.emplace_back(s2 * g, 0, s1);
    }
  return v;
}

/// The 20 faces: vertex triples at mutual distance 2 (the edge length).
inline std::vector<std::array<int, 3>> icosahedron_faces(const std::vector<Vector3d>& v) {
  std::vector<std::array<int, 3>> f;
  auto edge = [&](int a, int b) { return std::abs((v[a] - v[b]).squaredNorm() - 4.0) < 1e-9; };
  const int n = static_cast<int>(v.size());
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c)
        if (edge(a, b) && edge(b, c) && edge(a, c)) f.push_back({a, b, c});
  return f;
}

struct Geodesic {
  std::vector<Vector3d> points;
  std::vector<double> reach;   // per point: max circumradius of the triangles at it
  double covering_radius = 0;  // max spherical circumradius over the small triangles
};

/// Frequency-f subdivision of the icosahedron projected to the sphere.
inline Geodesic geodesic_grid(int f) {
  const auto v = icosahedron_vertices();
  const auto faces = icosahedron_faces(v);
  Geodesic g;
  std::map<std::array<long long, 3>, int> ids;
  auto id_of = [&](const Vector3d& p) {
    const Vector3d u = p.normalized();
    const std::array<long long, 3> key{std::llround(u.x() * 1e9), std::llround(u.y() * 1e9),
                                       std::llround(u.z() * 1e9)};
    auto [it, fresh] = ids.emplace(key, static_cast<int>(g.points.size()));
    if (fresh) {
      g.points.push_back(u);
      g.reach.push_back(0.0);
    }
    return it->second;
  };
  for (const auto& face : faces) {
    const Vector3d &a = v[face[0]], &b = v[face[1]], &c = v[face[2]];
    std::vector<std::vector<int>> node(f + 1);
    for (int i = 0; i <= f; ++i)
      for (int j = 0; i + j <= f; ++j)
        node[i].push_back(id_of(i * a + j * b + (f - i - j) * c));
    auto circum = [&](int p, int q, int r) {
      const Vector3d &P = g.points[p], &Q = g.points[q], &R = g.points[r];
      Vector3d n = (Q - P).cross(R - P).normalized();
      if (n.dot(P) < 0) n = -n;
      const double rad = angle_between(n, P);
      g.covering_radius = std::max(g.covering_radius, rad);
      for (int k : {p, q, r}) g.reach[k] = std::max(g.reach[k], rad);
    };
    for (int i = 0; i < f; ++i)
      for (int j = 0; i + j < f; ++j) {
        circum(node[i][j], node[i + 1][j], node[i][j + 1]);
        if (i + j + 1 < f) circum(node[i + 1][j], node[i + 1][j + 1], node[i][j + 1]);
      }
  }
  return g;
}

}  // namespace detail

/// Geodesic-disc caps centred on an icosahedral grid refined until its
/// covering radius is at most 1/(2A). Each cap's radius is the largest
/// circumradius of the grid triangles at its centre (plus rounding slack):
/// every triangle then lies in the union of its vertices' caps, openings stay
/// <= 1/A, and the smaller triangles near the icosahedron vertices do not
/// pick up a fourth overlapping cap. Indices follow the generation order.
class CapSet {
 public:
  /// #caps <= count_constant * A^2 for every A the construction supports.
  static constexpr double count_constant = 48.0;

  explicit CapSet(long A) : A_(A) {
    require(is_dyadic(A), "CapSet: A must be a power of two >= 1");
    const double target = 0.5 / static_cast<double>(A);
    for (int f = 1;; ++f) {
      auto g = detail::geodesic_grid(f);
      if (g.covering_radius <= target) {
        frequency_ = f;
        centers_ = std::move(g.points);
        covering_ = g.covering_radius;
        for (double r : g.reach) radii_.push_back(std::min(target, r * (1 + 1e-9)));
        break;
      }
      require(f < 4096, "CapSet: refinement did not reach the target radius");
    }
    for (double r : radii_) cos_radii_.push_back(std::cos(r));
    radius_ = *std::max_element(radii_.begin(), radii_.end());
  }

  long A() const { return A_; }
  double radius() const { return radius_; }  // largest cap radius
  double radius(std::size_t j) const { return radii_.at(j); }
  int frequency() const { return frequency_; }
  double covering_radius() const { return covering_; }
  std::size_t size() const { return centers_.size(); }
  const Vector3d& center(std::size_t j) const { return centers_.at(j); }
  const std::vector<Vector3d>& centers() const { return centers_; }

  /// x must be a unit vector.
  bool contains(std::size_t j, const Vector3d& x) const { return centers_[j].dot(x) >= cos_radii_[j]; }

  /// Cover function chi(x) = number of caps containing x.
  int cover(const Vector3d& x) const {
    int c = 0;
    for (std::size_t j = 0; j < centers_.size(); ++j) c += centers_[j].dot(x) >= cos_radii_[j];
    return c;
  }
  std::vector<int> members(const Vector3d& x) const {
    std::vector<int> out;
    for (std::size_t j = 0; j < centers_.size(); ++j)
      if (centers_[j].dot(x) >= cos_radii_[j]) out.push_back(static_cast<int>(j));
    return out;
  }

  /// Smallest and largest nearest-neighbour angle between centres.
  std::pair<double, double> separation() const {
    double lo = pi, hi = 0;
    for (std::size_t i = 0; i < centers_.size(); ++i) {
      std::size_t best = i;
      double dot = -2;
      for (std::size_t j = 0; j < centers_.size(); ++j)
        if (i != j && centers_[i].dot(centers_[j]) > dot) {
          dot = centers_[i].dot(centers_[j]);
          best = j;
        }
      const double a = angle_between(centers_[i], centers_[best]);
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
    return {lo, hi};
  }

 private:
  long A_ = 1;
  double radius_ = 0.5;
  std::vector<double> radii_, cos_radii_;
  int frequency_ = 1;
  double covering_ = 0;
  std::vector<Vector3d> centers_;
};

/// Minimal angle between lines through caps j1 and j2. For geodesic discs of
/// radii r1, r2 the infimum is max(0, min(g, pi - g) - r1 - r2), g the centre angle.
inline double cap_angle(std::size_t j1, std::size_t j2, const CapSet& caps) {
  require(j1 < caps.size() && j2 < caps.size(), "cap_angle: index outside the cap set");
  const double g = angle_between(caps.center(j1), caps.center(j2));
  return std::max(0.0, std::min(g, pi - g) - (caps.radius(j1) + caps.radius(j2)));
}

/// Per-frequency cap membership on a torus: for each nonzero wavevector the
/// caps containing its direction and the cover count chi.
class CapTable {
 public:
  CapTable(std::shared_ptr<const CapSet> caps, const Torus& torus) : caps_(std::move(caps)), torus_(torus) {
    require(caps_ != nullptr, "CapTable: null cap set");
    members_.resize(torus.size());
    for (std::size_t k = 0; k < torus.size(); ++k) {
      const Vector3d xi = torus.wavevector(k);
      if (xi.squaredNorm() == 0) continue;
      members_[k] = caps_->members(xi.normalized());
      if (members_[k].empty()) throw NumericalError("CapTable: direction not covered by any cap");
    }
  }

  const CapSet& caps() const { return *caps_; }
  const Torus& torus() const { return torus_; }
  /// chi_j(xi/|xi|) / chi(xi/|xi|) at spatial frequency index k; 0 at xi = 0.
  double weight(std::size_t j, std::size_t k) const {
    const auto& m = members_[k];
    if (m.empty()) return 0.0;
    const bool in = std::find(m.begin(), m.end(), static_cast<int>(j)) != m.end();
    return in ? 1.0 / static_cast<double>(m.size()) : 0.0;
  }
  const std::vector<int>& members(std::size_t k) const { return members_[k]; }

 private:
  std::shared_ptr<const CapSet> caps_;
  Torus torus_;
  std::vector<std::vector<int>> members_;
};

}  // namespace translab::decomp
