#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <vector>

#include "translab/core.hpp"
#include "translab/fft.hpp"

namespace translab::decomp {

/// FFT index k in [0, n) as a signed frequency in [-n/2, n/2).
inline int signed_index(int k, int n) { return k < n / 2 ? k : k - n; }

/// Periodic box of side 2*pi*lambda per axis. Wavevectors sit on the
/// lattice Z^3 / lambda.
class Torus {
 public:
  Torus() = default;
  Torus(double lambda, std::array<int, 3> nodes) : lambda_(lambda), nodes_(nodes) {
    require(lambda > 0 && std::isfinite(lambda), "Torus: lambda must be positive");
    for (int n : nodes) require(n >= 2 && is_dyadic(n), "Torus: nodes per axis must be a power of two >= 2");
  }

  double lambda() const { return lambda_; }
  const std::array<int, 3>& nodes() const { return nodes_; }
  std::vector<int> dims() const { return {nodes_[0], nodes_[1], nodes_[2]}; }
  std::size_t size() const {
    return static_cast<std::size_t>(nodes_[0]) * nodes_[1] * nodes_[2];
  }
  double side() const { return 2 * pi * lambda_; }
  double spacing(int axis) const { return side() / nodes_[axis]; }

  std::array<int, 3> unflatten(std::size_t k) const {
    const int i2 = static_cast<int>(k % nodes_[2]);
    k /= nodes_[2];
    const int i1 = static_cast<int>(k % nodes_[1]);
    return {static_cast<int>(k / nodes_[1]), i1, i2};
  }
  std::size_t flatten(const std::array<int, 3>& i) const {
    return (static_cast<std::size_t>(i[0]) * nodes_[1] + i[1]) * nodes_[2] + i[2];
  }

  Eigen::Vector3d position(std::size_t k) const {
    const auto i = unflatten(k);
    return {i[0] * spacing(0), i[1] * spacing(1), i[2] * spacing(2)};
  }
  Eigen::Vector3d wavevector(std::size_t k) const {
    const auto i = unflatten(k);
    return {signed_index(i[0], nodes_[0]) / lambda_, signed_index(i[1], nodes_[1]) / lambda_,
            signed_index(i[2], nodes_[2]) / lambda_};
  }
  /// Index of the wavevector lambda^-1 * m (components taken modulo n).
  std::size_t index_of(const std::array<int, 3>& m) const {
    std::array<int, 3> i{};
    for (int a = 0; a < 3; ++a) i[a] = ((m[a] % nodes_[a]) + nodes_[a]) % nodes_[a];
    return flatten(i);
  }

  /// Largest |xi| resolved in every direction (radius of the inscribed ball).
  double xi_nyquist() const {
    return *std::min_element(nodes_.begin(), nodes_.end()) / (2 * lambda_);
  }
  /// Largest |xi| present anywhere on the lattice.
  double xi_max() const {
    double s = 0;
    for (int n : nodes_) s += std::pow(n / (2 * lambda_), 2);
    return std::sqrt(s);
  }

  bool operator==(const Torus& o) const { return lambda_ == o.lambda_ && nodes_ == o.nodes_; }

 private:
  double lambda_ = 1;
  std::array<int, 3> nodes_{2, 2, 2};
};

/// Torus times a periodic time window of nt samples spaced dt.
/// Flat index: spatial index * nt + time index (time fastest).
class SpaceTimeGrid {
 public:
  SpaceTimeGrid() = default;
  SpaceTimeGrid(Torus space, int nt, double dt) : space_(std::move(space)), nt_(nt), dt_(dt) {
    require(nt >= 2 && is_dyadic(nt), "SpaceTimeGrid: time nodes must be a power of two >= 2");
    require(dt > 0 && std::isfinite(dt), "SpaceTimeGrid: dt must be positive");
  }

  /// Grid on the given node counts whose box and time step are fitted so that
  /// |xi| up to 2 max_n and |tau| up to 2 max_l + max_n^2 are resolved.
  static SpaceTimeGrid for_bands(std::array<int, 3> nodes, int nt, long max_n, long max_l) {
    require(is_dyadic(max_n) && is_dyadic(max_l), "SpaceTimeGrid: band limits must be dyadic");
    const int nmin = *std::min_element(nodes.begin(), nodes.end());
    const double lambda = nmin / (4.0 * static_cast<double>(max_n));
    const double tau_need = 2.0 * max_l + static_cast<double>(max_n * max_n);
    SpaceTimeGrid g(Torus(lambda, nodes), nt, pi / tau_need);
    g.check_bands(max_n, max_l);
    return g;
  }

  const Torus& space() const { return space_; }
  int nt() const { return nt_; }
  double dt() const { return dt_; }
  double period() const { return nt_ * dt_; }
  std::size_t size() const { return space_.size() * static_cast<std::size_t>(nt_); }
  std::vector<int> dims() const {
    const auto& n = space_.nodes();
    return {n[0], n[1], n[2], nt_};
  }

  std::size_t flatten(std::size_t spatial, int it) const { return spatial * nt_ + it; }
  double time(int it) const { return it * dt_; }
  double tau(int it) const { return 2 * pi * signed_index(it, nt_) / period(); }
  double tau_nyquist() const { return pi / dt_; }
  double xi_nyquist() const { return space_.xi_nyquist(); }

  void check_bands(long max_n, long max_l) const {
    require(xi_nyquist() >= 2.0 * max_n - 1e-12,
            "SpaceTimeGrid: spatial resolution below 2 * largest frequency band");
    require(tau_nyquist() >= 2.0 * max_l + static_cast<double>(max_n * max_n) - 1e-9,
            "SpaceTimeGrid: temporal resolution below 2 * largest modulation + N^2");
  }

  bool operator==(const SpaceTimeGrid& o) const {
    return space_ == o.space_ && nt_ == o.nt_ && dt_ == o.dt_;
  }

 private:
  Torus space_;
  int nt_ = 2;
  double dt_ = 1;
};

enum class Side { physical, fourier };

/// Complex samples on a grid, either physical values or Fourier
/// coefficients c_k = FFT(u)_k / size, so that u = sum_k c_k e^{i(xi.x + tau t)}
/// and the grid-averaged L2 norm equals the l2 norm of the coefficients.
template <class Grid>
struct GridField {
  std::shared_ptr<const Grid> grid;
  Side side = Side::physical;
  std::vector<cplx> values;

  static GridField zeros(std::shared_ptr<const Grid> g, Side s) {
    require(g != nullptr, "field: null grid");
    return GridField{g, s, std::vector<cplx>(g->size(), cplx(0))};
  }

  std::size_t size() const { return values.size(); }

  GridField& to_fourier() {
    if (side == Side::fourier) return *this;
    Fft(grid->dims()).forward(values);
    const double inv = 1.0 / static_cast<double>(values.size());
    for (auto& v : values) v *= inv;
    side = Side::fourier;
    return *this;
  }
  GridField& to_physical() {
    if (side == Side::physical) return *this;
    Fft(grid->dims()).inverse(values);
    side = Side::physical;
    return *this;
  }
  GridField fourier() const {
    GridField f = *this;
    return f.to_fourier();
  }
  GridField physical() const {
    GridField f = *this;
    return f.to_physical();
  }

  /// Grid-averaged L2 norm: sqrt(mean |u|^2) = sqrt(sum |c_k|^2).
  double norm() const {
    double s = 0;
    for (const auto& v : values) s += std::norm(v);
    return std::sqrt(side == Side::fourier ? s : s / static_cast<double>(values.size()));
  }

  GridField& operator+=(const GridField& o) {
    require(*grid == *o.grid && side == o.side, "field: adding fields on different grids or sides");
    for (std::size_t k = 0; k < values.size(); ++k) values[k] += o.values[k];
    return *this;
  }
};

using Field = GridField<SpaceTimeGrid>;
using SpatialField = GridField<Torus>;

/// Largest relative difference max|a - b| / max|b|.
template <class Grid>
double max_rel_diff(const GridField<Grid>& a, const GridField<Grid>& b) {
  require(a.size() == b.size(), "max_rel_diff: size mismatch");
  double num = 0, den = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num = std::max(num, std::abs(a.values[k] - b.values[k]));
    den = std::max(den, std::abs(b.values[k]));
  }
  return den > 0 ? num / den : num;
}

}  // namespace translab::decomp
