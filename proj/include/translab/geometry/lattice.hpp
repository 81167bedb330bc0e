#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <numeric>
#include <vector>

#include "translab/core.hpp"

namespace translab::geometry {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Cell-centred rectangular lattice over a box U = prod [lo_i, hi_i].
///
/// Node i on axis a sits at lo_a + (i + 1/2) h_a with h_a = (hi_a - lo_a) / nodes_a,
/// so the node cells tile U exactly and constant densities integrate to |U|.
class Lattice {
public:
  Lattice() = default;
  Lattice(std::vector<double> lo, std::vector<double> hi, std::vector<int> nodes)
      : lo_(std::move(lo)), hi_(std::move(hi)), nodes_(std::move(nodes)) {
    require(!lo_.empty() && lo_.size() == hi_.size() && lo_.size() == nodes_.size(),
            "lattice: lo/hi/nodes must have equal non-zero length");
    for (std::size_t a = 0; a < lo_.size(); ++a) {
      require(nodes_[a] >= 2, "lattice: degenerate axis (fewer than 2 nodes)");
      require(hi_[a] > lo_[a], "lattice: empty axis interval");
    }
  }

  /// Same extent and node count on every axis.
  static Lattice cube(int dim, double lo, double hi, int nodes) {
    return Lattice(std::vector<double>(dim, lo), std::vector<double>(dim, hi),
                   std::vector<int>(dim, nodes));
  }

  int dim() const { return static_cast<int>(lo_.size()); }
  std::size_t size() const {
    return std::accumulate(nodes_.begin(), nodes_.end(), std::size_t{1},
                           [](std::size_t acc, int v) { return acc * static_cast<std::size_t>(v); });
  }
  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }
  const std::vector<int>& nodes() const { return nodes_; }
  double spacing(int axis) const { return (hi_[axis] - lo_[axis]) / nodes_[axis]; }
  double max_spacing() const {
    double h = 0;
    for (int a = 0; a < dim(); ++a) h = std::max(h, spacing(a));
    return h;
  }
  double cell_volume() const {
    double v = 1;
    for (int a = 0; a < dim(); ++a) v *= spacing(a);
    return v;
  }

  /// Row-major multi-index (last axis fastest).
  std::vector<int> unflatten(std::size_t k) const {
    std::vector<int> idx(dim());
    for (int a = dim() - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(k % nodes_[a]);
      k /= nodes_[a];
    }
    return idx;
  }
  std::size_t flatten(const std::vector<int>& idx) const {
    std::size_t k = 0;
    for (int a = 0; a < dim(); ++a) k = k * nodes_[a] + static_cast<std::size_t>(idx[a]);
    return k;
  }

  double coordinate(int axis, int i) const { return lo_[axis] + (i + 0.5) * spacing(axis); }

  VectorXd point(std::size_t k) const {
    const auto idx = unflatten(k);
    VectorXd x(dim());
    for (int a = 0; a < dim(); ++a) x[a] = coordinate(a, idx[a]);
    return x;
  }

  /// Flat indices of the nodes whose every multi-index component is a multiple of stride.
  std::vector<std::size_t> strided(int stride) const {
    require(stride >= 1, "lattice: stride must be >= 1");
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < size(); ++k) {
      const auto idx = unflatten(k);
      bool keep = true;
      for (int v : idx) keep = keep && (v % stride == 0);
      if (keep) out.push_back(k);
    }
    return out;
  }

  /// Central node (rounded down on even axes).
  std::size_t center() const {
    std::vector<int> idx(dim());
    for (int a = 0; a < dim(); ++a) idx[a] = (nodes_[a] - 1) / 2;
    return flatten(idx);
  }

private:
  std::vector<double> lo_, hi_;
  std::vector<int> nodes_;
};

}  // namespace translab::geometry
