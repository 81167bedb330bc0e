#pragma once

#include <array>
#include <vector>

#include "translab/core.hpp"
#include "translab/decomp/grid.hpp"
#include "translab/fft.hpp"

namespace translab::tri {

using decomp::Field;
using decomp::SpaceTimeGrid;

/// Volume of one Fourier cell (xi, tau) of the grid.
inline double fourier_cell(const SpaceTimeGrid& g) {
  const double l = g.space().lambda();
  return 2 * pi / g.period() / (l * l * l);
}

/// I(f, g1, g2) = cell^2 sum_{zeta1, zeta2} f(zeta1 - zeta2) g1(zeta1) g2(zeta2),
/// the frequencies taken as signed lattice indices and zeta1 - zeta2 counted
/// only where it lies on the grid (no wrap-around). Evaluated as a correlation
/// on a grid padded by 3/2 per axis, which is the smallest padding whose
/// aliases all fall outside the signed index range.
inline cplx trilinear_I(const Field& f, const Field& g1, const Field& g2) {
  require(f.grid && g1.grid && g2.grid, "trilinear_I: field without grid");
  require(*f.grid == *g1.grid && *f.grid == *g2.grid, "trilinear_I: fields live on different grids");
  const Field F = f.fourier(), G1 = g1.fourier(), G2 = g2.fourier();
  const auto& g = *F.grid;
  const auto n = g.dims();
  std::vector<int> p(4);
  for (int a = 0; a < 4; ++a) p[a] = 3 * n[a] / 2;
  const std::size_t total = static_cast<std::size_t>(p[0]) * p[1] * p[2] * p[3];
  std::vector<std::size_t> map(g.size());
  {
    std::size_t k = 0;
    for (int i0 = 0; i0 < n[0]; ++i0)
      for (int i1 = 0; i1 < n[1]; ++i1)
        for (int i2 = 0; i2 < n[2]; ++i2)
          for (int it = 0; it < n[3]; ++it, ++k) {
            const std::array<int, 4> idx{i0, i1, i2, it};
            std::size_t q = 0;
            for (int a = 0; a < 4; ++a) {
              const int s = decomp::signed_index(idx[a], n[a]);
              q = q * p[a] + static_cast<std::size_t>((s + p[a]) % p[a]);
            }
            map[k] = q;
          }
  }
  auto embed = [&](const Field& x) {
    std::vector<cplx> out(total, cplx(0));
    for (std::size_t k = 0; k < map.size(); ++k) out[map[k]] = x.values[k];
    return out;
  };
  auto a = embed(F), b = embed(G1), c = embed(G2);
  Fft fft(p);
  fft.inverse(a);
  fft.forward(b);
  fft.inverse(c);
  cplx acc(0);
  for (std::size_t k = 0; k < total; ++k) acc += a[k] * b[k] * c[k];
  const double cell = fourier_cell(g);
  return acc * (cell * cell / static_cast<double>(total));
}

}  // namespace translab::tri
