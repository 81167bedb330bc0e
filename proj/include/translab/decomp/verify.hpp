#pragma once

#include <random>

#include "translab/decomp/caps.hpp"
#include "translab/decomp/grid.hpp"
#include "translab/decomp/localize.hpp"

namespace translab::decomp {

/// Smallest dyadic N with N >= r.
inline long covering_band(double r) {
  long N = 1;
  while (N < r) N *= 2;
  return N;
}

struct PartitionReport {
  long max_n = 0, max_l = 0, A = 0;
  long freq_bands = 0, mod_bands_s = 0, mod_bands_w = 0;
  std::size_t caps = 0;
  double err_frequency = 0;  // || sum_N P_N u - u || / max |u|
  double err_mod_s = 0, err_mod_wplus = 0, err_mod_wminus = 0;
  double err_caps = 0;       // off xi = 0
  double max_error() const { return std::max({err_frequency, err_mod_s, err_mod_wplus, err_mod_wminus, err_caps}); }
};

/// Sums the projections of a random field over every band that reaches the
/// grid (and over all caps of size A) and compares with the field. The grid
/// is fitted to max_n, max_l as for block computations.
inline PartitionReport partition_check(std::array<int, 3> nodes, int nt, long max_n, long max_l, long A,
                                       std::uint64_t seed) {
  const auto g = std::make_shared<const SpaceTimeGrid>(SpaceTimeGrid::for_bands(nodes, nt, max_n, max_l));
  Field u = Field::zeros(g, Side::physical);
  auto rng = stream_rng(seed, 0);
  std::normal_distribution<double> gauss;
  for (auto& v : u.values) v = cplx(gauss(rng), gauss(rng));
  const Field c = u.fourier();
  PartitionReport rep;
  rep.max_n = max_n;
  rep.max_l = max_l;
  rep.A = A;
  const auto& torus = g->space();
  const auto fbands = dyadic_range(covering_band(torus.xi_max()));
  const auto sbands = dyadic_range(covering_band(g->tau_nyquist() + std::pow(torus.xi_max(), 2)));
  const auto wbands = dyadic_range(covering_band(g->tau_nyquist() + torus.xi_max()));
  rep.freq_bands = static_cast<long>(fbands.size());
  rep.mod_bands_s = static_cast<long>(sbands.size());
  rep.mod_bands_w = static_cast<long>(wbands.size());
  auto sum_of = [&](const auto& bands, auto loc) {
    Field s = Field::zeros(g, Side::fourier);
    for (long b : bands) project_into(s, c, loc(b));
    return max_rel_diff(s, c);
  };
  rep.err_frequency = sum_of(fbands, [](long N) { return Localizer::frequency(N); });
  rep.err_mod_s = sum_of(sbands, [](long L) { return Localizer::mod_s(L); });
  rep.err_mod_wplus = sum_of(wbands, [](long L) { return Localizer::mod_w(L, 1); });
  rep.err_mod_wminus = sum_of(wbands, [](long L) { return Localizer::mod_w(L, -1); });

  auto caps = std::make_shared<const CapSet>(A);
  rep.caps = caps->size();
  const CapTable table(caps, torus);
  Field s = Field::zeros(g, Side::fourier);
  for (std::size_t j = 0; j < caps->size(); ++j) project_into(s, c, Localizer::cap_of(A, j), &table);
  Field off = c;
  const std::size_t zero = torus.index_of({0, 0, 0});
  for (int it = 0; it < g->nt(); ++it) {
    rep.err_caps = std::max(rep.err_caps, std::abs(s.values[g->flatten(zero, it)]));
    off.values[g->flatten(zero, it)] = 0;
  }
  rep.err_caps = std::max(rep.err_caps, max_rel_diff(s, off));
  return rep;
}

struct CoverReport {
  long A = 0;
  std::size_t caps = 0;
  double count_ratio = 0;  // #caps / A^2
  int chi_min = 0, chi_max = 0;
  std::size_t directions = 0;
  bool pass() const { return chi_min >= 1 && chi_max <= 3 && count_ratio <= CapSet::count_constant; }
};

/// Cover count chi over uniformly random directions.
inline CoverReport cap_cover_check(long A, std::size_t directions, std::uint64_t seed) {
  const CapSet caps(A);
  CoverReport r;
  r.A = A;
  r.caps = caps.size();
  r.count_ratio = static_cast<double>(caps.size()) / static_cast<double>(A * A);
  r.directions = directions;
  auto rng = stream_rng(seed, static_cast<std::uint64_t>(A));
  std::normal_distribution<double> gauss;
  r.chi_min = 1 << 30;
  for (std::size_t t = 0; t < directions; ++t) {
    const Vector3d x = Vector3d(gauss(rng), gauss(rng), gauss(rng)).normalized();
    const int c = caps.cover(x);
    r.chi_min = std::min(r.chi_min, c);
    r.chi_max = std::max(r.chi_max, c);
  }
  return r;
}

}  // namespace translab::decomp
