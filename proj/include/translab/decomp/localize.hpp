#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "translab/core.hpp"
#include "translab/decomp/caps.hpp"
#include "translab/decomp/grid.hpp"

namespace translab::decomp {

/// Even C-infinity bump: 1 on |r| <= 1, 0 on |r| >= 2, and in between the
/// smooth step e(t) / (e(t) + e(1 - t)) with e(t) = exp(-1/t), t = 2 - |r|.
inline double bump(double r) {
  const double a = std::abs(r);
  if (a <= 1) return 1.0;
  if (a >= 2) return 0.0;
  const double t = 2 - a;
  const double e0 = std::exp(-1 / t), e1 = std::exp(-1 / (1 - t));
  return e0 / (e0 + e1);
}

/// psi_1 = bump, psi_N(r) = bump(r/N) - bump(2r/N). Partial sums telescope:
/// sum_{N <= M} psi_N(r) = bump(r / M).
inline double psi(long N, double r) {
  if (N == 1) return bump(r);
  const double n = static_cast<double>(N);
  return bump(r / n) - bump(2 * r / n);
}

/// The cutoff family {psi_N : N <= max_n}.
struct PsiPartition {
  long max_n = 1;

  explicit PsiPartition(long max_n_) : max_n(max_n_) {
    require(is_dyadic(max_n), "psi partition: max N must be a power of two >= 1");
  }
  std::vector<long> bands() const { return dyadic_range(max_n); }
  double operator()(long N, double r) const {
    require(is_dyadic(N) && N <= max_n, "psi partition: band outside the family");
    return psi(N, r);
  }
  double sum(double r) const {
    double s = 0;
    for (long N : bands()) s += psi(N, r);
    return s;
  }
};

/// Dispersion relation whose distance defines the modulation.
enum class Space { S, Wplus, Wminus };

inline std::string to_string(Space s) {
  switch (s) {
    case Space::S: return "S";
    case Space::Wplus: return "W+";
    case Space::Wminus: return "W-";
  }
  return "?";
}

/// tau + |xi|^2 (Schroedinger) or tau +- |xi| (half-wave).
inline double modulation(Space s, double xi_norm, double tau) {
  switch (s) {
    case Space::S: return tau + xi_norm * xi_norm;
    case Space::Wplus: return tau + xi_norm;
    case Space::Wminus: return tau - xi_norm;
  }
  return 0;
}

struct Localizer {
  enum class Kind { frequency, modulation, cap };
  Kind kind = Kind::frequency;
  long value = 1;          // N, L or A
  Space space = Space::S;  // modulation only
  std::size_t cap = 0;     // cap only

  static Localizer frequency(long N) { return make(Kind::frequency, N, Space::S, 0); }
  static Localizer mod_s(long L) { return make(Kind::modulation, L, Space::S, 0); }
  static Localizer mod_w(long L, int sign) {
    require(sign == 1 || sign == -1, "localizer: wave sign must be +1 or -1");
    return make(Kind::modulation, L, sign > 0 ? Space::Wplus : Space::Wminus, 0);
  }
  static Localizer cap_of(long A, std::size_t j) { return make(Kind::cap, A, Space::S, j); }

 private:
  static Localizer make(Kind k, long v, Space s, std::size_t j) {
    require(is_dyadic(v), "localizer: dyadic value must be a power of two >= 1");
    Localizer l;
    l.kind = k;
    l.value = v;
    l.space = s;
    l.cap = j;
    return l;
  }
};

/// acc += (multiplier of loc) * c, with c and acc Fourier-side on one grid.
/// Bands lying entirely beyond the largest frequency or modulation present on
/// the grid are rejected, as are cap localizers without a matching table.
inline void project_into(Field& acc, const Field& c, const Localizer& loc, const CapTable* caps = nullptr) {
  require(c.side == Side::fourier && acc.side == Side::fourier, "project_into: fields must be Fourier-side");
  require(*acc.grid == *c.grid, "project_into: fields on different grids");
  const auto& g = *c.grid;
  const auto& torus = g.space();
  const double v = static_cast<double>(loc.value);
  switch (loc.kind) {
    case Localizer::Kind::frequency:
      require(loc.value == 1 || v / 2 < torus.xi_max(), "project: frequency band beyond grid resolution");
      break;
    case Localizer::Kind::modulation: {
      const double reach = g.tau_nyquist() + (loc.space == Space::S ? std::pow(torus.xi_max(), 2) : torus.xi_max());
      require(loc.value == 1 || v / 2 < reach, "project: modulation band beyond grid resolution");
      break;
    }
    case Localizer::Kind::cap:
      require(caps != nullptr, "project: cap localizer needs a cap table");
      require(caps->caps().A() == loc.value, "project: cap table built for a different A");
      require(caps->torus() == torus, "project: cap table built for a different torus");
      require(loc.cap < caps->caps().size(), "project: cap index outside the cap set");
      break;
  }
  const int nt = g.nt();
  std::vector<double> tau(nt);
  for (int it = 0; it < nt; ++it) tau[it] = g.tau(it);
  for (std::size_t k = 0; k < torus.size(); ++k) {
    const double r = torus.wavevector(k).norm();
    const cplx* in = c.values.data() + g.flatten(k, 0);
    cplx* row = acc.values.data() + g.flatten(k, 0);
    switch (loc.kind) {
      case Localizer::Kind::frequency: {
        const double w = psi(loc.value, r);
        if (w != 0)
          for (int it = 0; it < nt; ++it) row[it] += w * in[it];
        break;
      }
      case Localizer::Kind::modulation:
        for (int it = 0; it < nt; ++it) row[it] += psi(loc.value, modulation(loc.space, r, tau[it])) * in[it];
        break;
      case Localizer::Kind::cap: {
        const double w = caps->weight(loc.cap, k);
        if (w != 0)
          for (int it = 0; it < nt; ++it) row[it] += w * in[it];
        break;
      }
    }
  }
}

/// Applies the localizer's Fourier multiplier. The result is Fourier-side.
inline Field project(const Field& field, const Localizer& loc, const CapTable* caps = nullptr) {
  const Field c = field.fourier();
  Field out = Field::zeros(c.grid, Side::fourier);
  project_into(out, c, loc, caps);
  return out;
}

}  // namespace translab::decomp
