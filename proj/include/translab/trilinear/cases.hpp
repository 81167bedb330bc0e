#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "translab/core.hpp"
#include "translab/decomp/caps.hpp"
#include "translab/decomp/localize.hpp"

namespace translab::tri {

enum class Case { bilinear_ss, bilinear_ws, trans_low_mod, parallel_hh, hhl_lm, hhl_hm, low_high_a, low_high_b, small_wave };

inline const std::vector<std::pair<Case, std::string>>& case_names() {
  static const std::vector<std::pair<Case, std::string>> names = {
      {Case::bilinear_ss, "bilinear-SS"}, {Case::bilinear_ws, "bilinear-WS"}, {Case::trans_low_mod, "trans-low-mod"},
      {Case::parallel_hh, "parallel-hh"}, {Case::hhl_lm, "hhl-lm"},           {Case::hhl_hm, "hhl-hm"},
      {Case::low_high_a, "low-high-a"},   {Case::low_high_b, "low-high-b"},   {Case::small_wave, "small-wave"}};
  return names;
}

inline std::string to_string(Case c) {
  for (const auto& [k, v] : case_names())
    if (k == c) return v;
  return "?";
}

inline Case parse_case(const std::string& s) {
  for (const auto& [k, v] : case_names())
    if (v == s) return k;
  throw InputError("unknown case id '" + s + "'");
}

// Implied constants of the asymptotic relations, fixed once for every case:
//   a << b  <=>  2a <= b,   a <~ b  <=>  a <= 4b,   a ~ b  <=>  both within 4,
//   alpha ~ 1/A  <=>  alpha in [1/(4A), 4/A].
// << is one dyadic step so that A = 4 stays admissible at N1 = 8.
inline constexpr double rel_factor = 4.0;
inline constexpr double gap_factor = 2.0;
inline bool much_less(double a, double b) { return gap_factor * a <= b; }
inline bool lesssim(double a, double b) { return a <= rel_factor * b; }
inline bool comparable(double a, double b) { return lesssim(a, b) && lesssim(b, a); }

/// One dyadic configuration. N, L belong to the wave factor f; (N1, L1) and
/// (N2, L2) to the Schroedinger factors g1, g2. For the bilinear cases the
/// pair is (N1, L1), (N2, L2) for SS and (N, L), (N1, L1) for WS. A, j1, j2
/// are the cap size and indices of the angular cases; d the cube side of the
/// WS-cube estimate (0: whole annulus).
struct CaseSpec {
  Case id = Case::bilinear_ss;
  long N = 1, N1 = 1, N2 = 1;
  long L = 1, L1 = 1, L2 = 1;
  long A = 1;
  long j1 = -1, j2 = -1;
  long d = 0;
  int sign = 1;         // W+ or W-
  bool conj1 = false;   // conjugate the first factor (g1; the wave factor for WS)
  bool conj2 = false;   // conjugate the second factor (g2; the Schroedinger factor for WS)

  decomp::Space wave_space() const { return sign > 0 ? decomp::Space::Wplus : decomp::Space::Wminus; }
  long max_l() const { return std::max({L, L1, L2}); }
  long min_l() const { return std::min({L, L1, L2}); }

  std::string describe() const {
    std::ostringstream os;
    os << to_string(id) << " N=" << N << " N1=" << N1 << " N2=" << N2 << " L=" << L << " L1=" << L1 << " L2=" << L2;
    if (id == Case::trans_low_mod || id == Case::parallel_hh) os << " A=" << A << " j1=" << j1 << " j2=" << j2;
    if (d > 0) os << " d=" << d;
    os << " sign=" << (sign > 0 ? "+" : "-");
    if (conj1) os << " conj1";
    if (conj2) os << " conj2";
    return os.str();
  }
};

/// The violated hypotheses of the case, each named; empty when admissible.
inline std::vector<std::string> hypothesis_violations(const CaseSpec& c) {
  std::vector<std::string> v;
  auto need = [&](bool ok, const char* what) {
    if (!ok) v.emplace_back(what);
  };
  for (long x : {c.N, c.N1, c.N2, c.L, c.L1, c.L2, c.A})
    if (!is_dyadic(x)) {
      v.emplace_back("dyadic parameters (powers of two >= 1)");
      return v;
    }
  need(c.sign == 1 || c.sign == -1, "sign is +1 or -1");
  const double N = static_cast<double>(c.N), N1 = static_cast<double>(c.N1), N2 = static_cast<double>(c.N2);
  const double L2 = static_cast<double>(c.L2);
  const double Lmax = static_cast<double>(c.max_l());
  auto high_high = [&]() {
    need(much_less(1, N), "1 << N");
    need(lesssim(N, N1), "N <~ N1");
    need(comparable(N1, N2), "N1 ~ N2");
  };
  auto angular = [&](bool transverse) {
    if (c.j1 < 0 || c.j2 < 0) {
      v.emplace_back("cap indices j1, j2 given");
      return;
    }
    const decomp::CapSet caps(c.A);
    if (c.j1 >= static_cast<long>(caps.size()) || c.j2 >= static_cast<long>(caps.size())) {
      v.emplace_back("cap indices inside the cap set");
      return;
    }
    const double alpha = decomp::cap_angle(c.j1, c.j2, caps);
    const double inv = 1.0 / static_cast<double>(c.A);
    if (transverse)
      need(alpha >= inv / rel_factor && alpha <= rel_factor * inv, "alpha(j1, j2) ~ 1/A");
    else
      need(alpha <= rel_factor * inv, "alpha(j1, j2) <~ 1/A");
  };
  switch (c.id) {
    case Case::bilinear_ss:
      break;
    case Case::bilinear_ws:
      need(c.d >= 0, "cube side d >= 0");
      break;
    case Case::trans_low_mod:
      high_high();
      need(lesssim(Lmax, N1 * N1), "L, L1, L2 <~ N1^2");
      need(much_less(static_cast<double>(c.A), N1), "A << N1");
      angular(true);
      break;
    case Case::parallel_hh:
      high_high();
      need(comparable(static_cast<double>(c.A), N1), "A ~ N1");
      angular(false);
      break;
    case Case::hhl_lm:
      high_high();
      need(lesssim(Lmax, N1 * N1), "L, L1, L2 <~ N1^2");
      break;
    case Case::hhl_hm:
      need(lesssim(N, N1), "N <~ N1");
      need(comparable(N1, N2), "N1 ~ N2");
      need(lesssim(N1 * N1, Lmax), "N1^2 <~ max(L, L1, L2)");
      break;
    case Case::low_high_a:
      need(much_less(N1, N2), "N1 << N2");
      need(much_less(L2, N2 * N2), "L2 << N2^2");
      break;
    case Case::low_high_b:
      need(much_less(N1, N2), "N1 << N2");
      need(lesssim(N2 * N2, L2), "L2 >~ N2^2");
      break;
    case Case::small_wave:
      need(lesssim(N, 1), "N <~ 1");
      break;
  }
  return v;
}

inline void check_hypotheses(const CaseSpec& c) {
  const auto v = hypothesis_violations(c);
  if (v.empty()) return;
  std::ostringstream os;
  os << to_string(c.id) << ": hypothesis violated: ";
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  throw InputError(os.str());
}

/// Right-hand side of the case's estimate with unit implied constant.
inline double predicted_bound(const CaseSpec& c) {
  const double N = static_cast<double>(c.N), N1 = static_cast<double>(c.N1), N2 = static_cast<double>(c.N2);
  const double L = static_cast<double>(c.L), L1 = static_cast<double>(c.L1), L2 = static_cast<double>(c.L2);
  const double Lmax = static_cast<double>(c.max_l());
  const double lll = std::sqrt(L * L1 * L2);
  switch (c.id) {
    case Case::bilinear_ss:
      return N1 / std::sqrt(N2) * std::sqrt(L1 * L2);
    case Case::bilinear_ws: {
      const double m = c.d > 0 ? std::min(static_cast<double>(c.d), N1) : std::min(N, N1);
      return m / std::sqrt(N1) * std::sqrt(L * L1);
    }
    case Case::trans_low_mod:
    case Case::parallel_hh:
      return lll / std::sqrt(N1);
    case Case::hhl_lm:
      return lll / std::sqrt(N1) * std::log(N1);
    case Case::hhl_hm:
      return lll / std::sqrt(N1) / std::sqrt(Lmax / (N1 * N1));
    case Case::low_high_a:
      return N1 / std::sqrt(N2) * lll / std::sqrt(Lmax);
    case Case::low_high_b:
      return std::sqrt(N1) * std::sqrt(std::min(L, L1)) * std::sqrt(std::min(N1 * N1, std::max(L, L1)));
    case Case::small_wave:
      return std::sqrt(static_cast<double>(c.min_l()));
  }
  return 0;
}

/// Lebesgue measure of a dyadic block {|xi| in band N, |modulation| in band L}.
inline double block_volume(long N, long L) {
  const double n = static_cast<double>(N), l = static_cast<double>(L);
  const double r0 = N == 1 ? 0 : n / 2, r1 = 2 * n;
  const double mod = L == 1 ? 4 : 3 * l;
  return 4 * pi / 3 * (r1 * r1 * r1 - r0 * r0 * r0) * mod;
}

/// Support-volume bound: |I| <= ||f|| ||g1|| ||g2|| min(|supp|)^{1/2} by
/// Cauchy-Schwarz and Young; the bilinear analogue for ||u v||.
inline double crude_bound(const CaseSpec& c) {
  if (c.id == Case::bilinear_ss) return std::sqrt(std::min(block_volume(c.N1, c.L1), block_volume(c.N2, c.L2)));
  if (c.id == Case::bilinear_ws) return std::sqrt(std::min(block_volume(c.N, c.L), block_volume(c.N1, c.L1)));
  return std::sqrt(std::min({block_volume(c.N, c.L), block_volume(c.N1, c.L1), block_volume(c.N2, c.L2)}));
}

/// A cap pair for the angular cases: j1 = 0 and the j2 whose angle is
/// closest to 1/A (transverse, measured by alpha) or whose centres are
/// closest to angle 1/A (parallel; alpha is then ~0). Only j2 in the
/// hemisphere of cap 0 are considered; alpha measures lines, and the nearly
/// antipodal pairs it also admits are a different interaction.
inline std::pair<long, long> pick_caps(long A, bool transverse) {
  const decomp::CapSet caps(A);
  const double target = 1.0 / static_cast<double>(A);
  long best = -1;
  double err = 1e300;
  for (std::size_t j = 1; j < caps.size(); ++j) {
    if (caps.center(0).dot(caps.center(j)) <= 0) continue;
    const double a = transverse ? decomp::cap_angle(0, j, caps) : decomp::angle_between(caps.center(0), caps.center(j));
    if (std::abs(a - target) < err) {
      err = std::abs(a - target);
      best = static_cast<long>(j);
    }
  }
  require(best >= 0, "pick_caps: cap set has a single cap");
  return {0, best};
}

}  // namespace translab::tri
