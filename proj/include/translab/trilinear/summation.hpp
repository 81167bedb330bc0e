#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "translab/core.hpp"
#include "translab/decomp/localize.hpp"
#include "translab/decomp/norms.hpp"
#include "translab/parallel.hpp"
#include "translab/region.hpp"
#include "translab/trilinear/form.hpp"
#include "translab/trilinear/verify.hpp"

// Both trilinear estimates on random multi-block fields:
//   |I(Fv, Fu1, Fu2)| <~ ||u1||_{X^S_{-s,1/2,inf}} ||u2||_{X^S_{s,1/2,inf}} ||v||_{X^W_{sigma,1/2,inf}}
//   |I(Fv, Fu1, Fu2)| <~ ||u1||_{X^S_{s,1/2,inf}}  ||u2||_{X^S_{s,1/2,inf}} ||v||_{X^W_{-1-sigma,1/2,inf}}
// and the variants with ||u2||_{X^S_{s,b,inf}}, b < 1/2. Norms are rescaled
// by the square root of the Fourier cell so that the ratios approximate the
// continuum ones.

namespace translab::tri {

using decomp::Localizer;

/// Which dyadic frequencies each factor may occupy in one generator.
struct Generator {
  std::string name;
  std::vector<long> n_v, n_u1, n_u2;
};

struct SummationConfig {
  double s = 0.3, sigma = -0.3;
  int sign = 1;
  std::vector<double> bs{0.25, 0.35, 0.45};
  std::array<int, 3> nodes{16, 16, 16};
  int nt = 32;
  long max_n = 8, max_l = 8;  // grid fitted to these bands; fields use half of each
  int draws = 4;              // per generator
  std::uint64_t seed = 0;
  double margin_factor = 8;
};

/// The interaction types of the dyadic summation: high-high to low, very
/// small wave frequency, high-low and low-high, and every block at once.
inline std::vector<Generator> default_generators(long n_max) {
  const auto all = dyadic_range(n_max);
  std::vector<Generator> g;
  g.push_back({"high-high-low", all, {n_max}, {n_max}});
  g.push_back({"small-wave", {1}, all, all});
  g.push_back({"high-low", {n_max}, {1}, {n_max}});
  g.push_back({"low-high", {n_max}, {n_max}, {1}});
  g.push_back({"mixed", all, all, all});
  return g;
}

struct SummationSample {
  std::string generator;
  int draw = 0;
  double I = 0;
  double rhs1 = 0, rhs2 = 0;
  double ratio1 = 0, ratio2 = 0;
  std::vector<double> ratio1_b, ratio2_b;  // per b, X^S_{s,b,inf} on u2
};

struct SummationReport {
  double s = 0, sigma = 0;
  int sign = 1;
  std::vector<double> bs;
  std::vector<SummationSample> samples;
  double margin1 = 0, margin2 = 0;  // margin_factor times the median over generators of the max ratio
  bool pass1 = true, pass2 = true;
  std::vector<bool> pass_b;         // both estimates with X_{s,b,inf} on u2 within the margins
  bool pass() const { return pass1 && pass2; }
};

/// Random field with nonnegative Fourier transform: Rayleigh coefficients
/// localised to P_N S_L (or the wave modulation) for N in `ns` and every L up
/// to max_l, each block with its own Rayleigh amplitude.
inline decomp::Field random_blocks(const std::shared_ptr<const SpaceTimeGrid>& g, Space space,
                                   const std::vector<long>& ns, long max_l, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto rayleigh = [&]() { return std::hypot(gauss(rng), gauss(rng)); };
  auto out = decomp::Field::zeros(g, decomp::Side::fourier);
  for (long N : ns)
    for (long L : dyadic_range(max_l)) {
      auto f = decomp::Field::zeros(g, decomp::Side::fourier);
      for (auto& c : f.values) c = rayleigh();
      const double amp = rayleigh();
      f = decomp::project(f, Localizer::frequency(N));
      f = decomp::project(f, space == Space::S ? Localizer::mod_s(L) : Localizer::mod_w(L, space == Space::Wplus ? 1 : -1));
      for (auto& c : f.values) c *= amp;
      out += f;
    }
  return out;
}

/// Median over the points whose ratio is at least 1% of the largest. Nearly
/// resonant generators (high-low gives ~1e-3) carry no scale information and
/// would otherwise drag the margin towards zero.
inline double sweep_median(const std::vector<double>& r) {
  const double top = *std::max_element(r.begin(), r.end());
  std::vector<double> kept;
  for (double x : r)
    if (x >= 1e-2 * top) kept.push_back(x);
  return median(kept);
}

/// Evaluates both estimates over the generator sweep. Rejects (s, sigma)
/// outside the admissible region, naming the violated inequality.
inline SummationReport summation_check(const SummationConfig& cfg, std::vector<Generator> gens = {}) {
  require_region(cfg.s, cfg.sigma, "summation_check");
  require(cfg.sign == 1 || cfg.sign == -1, "summation_check: sign must be +1 or -1");
  require(cfg.draws >= 1, "summation_check: need at least one draw per generator");
  for (double b : cfg.bs) require(b >= 0 && b < 0.5, "summation_check: b must lie in [0, 1/2)");
  require(cfg.max_n >= 2 && cfg.max_l >= 2, "summation_check: need max_n, max_l >= 2");
  const long n_max = cfg.max_n / 2, l_max = cfg.max_l / 2;
  if (gens.empty()) gens = default_generators(n_max);
  for (const auto& g : gens)
    for (const auto* set : {&g.n_v, &g.n_u1, &g.n_u2}) {
      require(!set->empty(), "summation_check: generator '" + g.name + "' has an empty frequency set");
      for (long N : *set)
        require(is_dyadic(N) && N <= n_max, "summation_check: generator '" + g.name + "' uses an unresolved band");
    }
  const auto grid = std::make_shared<const SpaceTimeGrid>(SpaceTimeGrid::for_bands(cfg.nodes, cfg.nt, cfg.max_n, cfg.max_l));
  const double cell = fourier_cell(*grid);
  const Space wave = cfg.sign > 0 ? Space::Wplus : Space::Wminus;

  SummationReport rep;
  rep.s = cfg.s;
  rep.sigma = cfg.sigma;
  rep.sign = cfg.sign;
  rep.bs = cfg.bs;
  const std::size_t total = gens.size() * static_cast<std::size_t>(cfg.draws);
  rep.samples.resize(total);
  parallel_for(total, [&](std::size_t i) {
    const auto& gen = gens[i / cfg.draws];
    const int draw = static_cast<int>(i % cfg.draws);
    auto rng = stream_rng(cfg.seed, i);
    const auto v = random_blocks(grid, wave, gen.n_v, l_max, rng);
    const auto u1 = random_blocks(grid, Space::S, gen.n_u1, l_max, rng);
    const auto u2 = random_blocks(grid, Space::S, gen.n_u2, l_max, rng);
    const auto bv = decomp::resolved_block_norms(v, wave), b1 = decomp::resolved_block_norms(u1, Space::S),
               b2 = decomp::resolved_block_norms(u2, Space::S);
    auto X = [&](const decomp::BlockNorms& b, double s, double bb) {
      return std::sqrt(cell) * decomp::bourgain_from_blocks(b, s, bb, INFINITY);
    };
    SummationSample smp;
    smp.generator = gen.name;
    smp.draw = draw;
    smp.I = std::abs(trilinear_I(v, u1, u2));
    const double v1 = X(bv, cfg.sigma, 0.5), v2 = X(bv, -1 - cfg.sigma, 0.5);
    const double a1 = X(b1, -cfg.s, 0.5), a2 = X(b1, cfg.s, 0.5);
    smp.rhs1 = a1 * X(b2, cfg.s, 0.5) * v1;
    smp.rhs2 = a2 * X(b2, cfg.s, 0.5) * v2;
    smp.ratio1 = smp.I / smp.rhs1;
    smp.ratio2 = smp.I / smp.rhs2;
    for (double b : cfg.bs) {
      const double w = X(b2, cfg.s, b);
      smp.ratio1_b.push_back(smp.I / (a1 * w * v1));
      smp.ratio2_b.push_back(smp.I / (a2 * w * v2));
    }
    rep.samples[i] = std::move(smp);
  });
  // each generator is one sweep point whose ratio is the max over its draws
  std::vector<double> r1(gens.size(), 0.0), r2(gens.size(), 0.0);
  for (std::size_t i = 0; i < total; ++i) {
    r1[i / cfg.draws] = std::max(r1[i / cfg.draws], rep.samples[i].ratio1);
    r2[i / cfg.draws] = std::max(r2[i / cfg.draws], rep.samples[i].ratio2);
  }
  rep.margin1 = cfg.margin_factor * sweep_median(r1);
  rep.margin2 = cfg.margin_factor * sweep_median(r2);
  rep.pass_b.assign(cfg.bs.size(), true);
  for (const auto& smp : rep.samples) {
    rep.pass1 = rep.pass1 && smp.ratio1 <= rep.margin1;
    rep.pass2 = rep.pass2 && smp.ratio2 <= rep.margin2;
    for (std::size_t k = 0; k < cfg.bs.size(); ++k)
      rep.pass_b[k] = rep.pass_b[k] && smp.ratio1_b[k] <= rep.margin1 && smp.ratio2_b[k] <= rep.margin2;
  }
  return rep;
}

}  // namespace translab::tri
