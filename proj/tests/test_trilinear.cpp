#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "translab/trilinear.hpp"

using namespace translab;
using namespace translab::tri;
using decomp::Field;
using decomp::Side;
using decomp::SpaceTimeGrid;
using decomp::Torus;
using oracle::brute_force_I;

namespace {

std::shared_ptr<const SpaceTimeGrid> small_grid(int n, int nt, double lambda = 0.7, double dt = 0.3) {
  return std::make_shared<const SpaceTimeGrid>(Torus(lambda, {n, n, n}), nt, dt);
}

Field random_fourier(std::shared_ptr<const SpaceTimeGrid> g, std::uint64_t seed) {
  auto rng = stream_rng(seed, 7);
  std::normal_distribution<double> gauss;
  Field f = Field::zeros(g, Side::fourier);
  for (auto& v : f.values) v = cplx(gauss(rng), gauss(rng));
  return f;
}

EngineSettings quick_settings(int trials = 12, int sweeps = 6) {
  EngineSettings es;
  es.search.trials = trials;
  es.search.sweeps = sweeps;
  return es;
}

}  // namespace

TEST(TrilinearForm, ZeroArgumentGivesZero) {
  const auto g = small_grid(4, 4);
  const auto a = random_fourier(g, 1), b = random_fourier(g, 2);
  const auto z = Field::zeros(g, Side::fourier);
  EXPECT_EQ(trilinear_I(z, a, b), cplx(0));
  EXPECT_EQ(trilinear_I(a, z, b), cplx(0));
  EXPECT_EQ(trilinear_I(a, b, z), cplx(0));
}

TEST(TrilinearForm, SingleModes) {
  const auto g = small_grid(4, 8);
  auto mode = [&](std::array<int, 3> m, int t) {
    Field f = Field::zeros(g, Side::fourier);
    f.values[g->flatten(g->space().index_of(m), (t + 8) % 8)] = 1.0;
    return f;
  };
  const double cell = fourier_cell(*g);
  // zeta1 - zeta2 = (1, 0, -1; 2) matches the f mode
  const cplx hit = trilinear_I(mode({1, 0, -1}, 2), mode({1, 1, 0}, 1), mode({0, 1, 1}, -1));
  EXPECT_NEAR(std::abs(hit - cell * cell), 0.0, 1e-12 * cell * cell);
  EXPECT_NEAR(std::abs(trilinear_I(mode({1, 0, 0}, 2), mode({1, 1, 0}, 1), mode({0, 1, 1}, -1))), 0.0, 1e-14);
  // (-2, 0, 0) is a grid frequency; (2, 0, 0) equals it only periodically
  EXPECT_NEAR(std::abs(trilinear_I(mode({-2, 0, 0}, 0), mode({-1, 0, 0}, 0), mode({1, 0, 0}, 0))), cell * cell, 1e-12);
  EXPECT_NEAR(std::abs(trilinear_I(mode({-2, 0, 0}, 0), mode({1, 0, 0}, 0), mode({-1, 0, 0}, 0))), 0.0, 1e-14);
}

TEST(TrilinearForm, MatchesBruteForce) {
  for (auto [n, nt, seed] : {std::tuple{2, 4, 3}, std::tuple{4, 4, 4}, std::tuple{4, 8, 5}, std::tuple{8, 8, 6}}) {
    const auto g = small_grid(n, nt, 0.5 + 0.1 * n, 0.2);
    const auto f = random_fourier(g, seed), a = random_fourier(g, seed + 10), b = random_fourier(g, seed + 20);
    const cplx fast = trilinear_I(f, a, b), slow = brute_force_I(f, a, b);
    EXPECT_LE(std::abs(fast - slow), 1e-8 * std::abs(slow)) << n << "^3 x " << nt;
  }
}

TEST(TrilinearForm, GridMismatchRejected) {
  const auto a = random_fourier(small_grid(4, 4), 1), b = random_fourier(small_grid(4, 8), 2);
  EXPECT_THROW(trilinear_I(a, a, b), InputError);
}

TEST(Region, LatticeAgreesWithIntegerOracle) {
  // sigma = i / 10, s = k / 10: compare in exact integer arithmetic
  for (int i = -10; i <= 10; ++i)
    for (int k = -10; k <= 10; ++k) {
      const bool inside = i > -5 && i <= k && k <= i + 10 && 2 * k > i + 5;
      const auto v = region_violations(k / 10.0, i / 10.0);
      EXPECT_EQ(v.empty(), inside) << "s=" << k / 10.0 << " sigma=" << i / 10.0;
    }
}

TEST(Region, NamesViolatedInequality) {
  try {
    require_region(0, -0.6, "check");
    FAIL() << "expected rejection";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("sigma > -1/2"), std::string::npos);
  }
  EXPECT_EQ(region_violations(0.9, -0.3), std::vector<std::string>{"s <= sigma + 1"});
  EXPECT_EQ(region_violations(-0.2, -0.1), (std::vector<std::string>{"sigma <= s", "2s > sigma + 1/2"}));
  EXPECT_TRUE(region_violations(0.3, -0.3).empty());
}

TEST(Cases, NamesRoundTrip) {
  for (const auto& [c, name] : case_names()) EXPECT_EQ(parse_case(name), c);
  EXPECT_THROW(parse_case("bilinear"), InputError);
}

TEST(Cases, HypothesesNamed) {
  CaseSpec c;
  c.id = Case::low_high_a;
  c.N1 = 1;
  c.N2 = 16;
  c.N = 16;
  c.L2 = 256;
  const auto v = hypothesis_violations(c);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0], "L2 << N2^2");
  EXPECT_THROW(verify_case(c), InputError);

  CaseSpec t;
  t.id = Case::trans_low_mod;
  t.N = t.N1 = t.N2 = 16;
  t.A = 4;
  t.j1 = 0;
  t.j2 = 0;  // same cap: alpha = 0
  EXPECT_EQ(hypothesis_violations(t), std::vector<std::string>{"alpha(j1, j2) ~ 1/A"});
  const auto [j1, j2] = pick_caps(4, true);
  t.j1 = j1;
  t.j2 = j2;
  EXPECT_TRUE(hypothesis_violations(t).empty());
  t.A = 16;
  EXPECT_FALSE(hypothesis_violations(t).empty());  // A << N1 fails
}

TEST(Cases, PredictedBounds) {
  CaseSpec c;
  c.id = Case::bilinear_ss;
  c.N1 = 2;
  c.N2 = 16;
  c.L1 = 4;
  EXPECT_DOUBLE_EQ(predicted_bound(c), 2.0 / 4.0 * 2.0);
  c.id = Case::hhl_hm;
  c.N = 16;
  c.N1 = c.N2 = 8;
  c.L = 256;
  c.L1 = 1;
  // N1^{-1/2} (L L1 L2)^{1/2} (maxL / N1^2)^{-1/2} = 8^{-1/2} 16 / 2
  EXPECT_DOUBLE_EQ(predicted_bound(c), 16.0 / std::sqrt(8.0) / 2.0);
  c.id = Case::small_wave;
  c.L = 16;
  c.L1 = 4;
  c.L2 = 64;
  EXPECT_DOUBLE_EQ(predicted_bound(c), 2.0);
}

TEST(Lattice, QuotientMatchesDirectConvolution) {
  auto u = lattice_block(Space::Wplus, 1, 1, 0.5, 0.5), v = lattice_block(Space::S, 1, 1, 0.5, 0.5);
  v = reflect(v);
  const LatticeBilinear op(u, v);
  auto rng = stream_rng(9, 0);
  std::normal_distribution<double> gauss;
  std::vector<cplx> a(u.pts.size()), b(v.pts.size());
  for (auto& x : a) x = cplx(gauss(rng), gauss(rng));
  for (auto& x : b) x = cplx(gauss(rng), gauss(rng));
  // direct sum over pairs, points keyed by coordinates
  std::map<Point4, cplx> conv;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      const Point4 p = u.at(i), q = v.at(j);
      conv[{p[0] + q[0], p[1] + q[1], p[2] + q[2], p[3] + q[3]}] += a[i] * std::conj(b[j]);
    }
  double s = 0, na = 0, nb = 0;
  for (const auto& [k, c] : conv) s += std::norm(c);
  for (const auto& x : a) na += std::norm(x);
  for (const auto& x : b) nb += std::norm(x);
  const double cell = std::pow(0.5, 4);
  const double direct = std::sqrt(cell * s / (na * nb));
  EXPECT_NEAR(op.quotient(a, b), direct, 1e-10 * direct);
}

TEST(Lattice, ConjugationSymmetryIsExact) {
  CaseSpec c;
  c.id = Case::bilinear_ws;
  c.N = 2;
  c.N1 = 2;
  c.d = 1;
  const auto es = quick_settings(6, 4);
  const auto base = strichartz_ratio(StrKind::ws_cube, c, es);
  for (auto [c1, c2] : {std::pair{true, false}, std::pair{false, true}, std::pair{true, true}}) {
    CaseSpec v = c;
    v.conj1 = c1;
    v.conj2 = c2;
    const auto r = strichartz_ratio(StrKind::ws_cube, v, es);
    EXPECT_NEAR(r.max_found, base.max_found, 1e-10 * base.max_found);
    EXPECT_NEAR(r.best_trial, base.best_trial, 1e-10 * base.best_trial);
  }
  EXPECT_GE(base.max_found, base.best_trial);
  EXPECT_TRUE(base.crude_ok);
}

TEST(Radial, AgreesWithFineLattice) {
  // constant profiles on SS blocks: both engines approximate the same integral
  for (long N2 : {1L, 2L}) {
    auto g1 = make_factor(Space::S, 1, 1), g2 = make_factor(Space::S, N2, 1);
    for (auto* p : {&g1.b, &g2.b})
      for (std::size_t i = 0; i < p->bins(); ++i) p->w[i] = p->active[i] ? 1.0 : 0.0;
    const RadialResolution res;
    const double qr = radial_quotient(
        [&](const std::vector<RadialFactor>& f) { return bilinear_product(f[0], f[1], res); }, {g1, g2});
    const auto u = lattice_block(Space::S, 1, 1, 0.25, 0.25), v = lattice_block(Space::S, N2, 1, 0.25, 0.25);
    const LatticeBilinear op(u, v);
    const double ql = op.quotient(std::vector<cplx>(u.pts.size(), 1.0), std::vector<cplx>(v.pts.size(), 1.0));
    EXPECT_NEAR(qr, ql, 5e-3 * ql) << "N2=" << N2;
  }
}

TEST(Radial, SearchNeverDecreases) {
  CaseSpec c;
  c.id = Case::bilinear_ss;
  c.N1 = 2;
  c.N2 = 8;
  const auto r = verify_case(c, quick_settings());
  EXPECT_GE(r.max_found, r.best_trial);
  EXPECT_GT(r.best_trial, 0);
  EXPECT_TRUE(r.crude_ok);
}

TEST(Strichartz, SchroedingerSweepHasNoGrowth) {
  CaseSpec c;
  c.id = Case::bilinear_ss;
  const auto es = quick_settings();
  const double r0 = strichartz_ratio(StrKind::ss, c, es).ratio;  // N1 = N2 = L1 = L2 = 1
  // the ratio climbs while the two frequency blocks overlap and is flat once N2 >> N1
  const auto s = verify_sweep(c, "N2", {4, 8, 16, 32}, es);
  for (const auto& p : s.points) {
    EXPECT_LE(p.ratio, 4 * r0);
    EXPECT_GE(p.ratio, r0 / 4);
  }
  EXPECT_GE(s.ratio_slope, -0.2);
  EXPECT_LE(s.ratio_slope, 0.2);
  EXPECT_TRUE(s.pass);
}

TEST(Strichartz, WaveSignAndConjugationVariants) {
  CaseSpec c;
  c.id = Case::bilinear_ws;
  c.N = 2;
  c.N1 = 4;
  const auto es = quick_settings(8, 4);
  const double base = strichartz_ratio(StrKind::ws_annulus, c, es).max_found;
  for (int sign : {1, -1})
    for (bool conj : {false, true}) {
      CaseSpec v = c;
      v.sign = sign;
      v.conj2 = conj;
      EXPECT_NEAR(strichartz_ratio(StrKind::ws_annulus, v, es).max_found, base, 0.05 * base);
    }
}

TEST(Verify, TransverseSlope) {
  CaseSpec c;
  c.id = Case::trans_low_mod;
  c.N = c.N1 = c.N2 = 8;
  c.A = 4;
  for (int sign : {1, -1}) {
    c.sign = sign;
    const auto s = verify_sweep(c, "N1", {8, 16, 32});
    EXPECT_LE(s.slope, -0.5 + 0.15);
    EXPECT_NEAR(s.slope, s.predicted_slope, 0.15);
    EXPECT_TRUE(s.pass);
  }
}

TEST(Verify, SmallWaveWithinMargin) {
  CaseSpec c;
  c.id = Case::small_wave;
  c.N1 = c.N2 = 4;
  const auto s = verify_sweep(c, "N1", {4, 8}, quick_settings());
  for (const auto& p : s.points) {
    EXPECT_LE(p.ratio, s.margin);
    EXPECT_TRUE(p.crude_ok);
  }
}

TEST(Verify, LowHighVanishesBelowResonance) {
  CaseSpec c;
  c.id = Case::low_high_a;
  c.N1 = 2;
  c.N2 = c.N = 16;
  EXPECT_EQ(verify_case(c, quick_settings(4, 2)).max_found, 0.0);  // all modulations far below N2^2
  c.L = 256;
  EXPECT_GT(verify_case(c, quick_settings(4, 2)).max_found, 0.0);
}

TEST(Verify, CsvColumns) {
  CaseSpec c;
  c.id = Case::trans_low_mod;
  c.N = c.N1 = c.N2 = 8;
  c.A = 4;
  const auto s = verify_sweep(c, "N1", {8, 16});
  std::ostringstream os;
  write_csv(os, s);
  std::istringstream is(os.str());
  std::string header, row;
  std::getline(is, header);
  EXPECT_EQ(header.rfind("case,N,N1,N2,L,L1,L2,A,", 0), 0u);
  EXPECT_NE(header.find("max_ratio,predicted"), std::string::npos);
  EXPECT_NE(header.find("slope"), std::string::npos);
  int rows = 0;
  while (std::getline(is, row)) ++rows;
  EXPECT_EQ(rows, 2);
}

TEST(Volume, DisjointSupportsGiveZero) {
  VolumeParams p;
  EXPECT_EQ(volume_oracle(Eigen::Vector3d(100, 0, 0), 0, p), 0.0);
}

TEST(Volume, UnitBoxContainment) {
  VolumeParams p;
  p.N = 2;
  p.N1 = 1;
  p.d = 1;
  const double v = volume_sup(p);
  EXPECT_GT(v, 0);
  EXPECT_LE(v, p.d * p.d * p.d * 4);  // cube times the tau length of an L = 1 band
}

TEST(Volume, ScalesInverselyWithN1) {
  std::vector<double> n1s, vols;
  for (long N1 : {4L, 8L, 16L}) {
    VolumeParams p;
    p.N = 4;
    p.N1 = N1;
    p.d = 1;
    n1s.push_back(static_cast<double>(N1));
    vols.push_back(volume_sup(p) * static_cast<double>(N1));
  }
  const auto [lo, hi] = std::minmax_element(vols.begin(), vols.end());
  EXPECT_LE(*hi / *lo, 2.0);
}

TEST(Volume, OracleAgreesWithHistogramSup) {
  VolumeParams p;
  p.N = 4;
  p.N1 = 4;
  const Eigen::Vector3d xi(8, 0.5, 0);
  const double sup = volume_sup_tau(xi, p);
  double best = 0;
  for (double tau = -120; tau <= 40; tau += 0.01) best = std::max(best, volume_oracle(xi, tau, p));
  EXPECT_NEAR(best, sup, 0.02 * sup);
}

TEST(Resonance, Examples) {
  const Eigen::Vector3d a(1, 2, 3);
  EXPECT_EQ(resonance_gate(a, a, -1), 0.0);
  const Eigen::Vector3d b(-2, 0.5, 1);
  EXPECT_DOUBLE_EQ(resonance_gate(a, b, 1), std::abs(a.squaredNorm() - b.squaredNorm() + (a - b).norm()));
  EXPECT_DOUBLE_EQ(resonance_gate(b, a, -1), std::abs(b.squaredNorm() - a.squaredNorm() - (a - b).norm()));
  // |xi1| = 1, |xi2| = 16 in many directions: triangle inequality gives >= 238
  auto rng = stream_rng(3, 0);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < 2000; ++i) {
    const Eigen::Vector3d x(gauss(rng), gauss(rng), gauss(rng)), y(gauss(rng), gauss(rng), gauss(rng));
    for (int s : {1, -1}) EXPECT_GE(resonance_gate(x.normalized(), 16 * y.normalized(), s), 238 - 1e-9);
  }
}

TEST(Resonance, ExhaustiveSweep) {
  const auto minus = resonance_sweep(1, 16, -1);
  EXPECT_TRUE(minus.pass);
  EXPECT_GT(minus.pairs, 1000u);
  // block reading: xi1 = (-2, 0, 0), xi2 = (8, 0, 0) gives |4 - 64 + 10| = 50 < 64
  const auto plus = resonance_sweep(1, 16, 1);
  EXPECT_FALSE(plus.pass);
  EXPECT_LE(plus.min_value, 50 + 1e-9);
  for (int s : {1, -1}) EXPECT_TRUE(resonance_sweep(1, 16, s, 32, true).pass);
}

TEST(Summation, RejectsOutsideRegion) {
  SummationConfig cfg;
  cfg.s = 0;
  cfg.sigma = -0.6;
  try {
    summation_check(cfg);
    FAIL() << "expected rejection";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("sigma > -1/2"), std::string::npos);
  }
}

TEST(Summation, FieldsIndependentOfExponents) {
  SummationConfig cfg;
  cfg.draws = 1;
  const Generator single{"single", {4}, {4}, {4}};
  const auto r1 = summation_check(cfg, {single});
  cfg.s = 0.5;
  cfg.sigma = 0.0;
  const auto r2 = summation_check(cfg, {single});
  ASSERT_EQ(r1.samples.size(), 1u);
  EXPECT_EQ(r1.samples[0].I, r2.samples[0].I);
  EXPECT_NEAR(r1.samples[0].ratio1 * r1.samples[0].rhs1, r1.samples[0].I, 1e-12 * r1.samples[0].I);
  EXPECT_NE(r1.samples[0].rhs1, r2.samples[0].rhs1);
}

TEST(Summation, BoundedOverSweep) {
  SummationConfig cfg;
  cfg.draws = 2;
  const auto rep = summation_check(cfg);
  EXPECT_EQ(rep.samples.size(), 10u);
  EXPECT_TRUE(rep.pass());
  ASSERT_EQ(rep.pass_b.size(), 3u);
  for (const auto& s : rep.samples) {
    EXPECT_GT(s.I, 0);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_GE(s.ratio1_b[k], s.ratio1 * (1 - 1e-12));  // b < 1/2 weakens the norm
  }
}
