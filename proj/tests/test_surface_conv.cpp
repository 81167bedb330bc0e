#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "translab/surface_conv.hpp"

using namespace translab;
using namespace translab::conv;
using geometry::Lattice;
using oracle::dense_coordinate_tensor;
using oracle::dense_oracle;
using oracle::small_coordinate_triple;

namespace {

using Triple = std::array<GraphPatch, 3>;

std::shared_ptr<const GraphPatch> share(const GraphPatch& p) { return std::make_shared<const GraphPatch>(p); }

std::vector<cplx> random_values(std::size_t n, std::uint64_t seed) {
  auto rng = stream_rng(seed, 0);
  std::normal_distribution<double> g;
  std::vector<cplx> v(n);
  for (auto& x : v) x = cplx(g(rng), g(rng));
  return v;
}

}  // namespace

TEST(SurfaceDensity, PlaneAreaAndTiltedGraphArea) {
  for (double a : {0.5, 1.0, 3.0}) {
    auto p = share(GraphPatch::from_formula(3, Lattice::cube(2, 0, a, 17), geometry::plane_formula(),
                                            MatrixXd::Identity(3, 3), {1, 1, 10}));
    EXPECT_NEAR(SurfaceDensity::constant(p, 1.0).norm_sq(), a * a, 1e-3 * a * a);
  }
  // graph of phi(x) = x1 has surface element sqrt(2)
  const auto lat = Lattice::cube(2, 0, 1, 12);
  MatrixXd phi(1, lat.size());
  for (std::size_t k = 0; k < lat.size(); ++k) phi(0, static_cast<Eigen::Index>(k)) = lat.point(k)[0];
  auto p = share(GraphPatch::from_table(3, lat, phi, MatrixXd::Identity(3, 3), {1, 2, 10}));
  EXPECT_NEAR(SurfaceDensity::constant(p, 1.0).norm_sq(), std::sqrt(2.0), 1e-12);
}

TEST(ConvolveRestrict, MatchesFourFoldSumOracle) {
  const double z0 = 1.0, eps = 0.4;
  const auto t = small_coordinate_triple(6, 7, 6, 5, z0);
  const auto T = dense_coordinate_tensor(t, eps, z0);
  auto f = SurfaceDensity::constant(share(t[0]), 1.0);
  auto g = SurfaceDensity::constant(share(t[1]), 1.0);
  const auto out = convolve_restrict(f, g, share(t[2]), eps);
  const std::size_t K1 = t[0].size(), K2 = t[1].size(), K3 = t[2].size();
  for (std::size_t k = 0; k < K3; ++k) {
    double s = 0;
    for (std::size_t i = 0; i < K1; ++i)
      for (std::size_t j = 0; j < K2; ++j) s += T[(i * K2 + j) * K3 + k];
    EXPECT_NEAR(out.values[k].real(), s / t[2].weight(k), 1e-12);
  }
}

TEST(ConvolveRestrict, UnitDensitiesReproduceOverlapLength) {
  // continuum value: length of {b + d = z0, b, d in [0,1]}, i.e. 2 - z0; the
  // half-step offset keeps lattice sums away from the slab edges
  const double z0 = 1.0125;
  const auto t = small_coordinate_triple(40, 40, 40, 10, z0);
  auto out = convolve_restrict(SurfaceDensity::constant(share(t[0]), 1.0), SurfaceDensity::constant(share(t[1]), 1.0),
                               share(t[2]), 0.1);
  for (const auto& v : out.values) EXPECT_NEAR(v.real(), 2 - z0, 0.03);
}

TEST(ConvolveRestrict, DisjointSupportGivesZero) {
  const auto t = small_coordinate_triple(8, 8, 8, 6, 5.0);
  auto out = convolve_restrict(SurfaceDensity::constant(share(t[0]), 1.0), SurfaceDensity::constant(share(t[1]), 1.0),
                               share(t[2]), 0.3);
  for (const auto& v : out.values) EXPECT_EQ(v, cplx(0.0));
}

TEST(ConvolveRestrict, BilinearAndScaling) {
  const auto t = small_coordinate_triple(10, 12, 9, 8);
  auto p1 = share(t[0]), p2 = share(t[1]), p3 = share(t[2]);
  SurfaceDensity f1(p1, random_values(p1->size(), 1)), f2(p1, random_values(p1->size(), 2));
  SurfaceDensity g(p2, random_values(p2->size(), 3));
  const cplx a(0.7, -1.3);
  std::vector<cplx> mix(p1->size());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * f1.values[i] + f2.values[i];
  const auto lhs = convolve_restrict(SurfaceDensity(p1, mix), g, p3, 0.25);
  const auto r1 = convolve_restrict(f1, g, p3, 0.25), r2 = convolve_restrict(f2, g, p3, 0.25);
  for (std::size_t k = 0; k < lhs.values.size(); ++k)
    EXPECT_NEAR(std::abs(lhs.values[k] - (a * r1.values[k] + r2.values[k])), 0.0, 1e-12 * (1 + std::abs(lhs.values[k])));
}

TEST(ConvolveRestrict, ThinSlabRejected) {
  const auto t = small_coordinate_triple(8, 8, 8, 6);
  auto f = SurfaceDensity::constant(share(t[0]), 1.0);
  auto g = SurfaceDensity::constant(share(t[1]), 1.0);
  EXPECT_THROW(convolve_restrict(f, g, share(t[2]), 0.1), InputError);
}

TEST(TrilinearSurfaceForm, DualityWithConvolution) {
  const auto t = small_coordinate_triple(10, 12, 9, 8);
  auto p1 = share(t[0]), p2 = share(t[1]), p3 = share(t[2]);
  SurfaceDensity f(p1, random_values(p1->size(), 4)), g(p2, random_values(p2->size(), 5)),
      h(p3, random_values(p3->size(), 6));
  const auto c = convolve_restrict(f, g, p3, 0.25);
  cplx pairing{};
  for (std::size_t k = 0; k < c.values.size(); ++k) pairing += c.values[k] * h.values[k] * c.weights[k];
  const cplx form = trilinear_surface_form(f, g, h, 0.25);
  EXPECT_LE(std::abs(form - pairing), 1e-10 * std::abs(form));
  EXPECT_EQ(trilinear_surface_form(f, g, SurfaceDensity::constant(p3, 0.0), 0.25), cplx(0.0));
}

TEST(TrilinearSurfaceForm, UnitDensitiesGiveOverlapVolume) {
  // continuum: integral of the unit convolution over the unit square = 2 - z0
  const double z0 = 1.0125;
  const auto t = small_coordinate_triple(40, 40, 40, 10, z0);
  auto one = [](const GraphPatch& p) { return SurfaceDensity::constant(share(p), 1.0); };
  EXPECT_NEAR(trilinear_surface_form(one(t[0]), one(t[1]), one(t[2]), 0.1).real(), 2 - z0, 0.03);
}

TEST(EstimateConstant, MatchesDenseOracle) {
  const double z0 = 1.0, eps = 0.3;
  const auto t = small_coordinate_triple(7, 8, 6, 6, z0);
  ASSERT_LE(t[0].size() + t[1].size() + t[2].size(), 1000u);
  ExtremizerOptions opt;
  opt.tolerance = 1e-12;
  opt.max_iterations = 5000;
  const auto rep = estimate_constant(t, eps, opt);
  const double oracle = dense_oracle(dense_coordinate_tensor(t, eps, z0), t);
  EXPECT_TRUE(rep.converged);
  EXPECT_NEAR(rep.measured_constant, oracle, 1e-3 * oracle);
}

TEST(EstimateConstant, MonotoneAndStartIndependent) {
  const auto t = tilted_planes(0.3, {16, 48, 17, 24});
  const double eps = default_eps(t, 0.3);
  ExtremizerOptions opt;
  opt.tolerance = 1e-9;
  opt.max_iterations = 3000;
  const auto a = estimate_constant(t, eps, opt);
  for (std::size_t i = 1; i < a.history.size(); ++i) EXPECT_GE(a.history[i], a.history[i - 1] * (1 - 1e-12));
  opt.random_start = true;
  opt.seed = 42;
  const auto b = estimate_constant(t, eps, opt);
  EXPECT_NEAR(a.measured_constant, b.measured_constant, 1e-4 * a.measured_constant);
}

TEST(EstimateConstant, TiltedFamilyStaysWithinFactorFour) {
  double lo = 1e300, hi = 0;
  for (double th : {0.1, 0.2, 0.4, 0.8}) {
    const auto t = tilted_planes(th, {24, 96, 29, 32});
    const auto rep = estimate_constant(t, default_eps(t, th));
    const double scaled = rep.measured_constant * std::sqrt(th);
    lo = std::min(lo, scaled);
    hi = std::max(hi, scaled);
  }
  EXPECT_LE(hi / lo, 4.0);
}

TEST(EstimateConstant, EpsHalvingIsStable) {
  const double th = 0.25;
  const auto t = tilted_planes(th, {24, 128, 29, 32});
  const double eps = 0.25 * th * t[2].params().R / 3.0;
  const double c1 = estimate_constant(t, eps).measured_constant;
  const double c2 = estimate_constant(t, eps / 2).measured_constant;
  EXPECT_LE(std::abs(c2 - c1), 0.2 * c1);
}

TEST(ThetaSweep, TiltedPlaneSlopeNearMinusHalf) {
  const auto sweep = theta_scaling_sweep([](double th) { return tilted_planes(th, {24, 96, 29, 32}); },
                                         {0.05, 0.08, 0.125, 0.2, 0.32, 0.5});
  EXPECT_GE(sweep.fit.slope, -0.65);
  EXPECT_LE(sweep.fit.slope, -0.35);
}

TEST(ThetaSweep, ConstantThetaFamilyHasZeroSlope) {
  const auto fixed = tilted_planes(0.3, {16, 48, 17, 24});
  const auto sweep = theta_scaling_sweep([&](double) { return fixed; }, {0.05, 0.1, 0.2, 0.3, 0.5});
  EXPECT_NEAR(sweep.fit.slope, 0.0, 1e-12);
}

TEST(ThetaSweep, TooFewPointsRejected) {
  EXPECT_THROW(theta_scaling_sweep([](double th) { return tilted_planes(th); }, {0.3}), InputError);
}

TEST(TransformInvariance, OrthogonalScalingAndShear) {
  const auto t = tilted_planes(1.0, {20, 20, 20, 24});
  Eigen::Matrix3d Q = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  const auto rq = transform_invariance_check(t, Q);
  EXPECT_NEAR(rq.r, 1.0, 1e-2);
  EXPECT_NEAR(rq.r_inverse, 1.0, 1e-2);
  const auto rc = transform_invariance_check(t, 2.0 * MatrixXd::Identity(3, 3));
  EXPECT_NEAR(rc.r, 1.0, 0.25);
  MatrixXd S = MatrixXd::Identity(3, 3);
  S(0, 1) = 1.5;
  S(2, 0) = -0.7;
  const auto rs = transform_invariance_check(t, S);
  EXPECT_LE(rs.r, 2.2);
  EXPECT_LE(rs.r_inverse, 2.2);
}
