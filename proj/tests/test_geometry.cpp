#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "translab/geometry.hpp"

using namespace translab;
using namespace translab::geometry;

namespace {

GraphPatch plane(const VectorXd& normal, double side, int nodes, double R = 2.0) {
  return GraphPatch::from_formula(3, Lattice::cube(2, -side / 2, side / 2, nodes), plane_formula(),
                                  rotation_with_normal(normal.normalized()), {1.0, 1.0, R});
}

std::array<GraphPatch, 3> coordinate_planes(int nodes = 5) {
  return {plane(Eigen::Vector3d::UnitX(), 1, nodes), plane(Eigen::Vector3d::UnitY(), 1, nodes),
          plane(Eigen::Vector3d::UnitZ(), 1, nodes)};
}

NormalFrame frame_of(const VectorXd& v) { return {VectorXd::Zero(v.size()), v.normalized()}; }

}  // namespace

TEST(Lattice, CellCentredNodesTileTheBox) {
  Lattice lat({0.0, -1.0}, {2.0, 1.0}, {4, 8});
  EXPECT_DOUBLE_EQ(lat.coordinate(0, 0), 0.25);
  EXPECT_DOUBLE_EQ(lat.coordinate(1, 7), 0.875);
  EXPECT_NEAR(lat.cell_volume() * lat.size(), 4.0, 1e-14);
  for (std::size_t k = 0; k < lat.size(); ++k) EXPECT_EQ(lat.flatten(lat.unflatten(k)), k);
}

TEST(Lattice, RejectsDegenerateAxis) {
  EXPECT_THROW(Lattice({0.0}, {1.0}, {1}), InputError);
}

TEST(Regularity, FlatPatchHasZeroLhs) {
  auto p = plane(Eigen::Vector3d::UnitZ(), 1, 6);
  const auto rep = check_regularity(p);
  EXPECT_EQ(rep.lhs, 0.0);
  EXPECT_TRUE(rep.pass);
}

TEST(Regularity, HalfSquareMatchesBruteForce) {
  const int N = 64;
  Lattice lat({-1.0}, {1.0}, {N});
  auto p = GraphPatch::from_formula(2, lat, paraboloid_formula(0.5), MatrixXd::Identity(2, 2), {1.0, 3.0, 1.0});
  // independent evaluation: Dphi(x) = x, so sup |x| over nodes plus the
  // largest difference quotient over all node pairs
  double sup = 0, lip = 0;
  for (int i = 0; i < N; ++i) {
    const double xi = lat.coordinate(0, i);
    sup = std::max(sup, std::abs(xi));
    for (int j = i + 1; j < N; ++j) {
      const double xj = lat.coordinate(0, j);
      lip = std::max(lip, std::abs(xi - xj) / std::abs(xi - xj));
    }
  }
  const auto rep = check_regularity(p);
  EXPECT_NEAR(rep.lhs, sup + lip, 1e-12);
  EXPECT_NEAR(rep.lhs, 2.0, lat.spacing(0));
  EXPECT_TRUE(rep.pass);
}

TEST(Regularity, JumpInDerivativeBlowsUpWithRefinement) {
  double prev = 0;
  for (int N : {16, 32, 64}) {
    Lattice lat({-1.0}, {1.0}, {N});
    MatrixXd phi(1, N);
    for (int i = 0; i < N; ++i) phi(0, i) = std::abs(lat.coordinate(0, i));
    auto p = GraphPatch::from_table(2, lat, phi, MatrixXd::Identity(2, 2), {1.0, 10.0, 1.0});
    const auto rep = check_regularity(p);
    EXPECT_GT(rep.hoelder_term, 0.5 / lat.spacing(0));
    EXPECT_GT(rep.hoelder_term, prev);
    prev = rep.hoelder_term;
    if (N == 64) EXPECT_FALSE(rep.pass);
  }
}

TEST(Regularity, PairCapSubsamplesDeterministically) {
  auto p = GraphPatch::from_formula(3, Lattice::cube(2, -1, 1, 20), paraboloid_formula(), MatrixXd::Identity(3, 3),
                                    {0.5, 10.0, 3.0});
  const auto a = check_regularity(p, 1000, 7);
  const auto b = check_regularity(p, 1000, 7);
  const auto full = check_regularity(p);
  EXPECT_TRUE(a.subsampled);
  EXPECT_FALSE(full.subsampled);
  EXPECT_EQ(a.lhs, b.lhs);
  EXPECT_LE(a.lhs, full.lhs + 1e-15);
}

TEST(NormalFrameTest, FlatPatchFrameIsLastAxis) {
  auto p = plane(Eigen::Vector3d::UnitZ(), 1, 3);
  const auto f = normal_frame(p, 4);
  EXPECT_NEAR((f.vectors.col(0) - Eigen::Vector3d::UnitZ()).norm(), 0.0, 1e-15);
}

TEST(NormalFrameTest, ParaboloidNormals) {
  Lattice lat({0.25, -0.75}, {1.75, 0.75}, {3, 3});
  auto p = GraphPatch::from_formula(3, lat, paraboloid_formula(), MatrixXd::Identity(3, 3), {1.0, 10.0, 4.0});
  // node (1, 1) sits at x = (1, 0)
  const auto f = normal_frame(p, lat.flatten({1, 1}));
  EXPECT_NEAR((f.vectors.col(0) - Eigen::Vector3d(-2, 0, 1) / std::sqrt(5.0)).norm(), 0.0, 1e-14);

  Lattice lat0({-0.75, -0.75}, {0.75, 0.75}, {3, 3});
  auto p0 = GraphPatch::from_formula(3, lat0, paraboloid_formula(), MatrixXd::Identity(3, 3), {1.0, 10.0, 4.0});
  const auto f0 = normal_frame(p0, lat0.flatten({1, 1}));
  EXPECT_NEAR((f0.vectors.col(0) - Eigen::Vector3d::UnitZ()).norm(), 0.0, 1e-15);
  EXPECT_NEAR((p0.tangent(lat0.flatten({1, 1})).transpose() * f0.vectors).norm(), 0.0, 1e-15);
}

TEST(Transversality, CoordinateFrames) {
  EXPECT_NEAR(transversality_det(frame_of(Eigen::Vector3d::UnitX()), frame_of(Eigen::Vector3d::UnitY()),
                                 frame_of(Eigen::Vector3d::UnitZ())),
              1.0, 1e-15);
  for (double alpha : {0.1, 0.7, 1.4}) {
    const Eigen::Vector3d nu(std::sin(alpha), 0, std::cos(alpha));
    const double d = transversality_det(frame_of(Eigen::Vector3d::UnitX()), frame_of(Eigen::Vector3d::UnitY()),
                                        frame_of(nu));
    EXPECT_NEAR(std::abs(d), std::cos(alpha), 1e-15);
  }
}

TEST(Transversality, DimensionMismatchRejected) {
  NormalFrame two{VectorXd::Zero(3), MatrixXd::Identity(3, 2)};
  EXPECT_THROW(transversality_det(two, frame_of(Eigen::Vector3d::UnitY()), frame_of(Eigen::Vector3d::UnitZ())),
               InputError);
}

TEST(Transversality, InvariantUnderRebasing) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    MatrixXd R(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) R(i, j) = g(rng);
    const MatrixXd Q = gram_schmidt(R);  // random orthonormal columns
    NormalFrame f1{VectorXd::Zero(4), Q.leftCols(2)};
    NormalFrame f2{VectorXd::Zero(4), (Q.col(2) + 0.3 * Q.col(0)).normalized()};
    NormalFrame f3{VectorXd::Zero(4), (Q.col(3) - 0.5 * Q.col(1) + 0.2 * Q.col(2)).normalized()};
    const double d = transversality_det(f1, f2, f3);
    const double c = std::cos(g(rng)), s = std::sin(std::acos(c));
    Eigen::Matrix2d rot;
    rot << c, -s, s, c;
    NormalFrame f1r{f1.base, f1.vectors * rot};
    NormalFrame f2r{f2.base, -f2.vectors};
    EXPECT_NEAR(std::abs(transversality_det(f1r, f2r, f3)), std::abs(d), 1e-10);
  }
}

TEST(Transversality, ConeParaboloidFoliationDeterminantScalesLikeInverseA) {
  // S1: tau = -|xi|^2, S2: tau = |xi|^2 at unit xi1, xi2 separated by 1/A;
  // S3 cone frame completed by (v, 0) with v orthogonal to xi1 and xi2.
  const double N1 = 64;
  std::vector<double> As, ds;
  for (double A : {4.0, 8.0, 16.0, 32.0}) {
    const double ang = 1.0 / A;
    const Eigen::Vector3d x1(1, 0, 0), x2(std::cos(ang), std::sin(ang), 0);
    const Eigen::Vector3d x0 = (x1 + x2).normalized() * 0.5;
    const Eigen::Vector3d v = x1.cross(x2).normalized();
    Eigen::Vector4d n1, n2, n3, nv;
    n1 << 2 * x1, 1;
    n2 << 2 * x2, -1;
    n3 << x0 / x0.norm(), -N1;
    nv << v, 0;
    MatrixXd F3(4, 2);
    F3 << n3.normalized(), nv;
    const double d = transversality_det(frame_of(n1), frame_of(n2), {VectorXd::Zero(4), gram_schmidt(F3)});
    As.push_back(A);
    ds.push_back(std::abs(d));
  }
  EXPECT_NEAR(fit_loglog(As, ds).slope, -1.0, 0.1);
}

TEST(ThetaMin, CoordinatePlanes) {
  const auto r = theta_min(coordinate_planes());
  EXPECT_NEAR(r.theta, 1.0, 1e-14);
  EXPECT_FALSE(r.degenerate);
}

TEST(ThetaMin, TiltedPlane) {
  for (double alpha : {0.2, 1.0, 1.5}) {
    std::array<GraphPatch, 3> t{plane(Eigen::Vector3d::UnitX(), 1, 4), plane(Eigen::Vector3d::UnitY(), 1, 4),
                                plane(Eigen::Vector3d(std::sin(alpha), 0, std::cos(alpha)), 1, 4)};
    EXPECT_NEAR(theta_min(t).theta, std::cos(alpha), 1e-14);
  }
}

TEST(ThetaMin, SharedNormalIsFlaggedDegenerate) {
  std::array<GraphPatch, 3> t{plane(Eigen::Vector3d::UnitX(), 1, 4), plane(Eigen::Vector3d::UnitX(), 1, 4),
                              plane(Eigen::Vector3d::UnitZ(), 1, 4)};
  const auto r = theta_min(t);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.theta, 0.0);
}

TEST(ThetaMin, MonotoneInStrideAndBelowEverySample) {
  auto par = [](double scale, const VectorXd& nu) {
    return GraphPatch::from_formula(3, Lattice::cube(2, -0.5, 0.5, 9), paraboloid_formula(scale),
                                    rotation_with_normal(nu.normalized()), {1.0, 10.0, 3.0});
  };
  std::array<GraphPatch, 3> t{par(0.4, Eigen::Vector3d(1, 0.2, 0)), par(-0.3, Eigen::Vector3d(0, 1, 0.3)),
                              par(0.5, Eigen::Vector3d(0.1, 0, 1))};
  const double t4 = theta_min(t, 4).theta, t2 = theta_min(t, 2).theta, t1 = theta_min(t, 1).theta;
  EXPECT_LE(t2, t4);
  EXPECT_LE(t1, t2);
  for (std::size_t a = 0; a < t[0].size(); a += 7)
    for (std::size_t b = 0; b < t[1].size(); b += 5)
      for (std::size_t c = 0; c < t[2].size(); c += 3) {
        const double d = transversality_det(normal_frame(t[0], a), normal_frame(t[1], b), normal_frame(t[2], c));
        EXPECT_LE(t1, std::abs(d) + 1e-15);
      }
  const auto slack = theta_min(t, 2, 1.0);
  EXPECT_LT(slack.corrected, slack.theta);
}

TEST(ApplyLinear, IdentityAndScalingKeepTheta) {
  const auto planes = coordinate_planes();
  EXPECT_NEAR(apply_linear(planes, MatrixXd::Identity(3, 3)).theta.theta, 1.0, 1e-14);
  EXPECT_NEAR(apply_linear(planes, 3.5 * MatrixXd::Identity(3, 3)).theta.theta, 1.0, 1e-14);
}

TEST(ApplyLinear, ShearMatchesMappedFrameDeterminant) {
  MatrixXd T = MatrixXd::Identity(3, 3);
  T(0, 1) = 0.8;
  T(1, 2) = -0.5;
  const auto img = apply_linear(coordinate_planes(), T);
  const MatrixXd S = T.inverse().transpose();
  Eigen::Matrix3d M;
  M << (S * Eigen::Vector3d::UnitX()).normalized(), (S * Eigen::Vector3d::UnitY()).normalized(),
      (S * Eigen::Vector3d::UnitZ()).normalized();
  EXPECT_NEAR(img.theta.theta, std::abs(M.determinant()), 1e-14);
  // the re-graphed planes reproduce theta'
  EXPECT_NEAR(theta_min(img.patches).theta, img.theta.theta, 1e-6 * img.theta.theta);
}

TEST(ApplyLinear, NearSingularRejected) {
  MatrixXd T = MatrixXd::Identity(3, 3);
  T(2, 2) = 1e-13;
  EXPECT_THROW(apply_linear(coordinate_planes(), T), InputError);
}

TEST(ApplyLinear, RegraphReproducesMappedParaboloid) {
  auto p = GraphPatch::from_formula(3, Lattice::cube(2, -0.5, 0.5, 12), paraboloid_formula(0.5),
                                    MatrixXd::Identity(3, 3), {1.0, 10.0, 3.0});
  std::array<GraphPatch, 3> t{p, plane(Eigen::Vector3d::UnitX(), 1, 6), plane(Eigen::Vector3d::UnitY(), 1, 6)};
  MatrixXd T = MatrixXd::Identity(3, 3);
  T(0, 2) = 0.3;
  T(2, 1) = 0.2;
  const auto img = apply_linear(t, T);
  // every mapped node lies on the fitted graph: compare normal coordinate
  const auto& g = img.patches[0];
  const MatrixXd O = g.rotation();
  double worst = 0;
  for (const auto& q : img.surfaces[0].points) {
    const VectorXd y = O.transpose() * q;
    worst = std::max(worst, std::abs(g.formula()->phi(y.head(2))[0] - y[2]));
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(MnIdentity, IdentityAndOrthogonalMaps) {
  auto par = GraphPatch::from_formula(3, Lattice::cube(2, -0.5, 0.5, 6), paraboloid_formula(),
                                      rotation_with_normal(Eigen::Vector3d(0.2, 0.1, 1).normalized()),
                                      {1.0, 10.0, 3.0});
  std::array<GraphPatch, 3> t{plane(Eigen::Vector3d::UnitX(), 1, 6), plane(Eigen::Vector3d::UnitY(), 1, 6), par};
  const auto s = surfaces_of(t);
  std::vector<std::array<std::size_t, 3>> samples;
  for (std::size_t k = 0; k < 36; ++k) samples.push_back({k, 35 - k, (7 * k) % 36});
  EXPECT_EQ(verify_mn_identity(s, MatrixXd::Identity(3, 3), samples).max_rel_error, 0.0);
  std::mt19937_64 rng(11);
  const MatrixXd Q = gram_schmidt(random_well_conditioned(rng, 3, 10));
  EXPECT_LE(verify_mn_identity(s, Q, samples).max_rel_error, 1e-8);
}

TEST(MnIdentity, RandomMapsOnParaboloidConeTriple) {
  auto par = GraphPatch::from_formula(3, Lattice::cube(2, -0.5, 0.5, 8), paraboloid_formula(), MatrixXd::Identity(3, 3),
                                      {1.0, 10.0, 3.0});
  auto cone = GraphPatch::from_formula(3, Lattice({0.5, -0.5}, {1.5, 0.5}, {8, 8}), cone_formula(2.0, 1.0),
                                       rotation_with_normal(Eigen::Vector3d(1, 0, 0.2).normalized()),
                                       {1.0, 10.0, 3.0});
  std::array<GraphPatch, 3> t{par, cone, plane(Eigen::Vector3d::UnitY(), 1, 8)};
  const auto s = surfaces_of(t);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> pick(0, 63);
  std::vector<std::array<std::size_t, 3>> samples;
  for (int i = 0; i < 100; ++i) samples.push_back({pick(rng), pick(rng), pick(rng)});
  for (int i = 0; i < 20; ++i) {
    const auto r = verify_mn_identity(s, random_well_conditioned(rng, 3, 10), samples);
    EXPECT_LE(r.max_rel_error, 1e-4);
    EXPECT_GT(r.evaluated, 0u);
  }
}

TEST(MnIdentity, FiniteDifferenceJacobiansAlsoSatisfyIt) {
  const Lattice lat = Lattice::cube(2, -0.5, 0.5, 10);
  MatrixXd phi(1, lat.size());
  for (std::size_t k = 0; k < lat.size(); ++k) phi(0, static_cast<Eigen::Index>(k)) = std::sin(lat.point(k).sum());
  auto tab = GraphPatch::from_table(3, lat, phi, MatrixXd::Identity(3, 3), {1.0, 10.0, 3.0});
  std::array<GraphPatch, 3> t{tab, plane(Eigen::Vector3d::UnitX(), 1, 10), plane(Eigen::Vector3d::UnitY(), 1, 10)};
  std::vector<std::array<std::size_t, 3>> samples;
  for (std::size_t k = 0; k < 100; ++k) samples.push_back({k, (3 * k) % 100, (11 * k) % 100});
  std::mt19937_64 rng(9);
  EXPECT_LE(verify_mn_identity(surfaces_of(t), random_well_conditioned(rng, 3, 10), samples).max_rel_error, 1e-10);
}

TEST(Partition, FlatPatchHalves) {
  auto p = plane(Eigen::Vector3d::UnitZ(), 1, 8, std::sqrt(2.0));
  const auto pieces = partition_patch(p, std::sqrt(2.0) / 2);
  ASSERT_EQ(pieces.size(), 4u);
  std::vector<int> seen(p.size(), 0);
  for (const auto& pc : pieces) {
    for (auto k : pc.source_nodes) ++seen[k];
    for (std::size_t k = 0; k < pc.patch.size(); ++k) EXPECT_LT(pc.patch.dphi(k).norm(), 1e-12);
  }
  for (int c : seen) EXPECT_EQ(c, 1);
}

TEST(Partition, ParaboloidPiecesAreRegularAtScaleDelta) {
  const double R = 3.0, delta = 0.25;
  auto p = GraphPatch::from_formula(3, Lattice::cube(2, -0.5, 0.5, 32), paraboloid_formula(),
                                    MatrixXd::Identity(3, 3), {1.0, 10.0, R});
  const auto pieces = partition_patch(p, delta);
  EXPECT_GE(pieces.size(), 16u);
  std::size_t covered = 0;
  for (const auto& pc : pieces) {
    covered += pc.source_nodes.size();
    EXPECT_LE(pc.patch.params().R, delta);
    double sup = 0;
    for (std::size_t k = 0; k < pc.patch.size(); ++k) sup = std::max(sup, pc.patch.dphi(k).norm());
    EXPECT_LE(sup, delta * 2.0 * 1.05);  // Lip(Dphi) = 2
    EXPECT_TRUE(check_regularity(pc.patch).pass);
  }
  EXPECT_EQ(covered, p.size());
}

TEST(Partition, DeltaEqualToRReturnsInput) {
  auto p = plane(Eigen::Vector3d::UnitZ(), 1, 6, 2.0);
  const auto pieces = partition_patch(p, 2.0);
  ASSERT_EQ(pieces.size(), 1u);
  EXPECT_EQ(pieces[0].patch.points(), p.points());
}

TEST(Partition, DeltaBelowTwoSpacingsRejected) {
  auto p = plane(Eigen::Vector3d::UnitZ(), 1, 6, 2.0);
  EXPECT_THROW(partition_patch(p, 0.3), InputError);
}

TEST(Foliate, InPlaneDirectionSumsExactly) {
  auto p = plane(Eigen::Vector3d::UnitZ(), 2, 20);
  std::vector<cplx> f(p.size());
  double total = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    f[k] = cplx(std::cos(3.0 * k), std::sin(1.0 * k));
    total += std::norm(f[k]) * p.weight(k);
  }
  for (int slabs : {1, 5, 20}) {
    const auto fol = foliate(p, Eigen::Vector3d(0.6, 0.8, 0), slabs);
    EXPECT_EQ(fol.count(), static_cast<std::size_t>(slabs));
    double sum = 0;
    for (std::size_t s = 0; s < fol.count(); ++s) sum += fol.width() * slice_norm_sq(fol, p, f, s);
    EXPECT_NEAR(sum, total, 1e-12 * total);
  }
  const auto one = foliate(p, Eigen::Vector3d(1, 0, 0), 1);
  EXPECT_EQ(one.slices[0].size(), p.size());
}

TEST(Foliate, NormalDirectionRejected) {
  auto p = plane(Eigen::Vector3d::UnitZ(), 1, 5);
  EXPECT_THROW(foliate(p, Eigen::Vector3d::UnitZ(), 4), InputError);
}

TEST(Foliate, ConeSlabExtentScalesLikeInverseA) {
  std::vector<double> As, extents;
  const Eigen::Vector3d v = Eigen::Vector3d(0, 0.6, 0.8);
  for (double A : {4.0, 8.0, 16.0, 32.0}) {
    const double r = 0.5 / A;
    Lattice lat({1 - r, -r, -r}, {1 + r, r, r}, {6, 6, 6});
    auto cone = GraphPatch::from_formula(4, lat, cone_formula(64, 1.0), MatrixXd::Identity(4, 4), {1.0, 2.0, 1.0});
    Eigen::Vector4d v4;
    v4 << v, 0;
    const auto fol = foliate(cone, v4, 8);
    As.push_back(A);
    extents.push_back(fol.count() * fol.width());
  }
  EXPECT_NEAR(fit_loglog(As, extents).slope, -1.0, 0.05);
}
