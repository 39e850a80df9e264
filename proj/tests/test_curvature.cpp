#include <gtest/gtest.h>

#include <random>

#include "ssmsel/curvature.hpp"
#include "ssmsel/fe_models.hpp"

using namespace ssmsel;

namespace {

Matrix master_A(const Vector& k, const Vector& c) {
  const int m = static_cast<int>(k.size());
  Matrix A = Matrix::Zero(2 * m, 2 * m);
  A.topRightCorner(m, m).setIdentity();
  A.bottomLeftCorner(m, m) = (-k).asDiagonal();
  A.bottomRightCorner(m, m) = (-c).asDiagonal();
  return A;
}

}  // namespace

TEST(Curvature, HandComputedSingleMaster) {
  // m = 1, A = [[0, 1], [-1, 0]], W = diag(w, 0): curv = -8 w^2.
  const Matrix A = master_A(Vector::Ones(1), Vector::Zero(1));
  for (double w : {0.5, -1.3, 2.0}) {
    Matrix W = Matrix::Zero(2, 2);
    W(0, 0) = w;
    EXPECT_NEAR(directional_curvature(W, A), -8.0 * w * w, 1e-12);
  }
}

TEST(Curvature, GaussEquationForm) {
  // curv = 4 [(tr W)^2 - |W|^2 + (tr V)^2 - |V|^2], V = W A + (W A)^T.
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 1 + trial % 3;
    const Matrix A = master_A(Vector::NullaryExpr(m, [&] { return 1 + std::abs(U(rng)); }),
                              Vector::NullaryExpr(m, [&] { return 0.1 * std::abs(U(rng)); }));
    Matrix W = Matrix::NullaryExpr(2 * m, 2 * m, [&] { return U(rng); });
    W = (0.5 * (W + W.transpose())).eval();
    const Matrix V = W * A + (W * A).transpose();
    const double expected =
        4.0 * (W.trace() * W.trace() - W.squaredNorm() + V.trace() * V.trace() - V.squaredNorm());
    EXPECT_NEAR(directional_curvature(W, A), expected, 1e-10 * std::max(1.0, std::abs(expected)));
  }
}

TEST(Curvature, RejectsAsymmetricW) {
  const Matrix A = master_A(Vector::Ones(1), Vector::Zero(1));
  Matrix W = Matrix::Zero(2, 2);
  W(0, 1) = 1.0;
  EXPECT_THROW(directional_curvature(W, A), std::invalid_argument);
  EXPECT_THROW(directional_curvature(Matrix::Zero(4, 4), A), DimensionError);
}

TEST(Curvature, OracleAgreesOnRandomGraphs) {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int m = 1 + trial % 3;
    QuadraticGraph g;
    g.A = master_A(Vector::NullaryExpr(m, [&] { return 0.5 + std::abs(U(rng)); }),
                   Vector::NullaryExpr(m, [&] { return 0.2 * std::abs(U(rng)); }));
    Matrix W = Matrix::NullaryExpr(2 * m, 2 * m, [&] { return U(rng); });
    g.W = {0.5 * (W + W.transpose())};
    const OracleResult r = curvature_oracle(g);
    const double closed = directional_curvature(g.W[0], g.A);
    EXPECT_NEAR(r.curvature, closed, 1e-6 * std::max(1.0, std::abs(closed)));
  }
}

TEST(Curvature, TotalIsSumOfDirectional) {
  const ModalModel modal = compute_modes(build_three_mass());
  const SSMCoefficients c = compute_ssm(modal, MasterSplit({1}, 3));
  const CurvatureReport rep = curvature_report(c);
  double sum = 0.0;
  for (const auto& e : rep.entries) sum += e.curvature;
  EXPECT_NEAR(rep.total, sum, 1e-10 * std::abs(sum));
  const OracleResult full = curvature_oracle(QuadraticGraph::full(c));
  EXPECT_NEAR(full.curvature, rep.total, 1e-6 * std::abs(rep.total));
}

TEST(Curvature, ThreeMassRanking) {
  const ModalModel modal = compute_modes(build_three_mass());
  const CurvatureReport rep = curvature_report(compute_ssm(modal, MasterSplit({1}, 3)));
  const auto ranked = rep.ranked();
  ASSERT_EQ(ranked.size(), 2u);
  EXPECT_EQ(ranked[0].mode, 3);
  EXPECT_GT(std::abs(ranked[0].curvature), std::abs(ranked[1].curvature));
  // Spectral norms of W_k are reported alongside.
  EXPECT_NEAR(rep.entries[0].w_norm, 0.1428, 1e-3);
  EXPECT_NEAR(rep.entries[1].w_norm, 0.8886, 1e-3);
}

TEST(Curvature, RankingTiesPreferLowerMode) {
  CurvatureReport rep;
  rep.entries = {{4, -2.0, 0.0}, {2, 2.0, 0.0}, {3, 1.0, 0.0}};
  const auto r = rep.ranked();
  EXPECT_EQ(r[0].mode, 2);
  EXPECT_EQ(r[1].mode, 4);
  EXPECT_EQ(r[2].mode, 3);
}

TEST(Curvature, OracleRejectsBadStep) {
  QuadraticGraph g;
  g.A = master_A(Vector::Ones(1), Vector::Zero(1));
  g.W = {Matrix::Identity(2, 2)};
  EXPECT_THROW(curvature_oracle(g, 0.0), OracleError);
  EXPECT_THROW(curvature_oracle(g, std::nan("")), OracleError);
}
