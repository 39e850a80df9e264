#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "ssmsel/fe_models.hpp"
#include "ssmsel/model_io.hpp"
#include "ssmsel/system_model.hpp"

using namespace ssmsel;

namespace {

// Dense n x n x n (x n) reference tensors filled from raw, possibly
// non-canonical, entries.
struct DenseTensors {
  int n;
  std::vector<double> t2, t3;
  explicit DenseTensors(int n_) : n(n_), t2(n_ * n_ * n_, 0.0), t3(n_ * n_ * n_ * n_, 0.0) {}
  Vector eval(const Vector& q) const {
    Vector s = Vector::Zero(n);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          s[k] += t2[(k * n + i) * n + j] * q[i] * q[j];
          for (int l = 0; l < n; ++l) s[k] += t3[((k * n + i) * n + j) * n + l] * q[i] * q[j] * q[l];
        }
    return s;
  }
};

SecondOrderSystem random_system(int n, std::mt19937& rng, DenseTensors* dense = nullptr) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::uniform_int_distribution<int> I(0, n - 1);
  std::vector<PolyTensor2::Entry> q2;
  std::vector<PolyTensor3::Entry> q3;
  for (int e = 0; e < 4 * n; ++e) {
    PolyTensor2::Entry a{I(rng), {I(rng), I(rng)}, U(rng)};
    PolyTensor3::Entry b{I(rng), {I(rng), I(rng), I(rng)}, U(rng)};
    q2.push_back(a);
    q3.push_back(b);
    if (dense) {
      dense->t2[(a.k * n + a.idx[0]) * n + a.idx[1]] += a.value;
      dense->t3[((b.k * n + b.idx[0]) * n + b.idx[1]) * n + b.idx[2]] += b.value;
    }
  }
  Matrix A = Matrix::Random(n, n);
  Matrix M = A * A.transpose() + n * Matrix::Identity(n, n);
  Matrix K = 2.0 * M;
  return SecondOrderSystem(M, 0.01 * K, K, PolyTensor2(n, q2), PolyTensor3(n, q3));
}

}  // namespace

TEST(PolyTensor, CanonicalizesPermutedEntries) {
  PolyTensor2 t(3, {{0, {2, 1}, 1.5}, {0, {1, 2}, 0.5}, {1, {0, 0}, 2.0}, {1, {0, 0}, -2.0}});
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.entries()[0].idx[0], 1);
  EXPECT_EQ(t.entries()[0].idx[1], 2);
  EXPECT_DOUBLE_EQ(t.entries()[0].value, 2.0);
}

TEST(PolyTensor, RejectsOutOfRangeIndex) {
  EXPECT_THROW(PolyTensor3(2, {{0, {0, 1, 2}, 1.0}}), DimensionError);
  EXPECT_THROW(PolyTensor2(2, {{2, {0, 1}, 1.0}}), DimensionError);
}

TEST(PolyTensor, MatchesDenseLoopOracle) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 5;
    DenseTensors dense(n);
    const SecondOrderSystem sys = random_system(n, rng, &dense);
    const Vector q = Vector::Random(n);
    const Vector s = evaluate_nonlinearity(sys, q);
    EXPECT_LT((s - dense.eval(q)).norm(), 1e-12 * (1.0 + s.norm()));
  }
}

TEST(PolyTensor, JacobianMatchesFiniteDifferences) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + trial % 4;
    const SecondOrderSystem sys = random_system(n, rng);
    const Vector q = Vector::Random(n);
    const Matrix J = evaluate_jacobian(sys, q);
    const double h = 1e-6;
    for (int j = 0; j < n; ++j) {
      Vector e = Vector::Zero(n);
      e[j] = h;
      const Vector fd = (evaluate_nonlinearity(sys, q + e) - evaluate_nonlinearity(sys, q - e)) / (2 * h);
      EXPECT_LT((fd - J.col(j)).norm(), 1e-6 * std::max(1.0, J.col(j).norm()));
    }
  }
}

TEST(PolyTensor, ScaledMultipliesForce) {
  std::mt19937 rng(3);
  SecondOrderSystem sys = random_system(4, rng);
  const Vector q = Vector::Random(4);
  Vector a = Vector::Zero(4), b = Vector::Zero(4);
  sys.quad.accumulate(q, a);
  sys.quad.scaled(-2.5).accumulate(q, b);
  EXPECT_LT((b + 2.5 * a).norm(), 1e-13);
}

TEST(SecondOrderSystem, RejectsMismatchedSizes) {
  EXPECT_THROW(SecondOrderSystem(Matrix::Identity(2, 2), Matrix::Zero(3, 3), Matrix::Identity(2, 2)),
               DimensionError);
  const SecondOrderSystem sys(Matrix::Identity(2, 2), Matrix::Zero(2, 2), Matrix::Identity(2, 2));
  EXPECT_THROW(evaluate_nonlinearity(sys, Vector::Zero(3)), DimensionError);
  EXPECT_TRUE(sys.is_linear());
}

TEST(Diagnostics, FlagsAsymmetryAndIndefiniteMass) {
  Matrix M = Matrix::Identity(2, 2);
  M(0, 1) = 0.5;
  Matrix K = Matrix::Identity(2, 2);
  K(1, 1) = -1.0;
  const SystemDiagnostics d = validate_system(SecondOrderSystem(M, Matrix::Zero(2, 2), K));
  EXPECT_FALSE(d.ok());
  EXPECT_FALSE(d.messages().empty());
  EXPECT_TRUE(validate_system(build_three_mass()).ok());
}

TEST(ModelIO, RoundTripPreservesSystem) {
  const SecondOrderSystem sys = build_three_mass();
  const ForcingSpec f{Vector{{0.02, 0.0, 0.0}}, 1.7, 2.0};
  std::stringstream ss;
  write_model(ss, sys, f);
  const ModelFile back = parse_model(ss);
  EXPECT_EQ((back.system.M - sys.M).norm(), 0.0);
  EXPECT_EQ((back.system.C - sys.C).norm(), 0.0);
  EXPECT_EQ((back.system.K - sys.K).norm(), 0.0);
  const Vector q{{0.3, -0.2, 0.7}};
  EXPECT_EQ((evaluate_nonlinearity(back.system, q) - evaluate_nonlinearity(sys, q)).norm(), 0.0);
  ASSERT_TRUE(back.forcing.has_value());
  EXPECT_EQ(back.forcing->omega, 1.7);
  EXPECT_EQ(back.forcing->epsilon, 2.0);
  EXPECT_EQ((back.forcing->amplitude - f.amplitude).norm(), 0.0);
}

TEST(ModelIO, ParsesMinimalFileAndReportsErrors) {
  std::istringstream ok("n 1\n# comment\nM\n2\nK\n8\nQUAD\n1 1 1 0.5\n");
  const ModelFile m = parse_model(ok);
  EXPECT_EQ(m.system.n, 1);
  EXPECT_EQ(m.system.C(0, 0), 0.0);
  EXPECT_FALSE(m.forcing.has_value());
  std::istringstream bad("n 2\nM 1 0 0\n");
  EXPECT_THROW(parse_model(bad), ModelFormatError);
  EXPECT_THROW(read_model("/nonexistent/model.txt"), std::runtime_error);
}
