#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ssmsel/fe_models.hpp"
#include "ssmsel/periodic_response.hpp"

using namespace ssmsel;

namespace {

constexpr double kPi = std::numbers::pi;

// x'' + c x' + x + a x^3 = F cos(W t)
SecondOrderSystem duffing(double c, double a) {
  return SecondOrderSystem(Matrix::Identity(1, 1), c * Matrix::Identity(1, 1), Matrix::Identity(1, 1),
                           {}, PolyTensor3(1, {{0, {0, 0, 0}, a}}));
}

// Integrates to steady state with classical RK4 and returns x(t) samples
// over the final period.
std::vector<double> simulate_duffing(double c, double a, double F, double W, int periods, int steps,
                                     int samples) {
  const double T = 2 * kPi / W, h = T / steps;
  auto f = [&](double t, double x, double v, double& dx, double& dv) {
    dx = v;
    dv = F * std::cos(W * t) - c * v - x - a * x * x * x;
  };
  double x = 0, v = 0, t = 0;
  std::vector<double> out;
  const int stride = steps / samples;
  for (int p = 0; p < periods; ++p) {
    for (int s = 0; s < steps; ++s) {
      if (p == periods - 1 && s % stride == 0) out.push_back(x);
      double k1x, k1v, k2x, k2v, k3x, k3v, k4x, k4v;
      f(t, x, v, k1x, k1v);
      f(t + h / 2, x + h / 2 * k1x, v + h / 2 * k1v, k2x, k2v);
      f(t + h / 2, x + h / 2 * k2x, v + h / 2 * k2v, k3x, k3v);
      f(t + h, x + h * k3x, v + h * k3v, k4x, k4v);
      x += h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x);
      v += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
      t = (p * steps + s + 1) * h;
    }
  }
  return out;
}

}  // namespace

TEST(HarmonicBalance, LinearSystemMatchesClosedForm) {
  const SecondOrderSystem nl = build_three_mass();
  const SecondOrderSystem lin(nl.M, nl.C, nl.K);
  const ForcingSpec f{Vector{{0.3, -0.1, 0.2}}, 2.7, 1.0};
  const PeriodicSolution hb = solve_periodic_hb(lin, f, 2.7, {.nh = 3});
  const PeriodicSolution cf = linear_response(lin, f, 2.7);
  ASSERT_TRUE(hb.converged);
  Matrix expected = Matrix::Zero(3, 7);
  expected.leftCols(cf.coeffs.cols()) = cf.coeffs;
  EXPECT_LT((hb.coeffs - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(HarmonicBalance, LinearResonanceAmplitude) {
  // omega = 1, zeta = 0.02, F = 0.01: |x| = F / (2 zeta) = 0.25 at Omega = 1.
  const SecondOrderSystem sys(Matrix::Identity(1, 1), 0.04 * Matrix::Identity(1, 1), Matrix::Identity(1, 1));
  const ForcingSpec f{Vector::Constant(1, 0.01), 1.0, 1.0};
  const PeriodicSolution s = solve_periodic_hb(sys, f, 1.0);
  EXPECT_NEAR(s.max_norm(), 0.25, 1e-8);
}

TEST(HarmonicBalance, JacobianMatchesFiniteDifferences) {
  const SecondOrderSystem sys = build_three_mass();
  const HarmonicBalance hb(sys, 3);
  Vector X = 0.05 * Vector::LinSpaced(hb.unknowns(), -1.0, 1.0);
  const double W = 1.9, h = 1e-6;
  const Vector load = hb.load(Vector{{0.02, 0.0, 0.0}});
  const Matrix J = hb.jacobian(X, W);
  for (int j = 0; j < hb.unknowns(); ++j) {
    Vector e = Vector::Zero(hb.unknowns());
    e[j] = h;
    const Vector fd = (hb.residual(X + e, W, load) - hb.residual(X - e, W, load)) / (2 * h);
    EXPECT_LT((fd - J.col(j)).norm(), 1e-6);
  }
  const Vector fdw = (hb.residual(X, W + h, load) - hb.residual(X, W - h, load)) / (2 * h);
  EXPECT_LT((fdw - hb.omega_derivative(X, W)).norm(), 1e-6);
}

TEST(HarmonicBalance, DuffingMatchesTimeIntegration) {
  const double c = 0.1, a = 0.5, F = 0.2, W = 0.7;
  const ForcingSpec f{Vector::Constant(1, F), W, 1.0};
  const PeriodicSolution hb = solve_periodic_hb(duffing(c, a), f, W, {.nh = 7});
  ASSERT_TRUE(hb.converged);
  const int samples = 64;
  const auto sim = simulate_duffing(c, a, F, W, 400, 2048, samples);
  double err = 0, ref = 0;
  for (int i = 0; i < samples; ++i) {
    const double t = i * hb.period() / samples;
    err = std::max(err, std::abs(hb.at(t)[0] - sim[i]));
    ref = std::max(ref, std::abs(sim[i]));
  }
  EXPECT_LT(err / ref, 5e-3);
}

TEST(HarmonicBalance, ResidualDecreasesWithHarmonics) {
  const double W = 0.5;
  const SecondOrderSystem sys = duffing(0.05, 1.0);
  const ForcingSpec f{Vector::Constant(1, 0.5), W, 1.0};
  double prev = std::numeric_limits<double>::infinity();
  for (int nh : {1, 3, 5, 7, 9}) {
    const PeriodicSolution s = solve_periodic_hb(sys, f, W, {.nh = nh});
    const double r = time_domain_residual(sys, f, s, 4096);
    EXPECT_LT(r, prev) << "nh = " << nh;
    prev = r;
  }
}

TEST(HarmonicBalance, Deterministic) {
  const SecondOrderSystem sys = build_three_mass();
  const ForcingSpec f{Vector{{0.02, 0.0, 0.0}}, 2.0, 1.0};
  const ResponseCurve a = frequency_sweep(sys, f, 1.8, 2.2);
  const ResponseCurve b = frequency_sweep(sys, f, 1.8, 2.2);
  ASSERT_EQ(a.points.size(), b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    EXPECT_EQ(a.points[i].param, b.points[i].param);
    EXPECT_EQ(a.points[i].norm, b.points[i].norm);
  }
}

TEST(Reduction, FullMasterSetReproducesPhysicalSolution) {
  const SecondOrderSystem sys = build_three_mass();
  const ModalModel modal = compute_modes(sys);
  const ForcingSpec f{Vector{{0.02, 0.01, 0.0}}, 1.95, 1.0};
  const ReducedModel rom = reduce(modal, MasterSplit({1, 2, 3}, 3), f);
  const PeriodicSolution full = solve_periodic_hb(sys, f, f.omega);
  const PeriodicSolution red = lift(solve_periodic_hb(rom.system, rom.forcing, f.omega), rom);
  EXPECT_LT(relative_error(full, red, sys.M), 1e-8);
}

TEST(Reduction, LiftPreservesMassNorm) {
  const SecondOrderSystem sys = build_three_mass();
  const ModalModel modal = compute_modes(sys);
  const ForcingSpec f{Vector{{0.02, 0.0, 0.01}}, 2.1, 1.0};
  const ReducedModel rom = reduce(modal, MasterSplit({1, 3}, 3), f);
  const PeriodicSolution xi = solve_periodic_hb(rom.system, rom.forcing, f.omega);
  EXPECT_NEAR(lift(xi, rom).mass_norm(sys.M), xi.mass_norm(Matrix::Identity(2, 2)), 1e-12);
  EXPECT_LT((rom.forcing.amplitude - master_basis(modal, rom.split).transpose() * f.amplitude).norm(),
            1e-15);
}

TEST(RelativeError, TrivialCasesAndShiftInvariance) {
  const SecondOrderSystem sys = build_three_mass();
  const ForcingSpec f{Vector{{0.02, 0.0, 0.0}}, 1.9, 1.0};
  const PeriodicSolution q = solve_periodic_hb(sys, f, f.omega);
  const PeriodicSolution r = linear_response(sys, f, f.omega).with_harmonics(q.nh);
  EXPECT_EQ(relative_error(q, q, sys.M), 0.0);
  EXPECT_NEAR(relative_error(q, PeriodicSolution::zero(3, q.nh, q.omega), sys.M), 1.0, 1e-12);
  const double e = relative_error(q, r, sys.M);
  const double dt = 0.37 * q.period();
  EXPECT_NEAR(relative_error(q.shifted(dt), r.shifted(dt), sys.M), e, 1e-10);
  EXPECT_THROW(relative_error(q, linear_response(sys, f, 2.0), sys.M), std::invalid_argument);
  EXPECT_THROW(relative_error(PeriodicSolution::zero(3, 3, 1.9), q, sys.M), std::invalid_argument);
}

TEST(Continuation, ThreeMassSoftensAroundFirstMode) {
  const SecondOrderSystem sys = build_three_mass();
  const ForcingSpec f{Vector{{0.02, 0.0, 0.0}}, 2.0, 1.0};
  ContinuationOptions opts;
  opts.hb.nh = 5;
  const ResponseCurve c = frequency_sweep(sys, f, 1.6, 2.4, opts);
  ASSERT_TRUE(c.complete);
  const CurvePoint* peak = c.peak();
  ASSERT_NE(peak, nullptr);
  EXPECT_LT(peak->param, 2.0 * std::sqrt(1 - 2 * 0.01 * 0.01));
  for (const auto& p : c.points) EXPECT_LT(p.solution.residual, 1e-6);
}

TEST(Continuation, AmplitudeSweepScalesLinearlyAtSmallForce) {
  const SecondOrderSystem sys = build_three_mass();
  const ForcingSpec f{Vector{{0.02, 0.0, 0.0}}, 1.5, 1.0};
  const ResponseCurve c = amplitude_sweep(sys, f, 0.005, 0.05);
  ASSERT_TRUE(c.complete);
  const double lin = linear_response(sys, f, 1.5).max_norm();
  EXPECT_NEAR(c.points.front().norm / (lin * c.points.front().param), 1.0, 1e-3);
  EXPECT_TRUE(c.jumps.empty());
}

TEST(Continuation, StartsInsideMultivaluedRegion) {
  // At 0.7 omega_1 the arch response folds in epsilon, so a plain ramp fails.
  const BeamModel beam = build_curved_beam(curved_beam_params());
  const ModalModel modal = compute_modes(beam.system);
  const double w1 = modal.frequency(1);
  const ForcingSpec f{beam.transverse_load(80.0, LoadDiscretization::Consistent), w1, 1.0};
  const ReducedModel rom = reduce(modal, MasterSplit({1, 2, 3, 4, 5, 6, 8, 10, 12, 17}, modal.size()), f);
  ContinuationOptions opts;
  opts.hb.nh = 5;
  const ResponseCurve c = frequency_sweep(rom, 0.7 * w1, 0.75 * w1, opts);
  EXPECT_TRUE(c.complete);
  ASSERT_FALSE(c.points.empty());
  EXPECT_NEAR(c.points.front().param, 0.7 * w1, 1e-12);
}
