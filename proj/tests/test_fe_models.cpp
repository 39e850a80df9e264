#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ssmsel/fe_models.hpp"
#include "ssmsel/modal_analysis.hpp"

using namespace ssmsel;

namespace {

double beam_scale(const BeamParams& p) {
  return std::sqrt(p.E * p.inertia() / (p.rho * p.area() * std::pow(p.length, 4)));
}

double first_bending(const BeamModel& beam) {
  const ModalModel modal = compute_modes(beam.system);
  for (int k = 1; k <= modal.size(); ++k) {
    const auto u = modal.mode(k);
    double w = 0.0, all = u.squaredNorm();
    for (std::size_t i = 0; i < beam.dofs.size(); ++i)
      if (beam.dofs[i].kind != DofKind::Axial) w += u[i] * u[i];
    if (w > 0.5 * all) return modal.frequency(k);
  }
  return 0.0;
}

}  // namespace

TEST(ThreeMass, ModalCouplingCoefficients) {
  const SecondOrderSystem sys = build_three_mass();
  const double x = 0.1;
  const Vector s = evaluate_nonlinearity(sys, Vector{{x, 0.0, 0.0}});
  EXPECT_NEAR(s[0], 6.0 * x * x + 19.0 * x * x * x, 1e-14);
  EXPECT_NEAR(s[1], 4.5 * x * x, 1e-14);
  EXPECT_NEAR(s[2], 12.5 * x * x, 1e-14);
  const ModalModel modal = compute_modes(sys);
  EXPECT_NEAR(modal.frequency(2), 3.0, 1e-12);
  EXPECT_NEAR(modal.damping(3), 0.08, 1e-12);
}

TEST(Beam, DofCountsBySupport) {
  BeamParams p = straight_beam_params();
  EXPECT_EQ(build_straight_beam(p).system.n, 29);
  p.support = Support::Clamped;
  EXPECT_EQ(build_straight_beam(p).system.n, 27);
  EXPECT_EQ(build_straight_beam(p).index(0, DofKind::Transverse), -1);
}

TEST(Beam, HingedFundamentalMatchesEulerBernoulli) {
  const BeamParams p = straight_beam_params();
  const double expected = std::numbers::pi * std::numbers::pi * beam_scale(p);
  EXPECT_NEAR(first_bending(build_straight_beam(p)) / expected, 1.0, 1e-3);
}

TEST(Beam, ClampedFundamentalMatchesEulerBernoulli) {
  BeamParams p = straight_beam_params();
  p.support = Support::Clamped;
  const double expected = 22.3733 * beam_scale(p);
  EXPECT_NEAR(first_bending(build_straight_beam(p)) / expected, 1.0, 1e-2);
}

TEST(Beam, RefinementConvergesFromAbove) {
  BeamParams p = straight_beam_params();
  p.support = Support::Clamped;
  const double exact = 22.3733 * beam_scale(p);
  double prev = std::numeric_limits<double>::infinity();
  for (int ne : {2, 4, 8, 16}) {
    p.n_elem = ne;
    const double w = first_bending(build_straight_beam(p));
    EXPECT_GT(w, exact * (1 - 1e-6));
    EXPECT_LT(w, prev);
    prev = w;
  }
}

TEST(Beam, ModesAreMassOrthonormal) {
  for (const SecondOrderSystem& sys :
       {build_straight_beam(straight_beam_params()).system, build_curved_beam(curved_beam_params()).system,
        build_three_mass()}) {
    const ModalModel modal = compute_modes(sys);
    const Matrix G = modal.U.transpose() * sys.M * modal.U;
    EXPECT_LT((G - Matrix::Identity(sys.n, sys.n)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Beam, TangentStiffnessIsSymmetric) {
  for (const BeamModel& beam : {build_straight_beam(straight_beam_params()), build_curved_beam(curved_beam_params())}) {
    const Vector q = 1e-3 * Vector::LinSpaced(beam.system.n, -1.0, 2.0);
    const Matrix J = evaluate_jacobian(beam.system, q);
    EXPECT_LT((J - J.transpose()).norm(), 1e-10 * J.norm());
  }
}

TEST(Beam, PureAxialFieldHasNoNonlinearForce) {
  const BeamModel beam = build_straight_beam(straight_beam_params());
  Vector q = Vector::Zero(beam.system.n);
  for (std::size_t i = 0; i < beam.dofs.size(); ++i)
    if (beam.dofs[i].kind == DofKind::Axial) q[i] = 1e-4 * (1.0 + i);
  EXPECT_EQ(evaluate_nonlinearity(beam.system, q).norm(), 0.0);
}

TEST(Beam, ArchCouplesAxialAndTransverse) {
  const BeamModel straight = build_straight_beam(straight_beam_params());
  const BeamModel curved = build_curved_beam(curved_beam_params());
  auto coupling = [](const BeamModel& b) {
    double c = 0.0;
    for (std::size_t i = 0; i < b.dofs.size(); ++i)
      for (std::size_t j = 0; j < b.dofs.size(); ++j)
        if (b.dofs[i].kind == DofKind::Axial && b.dofs[j].kind == DofKind::Transverse)
          c = std::max(c, std::abs(b.system.K(i, j)));
    return c;
  };
  EXPECT_EQ(coupling(straight), 0.0);
  EXPECT_GT(coupling(curved), 0.0);
}

TEST(Beam, FlatArchLimitRecoversStraightBeam) {
  BeamParams p = curved_beam_params();
  p.rise = 1e-9;
  const BeamModel arch = build_beam(p);
  p.rise = 0.0;
  const BeamModel flat = build_beam(p);
  EXPECT_LT((arch.system.K - flat.system.K).norm(), 1e-6 * flat.system.K.norm());
  const Vector q = 1e-3 * Vector::LinSpaced(flat.system.n, 1.0, -1.0);
  const Vector a = evaluate_nonlinearity(arch.system, q), b = evaluate_nonlinearity(flat.system, q);
  EXPECT_LT((a - b).norm(), 1e-5 * b.norm());
}

TEST(Beam, CurvedFundamentalFrequency) {
  const ModalModel modal = compute_modes(build_curved_beam(curved_beam_params()).system);
  EXPECT_NEAR(modal.frequency(1), 208.0, 0.02 * 208.0);
}

TEST(Beam, LoadVectors) {
  const BeamModel beam = build_straight_beam(straight_beam_params());
  const Vector nodal = beam.transverse_load(2.0, LoadDiscretization::Nodal);
  const Vector cons = beam.transverse_load(2.0, LoadDiscretization::Consistent);
  double total = 0.0;
  for (std::size_t i = 0; i < beam.dofs.size(); ++i) {
    if (beam.dofs[i].kind == DofKind::Transverse) {
      EXPECT_EQ(nodal[i], 2.0);
      total += cons[i];
    } else if (beam.dofs[i].kind == DofKind::Axial) {
      EXPECT_EQ(cons[i], 0.0);
    }
  }
  // Interior nodes carry F * le; the end shares sit on constrained DOFs.
  EXPECT_NEAR(total, 2.0 * 0.9, 1e-12);
}

TEST(Beam, RejectsInvalidParameters) {
  BeamParams p = straight_beam_params();
  p.n_elem = 1;
  EXPECT_THROW(build_beam(p), std::invalid_argument);
  EXPECT_THROW(build_curved_beam(straight_beam_params()), std::invalid_argument);
  EXPECT_THROW(build_straight_beam(curved_beam_params()), std::invalid_argument);
  EXPECT_THROW(parse_support("pinned-ish"), std::invalid_argument);
  EXPECT_EQ(parse_load("nodal"), LoadDiscretization::Nodal);
}
