#pragma once

#include <string>
#include <vector>

#include "ssmsel/system_model.hpp"

namespace ssmsel {

/// Three-DOF spring-mass system in modal form: M = I, K = diag(omega^2),
/// C = diag(2 zeta omega), with the quadratic and cubic couplings of a
/// single mass on three springs.
SecondOrderSystem build_three_mass(const Vector& omega, const Vector& zeta);
SecondOrderSystem build_three_mass();  // omega = (2, 3, 5), zeta = (0.01, 0.02, 0.08)

enum class Support {
  Hinged,   // u and w fixed at both ends, rotation free
  Clamped,  // u, w and w' fixed at both ends
};

enum class LoadDiscretization {
  Nodal,       // amplitude applied to every free transverse DOF
  Consistent,  // work-equivalent nodal forces of a uniform load per unit length
};

struct BeamParams {
  double E = 70e9;       // Pa
  double kappa = 1e8;    // Pa s, C = (kappa / E) K
  double rho = 2700.0;   // kg/m^3
  double length = 1.0;   // m
  double height = 1e-3;  // m
  double width = 0.1;    // m
  int n_elem = 10;
  double rise = 0.0;     // m, midpoint rise of a circular arch
  Support support = Support::Hinged;

  void validate() const;
  double area() const { return width * height; }
  double inertia() const { return width * height * height * height / 12.0; }
};

enum class DofKind { Axial, Transverse, Rotation };

struct BeamDof {
  int node = 0;  // 0-based, node 0 at x = 0
  DofKind kind = DofKind::Axial;
};

struct BeamModel {
  BeamParams params;
  SecondOrderSystem system;
  std::vector<BeamDof> dofs;  // one per free DOF, in system order

  /// Free-DOF index of a nodal quantity, or -1 if it is constrained.
  int index(int node, DofKind kind) const;
  /// Uniform transverse load with amplitude `amplitude` (N per DOF for Nodal,
  /// N/m for Consistent).
  Vector transverse_load(double amplitude, LoadDiscretization kind) const;
};

/// Von Karman beam: linear axial and cubic Hermite transverse elements,
/// strain u' + w0' w' + (w')^2 / 2, curvature w''. w0 is the initial arch
/// shape (zero when rise = 0).
BeamModel build_beam(const BeamParams& params);
BeamModel build_straight_beam(BeamParams params);
BeamModel build_curved_beam(BeamParams params);

/// Defaults: straight beam h = 1 mm, arch h = 7 mm with a 5 mm rise.
BeamParams straight_beam_params();
BeamParams curved_beam_params();

const char* to_string(Support s);
const char* to_string(LoadDiscretization l);
const char* to_string(DofKind k);
Support parse_support(const std::string& s);
LoadDiscretization parse_load(const std::string& s);

}  // namespace ssmsel
