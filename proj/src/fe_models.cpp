#include "ssmsel/fe_models.hpp"

#include <array>
#include <cmath>

namespace ssmsel {

SecondOrderSystem build_three_mass(const Vector& omega, const Vector& zeta) {
  if (omega.size() != 3 || zeta.size() != 3) throw DimensionError("three-mass model needs 3 values");
  if ((omega.array() <= 0).any() || (zeta.array() <= 0).any()) {
    throw std::invalid_argument("frequencies and damping ratios must be positive");
  }
  const Vector w2 = omega.array().square();
  const double sum_w2 = w2.sum();
  std::vector<PolyTensor2::Entry> quad;
  std::vector<PolyTensor3::Entry> cubic;
  for (int k = 0; k < 3; ++k) {
    quad.push_back({k, {k, k}, 1.5 * w2[k]});
    for (int j = 0; j < 3; ++j) {
      if (j == k) continue;
      quad.push_back({k, {j, j}, 0.5 * w2[k]});
      quad.push_back({k, {k, j}, w2[j]});
    }
    for (int j = 0; j < 3; ++j) cubic.push_back({k, {k, j, j}, 0.5 * sum_w2});
  }
  return SecondOrderSystem(Matrix::Identity(3, 3), (2.0 * zeta.array() * omega.array()).matrix().asDiagonal(),
                           w2.asDiagonal(), PolyTensor2(3, std::move(quad)),
                           PolyTensor3(3, std::move(cubic)));
}

SecondOrderSystem build_three_mass() {
  return build_three_mass(Vector{{2.0, 3.0, 5.0}}, Vector{{0.01, 0.02, 0.08}});
}

void BeamParams::validate() const {
  if (!(E > 0 && kappa >= 0 && rho > 0 && length > 0 && height > 0 && width > 0)) {
    throw std::invalid_argument("beam material and geometry parameters must be positive");
  }
  if (n_elem < 2) throw std::invalid_argument("beam needs at least 2 elements");
  if (rise < 0) throw std::invalid_argument("arch rise must be non-negative");
  if (rise >= 0.5 * length) throw std::invalid_argument("arch rise must be below half the span");
}

BeamParams straight_beam_params() { return BeamParams{}; }

BeamParams curved_beam_params() {
  BeamParams p;
  p.height = 7e-3;
  p.rise = 5e-3;
  return p;
}

int BeamModel::index(int node, DofKind kind) const {
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    if (dofs[i].node == node && dofs[i].kind == kind) return static_cast<int>(i);
  }
  return -1;
}

namespace {

constexpr int kLocal = 6;  // u1 w1 t1 u2 w2 t2

// 5-point Gauss-Legendre on [0, 1]; exact for the quartic membrane energy.
const std::array<double, 5> kGaussX = {0.04691007703066800, 0.23076534494715845, 0.5,
                                       0.76923465505284155, 0.95308992296933200};
const std::array<double, 5> kGaussW = {0.11846344252809454, 0.23931433524968324,
                                       0.28444444444444444, 0.23931433524968324,
                                       0.11846344252809454};

struct Shape {
  std::array<double, kLocal> u{}, w{};       // values
  std::array<double, kLocal> du{}, dw{};     // d/dx
  std::array<double, kLocal> ddw{};          // d2/dx2
};

Shape shape(double xi, double le) {
  Shape s;
  s.u[0] = 1 - xi;
  s.u[3] = xi;
  s.du[0] = -1 / le;
  s.du[3] = 1 / le;
  const double x2 = xi * xi, x3 = x2 * xi;
  s.w[1] = 1 - 3 * x2 + 2 * x3;
  s.w[2] = le * (xi - 2 * x2 + x3);
  s.w[4] = 3 * x2 - 2 * x3;
  s.w[5] = le * (-x2 + x3);
  s.dw[1] = (-6 * xi + 6 * x2) / le;
  s.dw[2] = 1 - 4 * xi + 3 * x2;
  s.dw[4] = (6 * xi - 6 * x2) / le;
  s.dw[5] = -2 * xi + 3 * x2;
  s.ddw[1] = (-6 + 12 * xi) / (le * le);
  s.ddw[2] = (-4 + 6 * xi) / le;
  s.ddw[4] = (6 - 12 * xi) / (le * le);
  s.ddw[5] = (-2 + 6 * xi) / le;
  return s;
}

// Slope of the circular arc through (0, 0), (l/2, a), (l, 0).
double arch_slope(double x, double l, double a) {
  if (a == 0.0) return 0.0;
  const double R = (0.25 * l * l + a * a) / (2 * a);
  const double s = x - 0.5 * l;
  return -s / std::sqrt(R * R - s * s);
}

bool constrained(int node, int local_kind, int last_node, Support support) {
  if (node != 0 && node != last_node) return false;
  return local_kind != 2 || support == Support::Clamped;
}

}  // namespace

BeamModel build_beam(const BeamParams& params) {
  params.validate();
  const int ne = params.n_elem;
  const int nodes = ne + 1;
  const double le = params.length / ne;
  const double EA = params.E * params.area();
  const double EI = params.E * params.inertia();
  const double rhoA = params.rho * params.area();

  BeamModel model;
  model.params = params;
  std::vector<int> free_index(3 * nodes, -1);
  for (int node = 0; node < nodes; ++node) {
    for (int c = 0; c < 3; ++c) {
      if (constrained(node, c, nodes - 1, params.support)) continue;
      free_index[3 * node + c] = static_cast<int>(model.dofs.size());
      model.dofs.push_back({node, static_cast<DofKind>(c)});
    }
  }
  const int n = static_cast<int>(model.dofs.size());
  Matrix M = Matrix::Zero(n, n), K = Matrix::Zero(n, n);
  std::vector<PolyTensor2::Entry> quad;
  std::vector<PolyTensor3::Entry> cubic;

  for (int e = 0; e < ne; ++e) {
    std::array<int, kLocal> g{};
    for (int a = 0; a < kLocal; ++a) g[a] = free_index[3 * (e + a / 3) + a % 3];

    Eigen::Matrix<double, kLocal, kLocal> ke = Eigen::Matrix<double, kLocal, kLocal>::Zero();
    Eigen::Matrix<double, kLocal, kLocal> me = Eigen::Matrix<double, kLocal, kLocal>::Zero();
    std::array<double, kLocal * kLocal * kLocal> t2{};
    std::array<double, kLocal * kLocal * kLocal * kLocal> t3{};

    for (std::size_t qp = 0; qp < kGaussX.size(); ++qp) {
      const double xi = kGaussX[qp];
      const double wgt = kGaussW[qp] * le;
      const Shape s = shape(xi, le);
      const double slope0 = arch_slope((e + xi) * le, params.length, params.rise);
      std::array<double, kLocal> L{}, G{};  // linear strain and slope operators
      for (int a = 0; a < kLocal; ++a) {
        L[a] = s.du[a] + slope0 * s.dw[a];
        G[a] = s.dw[a];
      }
      for (int a = 0; a < kLocal; ++a) {
        for (int b = 0; b < kLocal; ++b) {
          ke(a, b) += wgt * (EA * L[a] * L[b] + EI * s.ddw[a] * s.ddw[b]);
          me(a, b) += wgt * rhoA * (s.u[a] * s.u[b] + s.w[a] * s.w[b]);
        }
      }
      // Force EA [ (Gq)^2 L / 2 + (Lq)(Gq) G + (Gq)^3 G / 2 ].
      for (int i = 0; i < kLocal; ++i) {
        for (int j = 0; j < kLocal; ++j) {
          for (int k = 0; k < kLocal; ++k) {
            t2[(i * kLocal + j) * kLocal + k] +=
                wgt * EA * (0.5 * L[i] * G[j] * G[k] + G[i] * L[j] * G[k]);
            const double c = 0.5 * wgt * EA * G[i] * G[j] * G[k];
            if (c == 0.0) continue;
            for (int l = 0; l < kLocal; ++l) t3[((i * kLocal + j) * kLocal + k) * kLocal + l] += c * G[l];
          }
        }
      }
    }

    for (int a = 0; a < kLocal; ++a) {
      if (g[a] < 0) continue;
      for (int b = 0; b < kLocal; ++b) {
        if (g[b] < 0) continue;
        K(g[a], g[b]) += ke(a, b);
        M(g[a], g[b]) += me(a, b);
      }
    }
    for (int i = 0; i < kLocal; ++i) {
      if (g[i] < 0) continue;
      for (int j = 0; j < kLocal; ++j) {
        if (g[j] < 0) continue;
        for (int k = 0; k < kLocal; ++k) {
          if (g[k] < 0) continue;
          const double v2 = t2[(i * kLocal + j) * kLocal + k];
          if (v2 != 0.0) quad.push_back({g[i], {g[j], g[k]}, v2});
          for (int l = 0; l < kLocal; ++l) {
            if (g[l] < 0) continue;
            const double v3 = t3[((i * kLocal + j) * kLocal + k) * kLocal + l];
            if (v3 != 0.0) cubic.push_back({g[i], {g[j], g[k], g[l]}, v3});
          }
        }
      }
    }
  }

  M = 0.5 * (M + M.transpose());
  K = 0.5 * (K + K.transpose());
  const Matrix C = (params.kappa / params.E) * K;
  model.system = SecondOrderSystem(M, C, K, PolyTensor2(n, std::move(quad)),
                                   PolyTensor3(n, std::move(cubic)));
  return model;
}

BeamModel build_straight_beam(BeamParams params) {
  if (params.rise != 0.0) throw std::invalid_argument("straight beam must have zero rise");
  return build_beam(params);
}

BeamModel build_curved_beam(BeamParams params) {
  if (!(params.rise > 0.0)) throw std::invalid_argument("curved beam needs a positive rise");
  return build_beam(params);
}

Vector BeamModel::transverse_load(double amplitude, LoadDiscretization kind) const {
  const int n = static_cast<int>(dofs.size());
  Vector f = Vector::Zero(n);
  if (kind == LoadDiscretization::Nodal) {
    for (int i = 0; i < n; ++i) {
      if (dofs[i].kind == DofKind::Transverse) f[i] = amplitude;
    }
    return f;
  }
  const double le = params.length / params.n_elem;
  // Integrals of the Hermite functions over one element.
  const std::array<double, 4> hermite = {le / 2, le * le / 12, le / 2, -le * le / 12};
  const std::array<DofKind, 4> kinds = {DofKind::Transverse, DofKind::Rotation,
                                        DofKind::Transverse, DofKind::Rotation};
  for (int e = 0; e < params.n_elem; ++e) {
    for (int a = 0; a < 4; ++a) {
      const int idx = index(e + a / 2, kinds[a]);
      if (idx >= 0) f[idx] += amplitude * hermite[a];
    }
  }
  return f;
}

const char* to_string(Support s) { return s == Support::Hinged ? "hinged" : "clamped"; }

const char* to_string(LoadDiscretization l) {
  return l == LoadDiscretization::Nodal ? "nodal" : "consistent";
}

const char* to_string(DofKind k) {
  switch (k) {
    case DofKind::Axial: return "u";
    case DofKind::Transverse: return "w";
    case DofKind::Rotation: return "w'";
  }
  return "?";
}

Support parse_support(const std::string& s) {
  if (s == "hinged") return Support::Hinged;
  if (s == "clamped") return Support::Clamped;
  throw std::invalid_argument("unknown support '" + s + "' (expected hinged or clamped)");
}

LoadDiscretization parse_load(const std::string& s) {
  if (s == "nodal") return LoadDiscretization::Nodal;
  if (s == "consistent") return LoadDiscretization::Consistent;
  throw std::invalid_argument("unknown load discretization '" + s + "' (expected nodal or consistent)");
}

}  // namespace ssmsel
