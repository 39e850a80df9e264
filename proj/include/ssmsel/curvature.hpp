#pragma once

#include <stdexcept>
#include <vector>

#include "ssmsel/ssm_quadratic.hpp"

namespace ssmsel {

/// Scalar curvature at the origin of graph(x -> (<x, W x>, 2 <x, W A x>)),
/// the SSM projected onto the master subspace plus one slave direction.
/// Throws std::invalid_argument if W is not symmetric.
double directional_curvature(const Matrix& W, const Matrix& A);

/// Scalar curvature at the origin of the full quadratic SSM graph. Every
/// slave mode of the split must have coefficients.
double total_curvature(const SSMCoefficients& coeffs);

struct CurvatureEntry {
  int mode = 0;          // 1-based slave mode
  double curvature = 0;  // signed curv_k(I)
  double w_norm = 0;     // spectral norm of W_k, reported for comparison only
};

struct CurvatureReport {
  MasterSplit split;
  std::vector<CurvatureEntry> entries;  // ascending mode order
  double total = 0.0;

  /// Entries ordered by descending |curv_k|, ties by ascending mode.
  std::vector<CurvatureEntry> ranked() const;
  double sum_abs() const;
};

CurvatureReport curvature_report(const SSMCoefficients& coeffs);

/// Embedding x -> (x, <x, W_1 x>, .., <x, W_p x>, 2<x, W_1 A x>, .., 2<x, W_p A x>).
/// With every slave's W this is the full SSM graph; with a single W it is the
/// projection onto the master subspace plus that slave mode.
struct QuadraticGraph {
  Matrix A;
  std::vector<Matrix> W;

  static QuadraticGraph full(const SSMCoefficients& coeffs);
  static QuadraticGraph projected(const SSMCoefficients& coeffs, int k);

  int dim() const { return static_cast<int>(A.rows()); }
  Vector embed(const Vector& x) const;
  /// d psi / dx, one column per coordinate x^i.
  Matrix tangent(const Vector& x) const;
  /// Induced metric g_ij = <d_i psi, d_j psi>.
  Matrix metric(const Vector& x) const;
  /// g(x) - I, computed without forming the identity part.
  Matrix metric_deviation(const Vector& x) const;
};

struct OracleResult {
  double curvature = 0.0;
  double curvature_half_step = 0.0;  // same evaluation with h / 2
  double richardson = 0.0;           // (4 c(h/2) - c(h)) / 3
  double origin_metric_defect = 0.0;  // max |g_ij(0) - delta_ij|
};

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scalar curvature at the origin from second derivatives of the induced
/// metric, taken by central differences with step h:
///   curv = 1/2 sum_{a,b} (-d_a d_a g_bb + 2 d_a d_b g_ab - d_b d_b g_aa)(0).
/// The step is checked by repeating with h/2; disagreement above `rel_tol`
/// of the derivative scale raises OracleError.
OracleResult curvature_oracle(const QuadraticGraph& graph, double h = 1e-4, double rel_tol = 1e-6);

}  // namespace ssmsel
