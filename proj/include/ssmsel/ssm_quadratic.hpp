#pragma once

#include <map>
#include <stdexcept>

#include "ssmsel/modal_analysis.hpp"

namespace ssmsel {

/// The invariance equation for a slave mode is (nearly) singular, which is
/// how an inner resonance between master and slave eigenvalues shows up.
class ResonanceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear master dynamics x' = A x with x = (xi, xi').
struct MasterOperator {
  Matrix A;    // [[0, I], [-K_I, -C_I]]
  Vector K_I;  // omega_i^2, i in I
  Vector C_I;  // 2 zeta_i omega_i, i in I

  int m() const { return static_cast<int>(K_I.size()); }
};

MasterOperator build_master_operator(const ModalModel& modal, const MasterSplit& split);

/// Quadratic coefficient matrix of s_k over x = (xi, xi'); only the
/// displacement block is populated because S depends on positions only.
Matrix build_Rk(const ModalModel& modal, const MasterSplit& split, int k);

/// Fourth-order coupling tensor of the second-order invariance equation for
/// one slave mode, stored as its (2m)^2 x (2m)^2 matrix form.
///
/// Row index s*d + t addresses output entry (s, t) of B.W, column index
/// r*d + q addresses unknown W(r, q), d = 2m. Both pairs are row-major.
class CouplingTensor {
 public:
  CouplingTensor() = default;
  explicit CouplingTensor(Matrix matrix, int d) : matrix_(std::move(matrix)), d_(d) {}

  int dim() const { return d_; }
  const Matrix& matrix() const { return matrix_; }
  /// B_{k,st}^{rq}
  double operator()(int r, int q, int s, int t) const { return matrix_(s * d_ + t, r * d_ + q); }
  /// Contraction B . W, returning the d x d matrix indexed by (s, t).
  Matrix apply(const Matrix& W) const;

 private:
  Matrix matrix_;
  int d_ = 0;
};

CouplingTensor build_Bk(const MasterOperator& op, double omega_k, double zeta_k);

struct SolveOptions {
  /// Condition estimate of the equilibrated system above which the solve is
  /// rejected as resonant.
  double max_condition = 1e12;
};

/// Solves B . W = -R by vectorization, then symmetrizes W.
Matrix solve_Wk(const CouplingTensor& B, const Matrix& R, const SolveOptions& opts = {});

/// Reciprocal-condition based estimate of cond(B) after row/column scaling.
double condition_estimate(const CouplingTensor& B);

struct SSMCoefficients {
  MasterSplit split;
  MasterOperator op;
  std::map<int, Matrix> W;  // keyed by 1-based slave mode

  const Matrix& at(int k) const;
};

/// W_k for every slave mode of `split`, ordered by mode number.
SSMCoefficients compute_ssm(const ModalModel& modal, const MasterSplit& split,
                            const SolveOptions& opts = {});

struct SlaveState {
  Vector eta;      // one entry per slave, in split.slaves() order
  Vector eta_dot;
};

/// eta_k = <x, W_k x>, eta_k' = 2 <x, W_k A x>.
SlaveState evaluate_ssm(const SSMCoefficients& coeffs, const Vector& x);

/// |eta_k'' + 2 zeta_k omega_k eta_k' + omega_k^2 eta_k + s_k| along the
/// quadratic graph, with time derivatives taken along the master flow
/// restricted to the graph. One entry per slave; O(|x|^3) for correct W_k.
Vector invariance_residual(const ModalModel& modal, const SSMCoefficients& coeffs,
                           const Vector& x);

}  // namespace ssmsel
