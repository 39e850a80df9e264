#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ssmsel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when vector or matrix sizes do not agree with the model dimension.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sparse homogeneous polynomial force term of degree `Degree`.
///
/// Each entry contributes `value * q[idx[0]] * ... * q[idx[Degree-1]]` to
/// force component `k`. Indices are 0-based. Entries are canonical: the
/// monomial indices are sorted ascending and each (k, idx) appears once, with
/// all symmetric-equivalent raw coefficients already summed into `value`.
template <int Degree>
class PolyTensor {
 public:
  static_assert(Degree >= 2, "linear terms belong in K");

  struct Entry {
    int k = 0;
    std::array<int, Degree> idx{};
    double value = 0.0;
  };

  PolyTensor() = default;
  explicit PolyTensor(int n) : n_(n) {}
  /// Canonicalizes `raw`: sorts monomial indices, merges duplicates, and drops
  /// entries that cancel exactly.
  PolyTensor(int n, std::vector<Entry> raw);

  int dimension() const { return n_; }
  std::span<const Entry> entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  /// Force contribution at q.
  void accumulate(const Vector& q, Vector& out) const;
  /// Derivative of the force contribution at q, added into `jac`.
  void accumulate_jacobian(const Vector& q, Matrix& jac) const;

  /// Same tensor scaled by `factor`.
  PolyTensor scaled(double factor) const;

 private:
  int n_ = 0;
  std::vector<Entry> entries_;
};

using PolyTensor2 = PolyTensor<2>;
using PolyTensor3 = PolyTensor<3>;

/// M q'' + C q' + K q + S(q) = eps f cos(Omega t), with S a quadratic plus
/// cubic polynomial of the displacements only. SI units throughout.
struct SecondOrderSystem {
  int n = 0;
  Matrix M, C, K;
  PolyTensor2 quad;
  PolyTensor3 cubic;

  SecondOrderSystem() = default;
  /// Checks that every matrix is n x n and that the tensors match n.
  SecondOrderSystem(Matrix mass, Matrix damping, Matrix stiffness, PolyTensor2 quadratic = {},
                    PolyTensor3 cubic_terms = {});

  bool is_linear() const { return quad.empty() && cubic.empty(); }
};

/// Single-harmonic forcing eps * amplitude * cos(omega t).
struct ForcingSpec {
  Vector amplitude;
  double omega = 0.0;
  double epsilon = 1.0;

  Vector load() const { return epsilon * amplitude; }
  ForcingSpec with_epsilon(double e) const { return {amplitude, omega, e}; }
  ForcingSpec with_omega(double w) const { return {amplitude, w, epsilon}; }
};

Vector evaluate_nonlinearity(const SecondOrderSystem& sys, const Vector& q);
Matrix evaluate_jacobian(const SecondOrderSystem& sys, const Vector& q);

struct SystemDiagnostics {
  double mass_asymmetry = 0.0;  // max |M - M^T|
  double stiffness_asymmetry = 0.0;
  double damping_asymmetry = 0.0;
  double mass_min_eigenvalue = 0.0;
  double stiffness_min_eigenvalue = 0.0;
  bool mass_symmetric = true;
  bool stiffness_symmetric = true;
  bool damping_symmetric = true;
  bool mass_positive_definite = true;
  bool stiffness_positive_semidefinite = true;

  bool ok() const {
    return mass_symmetric && stiffness_symmetric && damping_symmetric && mass_positive_definite &&
           stiffness_positive_semidefinite;
  }
  std::vector<std::string> messages() const;
};

/// Report-only structural checks; never throws for ill-formed matrices.
/// `rel_tol` scales symmetry and definiteness tolerances by the matrix norm.
SystemDiagnostics validate_system(const SecondOrderSystem& sys, double rel_tol = 1e-10);

}  // namespace ssmsel
