#pragma once

#include <complex>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ssmsel/system_model.hpp"

namespace ssmsel {

class ModalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mass-normalized undamped modal basis of a SecondOrderSystem.
///
/// Mode numbers in the public API are 1-based (mode 1 is the lowest
/// frequency), matching how modes are reported to users. Column k-1 of U is
/// mode k.
struct ModalModel {
  Vector omega;  // rad/s, ascending
  Vector zeta;
  Matrix U;
  std::shared_ptr<const SecondOrderSystem> system;

  int size() const { return static_cast<int>(omega.size()); }
  auto mode(int k) const { return U.col(k - 1); }
  double frequency(int k) const { return omega[k - 1]; }
  double damping(int k) const { return zeta[k - 1]; }
};

ModalModel compute_modes(std::shared_ptr<const SecondOrderSystem> sys,
                         double damping_tol = 1e-6);
ModalModel compute_modes(const SecondOrderSystem& sys, double damping_tol = 1e-6);

/// zeta_i = <u_i, C u_i> / (2 omega_i). Throws when U^T C U has off-diagonal
/// entries above tol * |U^T C U| or when a mode has zero frequency.
Vector modal_damping(const SecondOrderSystem& sys, const ModalModel& modal, double tol = 1e-6);

/// Largest off-diagonal magnitude of U^T C U relative to its max entry.
double damping_coupling(const SecondOrderSystem& sys, const ModalModel& modal);

/// Partition of {1..n} into master modes I and slave modes J.
class MasterSplit {
 public:
  MasterSplit() = default;
  /// `master` holds 1-based mode numbers; order and duplicates are normalized.
  MasterSplit(std::vector<int> master, int n);

  const std::vector<int>& master() const { return master_; }
  const std::vector<int>& slaves() const { return slaves_; }
  int m() const { return static_cast<int>(master_.size()); }
  int n() const { return n_; }
  bool is_master(int k) const;
  bool is_slave(int k) const { return k >= 1 && k <= n_ && !is_master(k); }
  /// Position of master mode k within master(), or -1.
  int master_position(int k) const;

  MasterSplit with(const std::vector<int>& extra) const;

 private:
  int n_ = 0;
  std::vector<int> master_;
  std::vector<int> slaves_;
};

/// Columns of U belonging to the master modes, in split order.
Matrix master_basis(const ModalModel& modal, const MasterSplit& split);

/// Coefficients of xi_i xi_j (i, j in I) in s_k((xi, 0)), symmetrized.
Matrix modal_quadratic_slice(const ModalModel& modal, const MasterSplit& split, int k);

/// lambda_{2i-1}, lambda_{2i} = (-zeta +- sqrt(zeta^2 - 1)) omega.
std::pair<std::complex<double>, std::complex<double>> eigenvalue_pair(double omega, double zeta);

/// Int(min_{k in J} Re lambda_k / max_{i in I} Re lambda_i). Returns nullopt
/// when J is empty; throws ModalError for an undamped master mode.
std::optional<int> spectral_quotient(const ModalModel& modal, const MasterSplit& split);

struct NearResonance {
  std::vector<int> multi_index;  // exponents over the 2m master eigenvalues
  int slave = 0;                 // 1-based slave mode
  double relative_distance = 0.0;
};

struct NonresonanceReport {
  std::optional<int> sigma;
  int max_order_checked = 0;
  bool truncated = false;
  std::vector<NearResonance> violations;
  double margin = 0.0;  // smallest relative distance found; +inf if nothing checked
  std::vector<std::string> warnings;

  bool passed() const { return violations.empty(); }
};

/// Checks sum_i m_i lambda_i != lambda_k for 2 <= |m| <= sigma over all master
/// eigenvalues, flagging distances below rtol * |lambda_k|. Orders above
/// `max_order` are skipped with a warning.
NonresonanceReport check_nonresonance(const ModalModel& modal, const MasterSplit& split,
                                      double rtol = 1e-3, int max_order = 6);

}  // namespace ssmsel
