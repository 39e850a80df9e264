#include "ssmsel/modal_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace ssmsel {

ModalModel compute_modes(std::shared_ptr<const SecondOrderSystem> sys, double damping_tol) {
  if (!sys) throw std::invalid_argument("compute_modes: null system");
  const int n = sys->n;
  const Matrix M = 0.5 * (sys->M + sys->M.transpose());
  const Matrix K = 0.5 * (sys->K + sys->K.transpose());

  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success) throw ModalError("mass matrix is not positive definite");

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(K, M);
  if (es.info() != Eigen::Success) throw ModalError("generalized eigensolver failed");

  const Vector& lambda = es.eigenvalues();
  const double lambda_scale = std::max(lambda.cwiseAbs().maxCoeff(), 1e-300);
  if (lambda.minCoeff() < -1e-8 * lambda_scale) {
    throw ModalError("stiffness matrix has a negative eigenvalue; K must be positive semi-definite");
  }

  ModalModel modal;
  modal.system = sys;
  modal.omega.resize(n);
  modal.U = es.eigenvectors();
  for (int j = 0; j < n; ++j) {
    modal.omega[j] = std::sqrt(std::max(lambda[j], 0.0));
    auto u = modal.U.col(j);
    u /= std::sqrt(u.dot(M * u));
    // Sign: the first component within round-off of the largest magnitude is positive.
    const double peak = u.cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i) {
      if (std::abs(u[i]) >= (1.0 - 1e-8) * peak) {
        if (u[i] < 0) u = -u;
        break;
      }
    }
  }
  modal.zeta = modal_damping(*sys, modal, damping_tol);
  return modal;
}

ModalModel compute_modes(const SecondOrderSystem& sys, double damping_tol) {
  return compute_modes(std::make_shared<const SecondOrderSystem>(sys), damping_tol);
}

double damping_coupling(const SecondOrderSystem& sys, const ModalModel& modal) {
  const Matrix D = modal.U.transpose() * sys.C * modal.U;
  const double scale = D.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  double off = 0.0;
  for (int i = 0; i < D.rows(); ++i)
    for (int j = 0; j < D.cols(); ++j)
      if (i != j) off = std::max(off, std::abs(D(i, j)));
  return off / scale;
}

Vector modal_damping(const SecondOrderSystem& sys, const ModalModel& modal, double tol) {
  const int n = modal.size();
  if (sys.n != n) throw DimensionError("modal model does not match system");
  const double coupling = damping_coupling(sys, modal);
  if (coupling > tol) {
    std::ostringstream os;
    os << "damping is not proportional: off-diagonal U^T C U ratio " << coupling << " exceeds "
       << tol;
    throw ModalError(os.str());
  }
  Vector zeta(n);
  const double omega_scale = std::max(modal.omega.maxCoeff(), 1e-300);
  for (int j = 0; j < n; ++j) {
    const double w = modal.omega[j];
    if (w <= 1e-12 * omega_scale) {
      throw ModalError("mode " + std::to_string(j + 1) +
                       " is a rigid-body mode; damping ratio undefined");
    }
    const auto u = modal.U.col(j);
    zeta[j] = u.dot(sys.C * u) / (2.0 * w);
  }
  return zeta;
}

MasterSplit::MasterSplit(std::vector<int> master, int n) : n_(n) {
  std::sort(master.begin(), master.end());
  master.erase(std::unique(master.begin(), master.end()), master.end());
  for (int k : master) {
    if (k < 1 || k > n) {
      throw std::invalid_argument("master mode " + std::to_string(k) + " outside 1.." +
                                  std::to_string(n));
    }
  }
  master_ = std::move(master);
  for (int k = 1; k <= n; ++k) {
    if (!std::binary_search(master_.begin(), master_.end(), k)) slaves_.push_back(k);
  }
}

bool MasterSplit::is_master(int k) const {
  return std::binary_search(master_.begin(), master_.end(), k);
}

int MasterSplit::master_position(int k) const {
  auto it = std::lower_bound(master_.begin(), master_.end(), k);
  return (it != master_.end() && *it == k) ? static_cast<int>(it - master_.begin()) : -1;
}

MasterSplit MasterSplit::with(const std::vector<int>& extra) const {
  std::vector<int> all = master_;
  all.insert(all.end(), extra.begin(), extra.end());
  return MasterSplit(std::move(all), n_);
}

Matrix master_basis(const ModalModel& modal, const MasterSplit& split) {
  Matrix UI(modal.U.rows(), split.m());
  for (int a = 0; a < split.m(); ++a) UI.col(a) = modal.mode(split.master()[a]);
  return UI;
}

Matrix modal_quadratic_slice(const ModalModel& modal, const MasterSplit& split, int k) {
  if (!split.is_slave(k)) {
    throw std::invalid_argument("mode " + std::to_string(k) + " is not a slave mode");
  }
  const Matrix UI = master_basis(modal, split);
  const auto uk = modal.mode(k);
  const int m = split.m();
  Matrix g = Matrix::Zero(m, m);
  for (const auto& e : modal.system->quad.entries()) {
    const double w = e.value * uk[e.k];
    if (w == 0.0) continue;
    g.noalias() += w * UI.row(e.idx[0]).transpose() * UI.row(e.idx[1]);
  }
  return 0.5 * (g + g.transpose());
}

std::pair<std::complex<double>, std::complex<double>> eigenvalue_pair(double omega, double zeta) {
  const std::complex<double> disc = std::sqrt(std::complex<double>(zeta * zeta - 1.0, 0.0));
  return {(-zeta + disc) * omega, (-zeta - disc) * omega};
}

std::optional<int> spectral_quotient(const ModalModel& modal, const MasterSplit& split) {
  if (split.slaves().empty()) return std::nullopt;
  double slowest_master = -std::numeric_limits<double>::infinity();
  for (int i : split.master()) {
    auto [l1, l2] = eigenvalue_pair(modal.frequency(i), modal.damping(i));
    slowest_master = std::max({slowest_master, l1.real(), l2.real()});
  }
  if (!(slowest_master < 0.0)) {
    throw ModalError("master set contains an undamped mode; spectral quotient is unbounded");
  }
  double fastest_slave = std::numeric_limits<double>::infinity();
  for (int k : split.slaves()) {
    auto [l1, l2] = eigenvalue_pair(modal.frequency(k), modal.damping(k));
    fastest_slave = std::min({fastest_slave, l1.real(), l2.real()});
  }
  // Guard the integer part against ratios like 19.999999999 from round-off.
  const double ratio = fastest_slave / slowest_master;
  return static_cast<int>(std::floor(ratio * (1.0 + 1e-12)));
}

NonresonanceReport check_nonresonance(const ModalModel& modal, const MasterSplit& split,
                                      double rtol, int max_order) {
  NonresonanceReport report;
  report.margin = std::numeric_limits<double>::infinity();
  if (split.slaves().empty() || split.master().empty()) return report;
  report.sigma = spectral_quotient(modal, split);
  const int sigma = *report.sigma;
  if (sigma < 2) return report;

  int order = sigma;
  if (order > max_order) {
    order = max_order;
    report.truncated = true;
    report.warnings.push_back("spectral quotient " + std::to_string(sigma) +
                              " exceeds the order cap; nonresonance checked up to order " +
                              std::to_string(max_order));
  }
  report.max_order_checked = order;

  std::vector<std::complex<double>> master_eigs;
  for (int i : split.master()) {
    auto [l1, l2] = eigenvalue_pair(modal.frequency(i), modal.damping(i));
    master_eigs.push_back(l1);
    master_eigs.push_back(l2);
  }
  std::vector<std::pair<int, std::complex<double>>> slave_eigs;
  for (int k : split.slaves()) {
    auto [l1, l2] = eigenvalue_pair(modal.frequency(k), modal.damping(k));
    slave_eigs.push_back({k, l1});
    slave_eigs.push_back({k, l2});
  }

  const int d = static_cast<int>(master_eigs.size());
  std::vector<int> multi(d, 0);
  // Depth-first enumeration of multi-indices with 2 <= |multi| <= order.
  auto visit = [&](auto&& self, int pos, int remaining, std::complex<double> sum) -> void {
    if (pos == d) {
      const int total = order - remaining;
      if (total < 2) return;
      for (const auto& [k, lk] : slave_eigs) {
        const double dist = std::abs(sum - lk) / std::max(std::abs(lk), 1e-300);
        report.margin = std::min(report.margin, dist);
        if (dist < rtol) report.violations.push_back({multi, k, dist});
      }
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      multi[pos] = c;
      self(self, pos + 1, remaining - c, sum + static_cast<double>(c) * master_eigs[pos]);
    }
    multi[pos] = 0;
  };
  visit(visit, 0, order, {0.0, 0.0});
  return report;
}

}  // namespace ssmsel
