#include "ssmsel/ssm_quadratic.hpp"

#include <cmath>
#include <sstream>

namespace ssmsel {

MasterOperator build_master_operator(const ModalModel& modal, const MasterSplit& split) {
  const int m = split.m();
  if (m == 0) throw std::invalid_argument("master set is empty");
  MasterOperator op;
  op.K_I.resize(m);
  op.C_I.resize(m);
  for (int a = 0; a < m; ++a) {
    const int i = split.master()[a];
    op.K_I[a] = modal.frequency(i) * modal.frequency(i);
    op.C_I[a] = 2.0 * modal.damping(i) * modal.frequency(i);
  }
  op.A = Matrix::Zero(2 * m, 2 * m);
  op.A.topRightCorner(m, m).setIdentity();
  op.A.bottomLeftCorner(m, m) = (-op.K_I).asDiagonal();
  op.A.bottomRightCorner(m, m) = (-op.C_I).asDiagonal();
  return op;
}

Matrix build_Rk(const ModalModel& modal, const MasterSplit& split, int k) {
  const int m = split.m();
  Matrix R = Matrix::Zero(2 * m, 2 * m);
  R.topLeftCorner(m, m) = modal_quadratic_slice(modal, split, k);
  return R;
}

Matrix CouplingTensor::apply(const Matrix& W) const {
  if (W.rows() != d_ || W.cols() != d_) throw DimensionError("W has wrong size for B_k");
  // Row-major vec of W.
  Vector w(d_ * d_);
  for (int r = 0; r < d_; ++r)
    for (int q = 0; q < d_; ++q) w[r * d_ + q] = W(r, q);
  const Vector out = matrix_ * w;
  Matrix result(d_, d_);
  for (int s = 0; s < d_; ++s)
    for (int t = 0; t < d_; ++t) result(s, t) = out[s * d_ + t];
  return result;
}

CouplingTensor build_Bk(const MasterOperator& op, double omega_k, double zeta_k) {
  const Matrix& A = op.A;
  const int d = static_cast<int>(A.rows());
  const Matrix A2 = A * A;
  const double c = 2.0 * zeta_k * omega_k;
  const double k2 = omega_k * omega_k;
  Matrix B = Matrix::Zero(d * d, d * d);
  for (int s = 0; s < d; ++s) {
    for (int t = 0; t < d; ++t) {
      const int row = s * d + t;
      for (int r = 0; r < d; ++r) {
        for (int q = 0; q < d; ++q) {
          const double drs = (r == s) ? 1.0 : 0.0;
          const double dqt = (q == t) ? 1.0 : 0.0;
          // A^r_s is A(r, s): upper index is the row.
          B(row, r * d + q) = 2.0 * A(r, s) * A(q, t) + A2(q, t) * drs + A2(r, s) * dqt +
                              c * (A(q, t) * drs + A(r, s) * dqt) + k2 * drs * dqt;
        }
      }
    }
  }
  return CouplingTensor(std::move(B), d);
}

namespace {

struct Equilibrated {
  Vector row_scale, col_scale;
  Eigen::PartialPivLU<Matrix> lu;
};

Equilibrated equilibrate(const Matrix& B) {
  Equilibrated e;
  const int n = static_cast<int>(B.rows());
  e.row_scale.resize(n);
  e.col_scale.resize(n);
  for (int i = 0; i < n; ++i) {
    const double mx = B.row(i).cwiseAbs().maxCoeff();
    e.row_scale[i] = mx > 0 ? 1.0 / mx : 1.0;
  }
  const Matrix Br = e.row_scale.asDiagonal() * B;
  for (int j = 0; j < n; ++j) {
    const double mx = Br.col(j).cwiseAbs().maxCoeff();
    e.col_scale[j] = mx > 0 ? 1.0 / mx : 1.0;
  }
  e.lu.compute(Br * e.col_scale.asDiagonal());
  return e;
}

double condition_from(const Equilibrated& e) {
  const double rc = e.lu.rcond();
  return rc > 0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
}

}  // namespace

double condition_estimate(const CouplingTensor& B) { return condition_from(equilibrate(B.matrix())); }

Matrix solve_Wk(const CouplingTensor& B, const Matrix& R, const SolveOptions& opts) {
  const int d = B.dim();
  if (R.rows() != d || R.cols() != d) throw DimensionError("R_k has wrong size for B_k");
  const Equilibrated e = equilibrate(B.matrix());
  const double cond = condition_from(e);
  if (!(cond <= opts.max_condition)) {
    std::ostringstream os;
    os << "invariance equation is near-singular (condition estimate " << cond
       << "); a master eigenvalue combination is likely resonant with the slave mode, see "
          "check_nonresonance";
    throw ResonanceError(os.str());
  }
  Vector rhs(d * d);
  for (int s = 0; s < d; ++s)
    for (int t = 0; t < d; ++t) rhs[s * d + t] = -R(s, t);
  const Vector y = e.lu.solve(e.row_scale.asDiagonal() * rhs);
  const Vector w = e.col_scale.asDiagonal() * y;
  Matrix W(d, d);
  for (int r = 0; r < d; ++r)
    for (int q = 0; q < d; ++q) W(r, q) = w[r * d + q];
  return 0.5 * (W + W.transpose());
}

const Matrix& SSMCoefficients::at(int k) const {
  auto it = W.find(k);
  if (it == W.end()) throw std::out_of_range("no SSM coefficients for mode " + std::to_string(k));
  return it->second;
}

SSMCoefficients compute_ssm(const ModalModel& modal, const MasterSplit& split,
                            const SolveOptions& opts) {
  SSMCoefficients coeffs;
  coeffs.split = split;
  coeffs.op = build_master_operator(modal, split);
  for (int k : split.slaves()) {
    const Matrix R = build_Rk(modal, split, k);
    if (R.isZero(0.0)) {
      coeffs.W[k] = Matrix::Zero(R.rows(), R.cols());
      continue;
    }
    const CouplingTensor B = build_Bk(coeffs.op, modal.frequency(k), modal.damping(k));
    try {
      coeffs.W[k] = solve_Wk(B, R, opts);
    } catch (const ResonanceError& err) {
      throw ResonanceError("slave mode " + std::to_string(k) + ": " + err.what());
    }
  }
  return coeffs;
}

SlaveState evaluate_ssm(const SSMCoefficients& coeffs, const Vector& x) {
  const int d = 2 * coeffs.split.m();
  if (x.size() != d) throw DimensionError("master state must have length 2m");
  const auto& slaves = coeffs.split.slaves();
  SlaveState out{Vector(slaves.size()), Vector(slaves.size())};
  const Vector Ax = coeffs.op.A * x;
  for (std::size_t j = 0; j < slaves.size(); ++j) {
    const Matrix& W = coeffs.at(slaves[j]);
    out.eta[j] = x.dot(W * x);
    out.eta_dot[j] = 2.0 * x.dot(W * Ax);
  }
  return out;
}

Vector invariance_residual(const ModalModel& modal, const SSMCoefficients& coeffs,
                           const Vector& x) {
  const MasterSplit& split = coeffs.split;
  const int m = split.m();
  const int n = modal.size();
  if (x.size() != 2 * m) throw DimensionError("master state must have length 2m");
  const auto& master = split.master();
  const auto& slaves = split.slaves();
  const SecondOrderSystem& sys = *modal.system;

  // Modal displacement on the graph.
  Vector mu = Vector::Zero(n);
  for (int a = 0; a < m; ++a) mu[master[a] - 1] = x[a];
  for (int k : slaves) {
    const Matrix& W = coeffs.at(k);
    mu[k - 1] = x.dot(W * x);
  }
  const Vector q = modal.U * mu;
  const Vector s = modal.U.transpose() * evaluate_nonlinearity(sys, q);
  const Matrix Js = modal.U.transpose() * evaluate_jacobian(sys, q) * modal.U;

  // Master vector field f(x) and its directional derivative Df(x) f(x).
  Vector f(2 * m);
  for (int a = 0; a < m; ++a) {
    const int i = master[a] - 1;
    f[a] = x[m + a];
    f[m + a] = -coeffs.op.K_I[a] * x[a] - coeffs.op.C_I[a] * x[m + a] - s[i];
  }
  Vector dmu = Vector::Zero(n);
  for (int a = 0; a < m; ++a) dmu[master[a] - 1] = f[a];
  for (int k : slaves) dmu[k - 1] = 2.0 * x.dot(coeffs.at(k) * f);
  const Vector ds = Js * dmu;
  Vector Df_f(2 * m);
  for (int a = 0; a < m; ++a) {
    Df_f[a] = f[m + a];
    Df_f[m + a] = -coeffs.op.K_I[a] * f[a] - coeffs.op.C_I[a] * f[m + a] - ds[master[a] - 1];
  }

  Vector residual(slaves.size());
  for (std::size_t j = 0; j < slaves.size(); ++j) {
    const int k = slaves[j];
    const Matrix& W = coeffs.at(k);
    const double eta = mu[k - 1];
    const double eta_dot = 2.0 * x.dot(W * f);
    const double eta_ddot = 2.0 * f.dot(W * f) + 2.0 * x.dot(W * Df_f);
    const double wk = modal.frequency(k);
    const double zk = modal.damping(k);
    residual[j] = std::abs(eta_ddot + 2.0 * zk * wk * eta_dot + wk * wk * eta + s[k - 1]);
  }
  return residual;
}

}  // namespace ssmsel
