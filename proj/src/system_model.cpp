#include "ssmsel/system_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ssmsel {

template <int Degree>
PolyTensor<Degree>::PolyTensor(int n, std::vector<Entry> raw) : n_(n) {
  for (auto& e : raw) {
    if (e.k < 0 || e.k >= n) throw DimensionError("tensor entry row index out of range");
    for (int i : e.idx) {
      if (i < 0 || i >= n) throw DimensionError("tensor entry column index out of range");
    }
    std::sort(e.idx.begin(), e.idx.end());
  }
  std::sort(raw.begin(), raw.end(), [](const Entry& a, const Entry& b) {
    if (a.k != b.k) return a.k < b.k;
    return a.idx < b.idx;
  });
  for (const auto& e : raw) {
    if (!entries_.empty() && entries_.back().k == e.k && entries_.back().idx == e.idx) {
      entries_.back().value += e.value;
    } else {
      entries_.push_back(e);
    }
  }
  std::erase_if(entries_, [](const Entry& e) { return e.value == 0.0; });
}

template <int Degree>
void PolyTensor<Degree>::accumulate(const Vector& q, Vector& out) const {
  for (const auto& e : entries_) {
    double term = e.value;
    for (int i : e.idx) term *= q[i];
    out[e.k] += term;
  }
}

template <int Degree>
void PolyTensor<Degree>::accumulate_jacobian(const Vector& q, Matrix& jac) const {
  for (const auto& e : entries_) {
    for (int p = 0; p < Degree; ++p) {
      double term = e.value;
      for (int r = 0; r < Degree; ++r) {
        if (r != p) term *= q[e.idx[r]];
      }
      jac(e.k, e.idx[p]) += term;
    }
  }
}

template <int Degree>
PolyTensor<Degree> PolyTensor<Degree>::scaled(double factor) const {
  PolyTensor out(n_);
  out.entries_ = entries_;
  for (auto& e : out.entries_) e.value *= factor;
  return out;
}

template class PolyTensor<2>;
template class PolyTensor<3>;

SecondOrderSystem::SecondOrderSystem(Matrix mass, Matrix damping, Matrix stiffness,
                                     PolyTensor2 quadratic, PolyTensor3 cubic_terms)
    : n(static_cast<int>(mass.rows())),
      M(std::move(mass)),
      C(std::move(damping)),
      K(std::move(stiffness)),
      quad(std::move(quadratic)),
      cubic(std::move(cubic_terms)) {
  auto square = [this](const Matrix& A, const char* name) {
    if (A.rows() != n || A.cols() != n) {
      throw DimensionError(std::string(name) + " must be " + std::to_string(n) + "x" +
                           std::to_string(n));
    }
  };
  square(M, "M");
  square(C, "C");
  square(K, "K");
  if (quad.empty() && quad.dimension() == 0) quad = PolyTensor2(n);
  if (cubic.empty() && cubic.dimension() == 0) cubic = PolyTensor3(n);
  if (quad.dimension() != n || cubic.dimension() != n) {
    throw DimensionError("nonlinear tensor dimension does not match n");
  }
}

Vector evaluate_nonlinearity(const SecondOrderSystem& sys, const Vector& q) {
  if (q.size() != sys.n) throw DimensionError("displacement vector has wrong length");
  Vector out = Vector::Zero(sys.n);
  sys.quad.accumulate(q, out);
  sys.cubic.accumulate(q, out);
  return out;
}

Matrix evaluate_jacobian(const SecondOrderSystem& sys, const Vector& q) {
  if (q.size() != sys.n) throw DimensionError("displacement vector has wrong length");
  Matrix jac = Matrix::Zero(sys.n, sys.n);
  sys.quad.accumulate_jacobian(q, jac);
  sys.cubic.accumulate_jacobian(q, jac);
  return jac;
}

namespace {

double min_symmetric_eigenvalue(const Matrix& A) {
  if (A.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

SystemDiagnostics validate_system(const SecondOrderSystem& sys, double rel_tol) {
  SystemDiagnostics d;
  auto asym = [](const Matrix& A) {
    return A.size() == 0 ? 0.0 : (A - A.transpose()).cwiseAbs().maxCoeff();
  };
  auto scale = [](const Matrix& A) { return std::max(A.cwiseAbs().maxCoeff(), 1e-300); };

  d.mass_asymmetry = asym(sys.M);
  d.stiffness_asymmetry = asym(sys.K);
  d.damping_asymmetry = asym(sys.C);
  d.mass_symmetric = d.mass_asymmetry <= rel_tol * scale(sys.M);
  d.stiffness_symmetric = d.stiffness_asymmetry <= rel_tol * scale(sys.K);
  d.damping_symmetric = sys.C.isZero(0.0) || d.damping_asymmetry <= rel_tol * scale(sys.C);

  d.mass_min_eigenvalue = min_symmetric_eigenvalue(sys.M);
  d.stiffness_min_eigenvalue = min_symmetric_eigenvalue(sys.K);
  d.mass_positive_definite = d.mass_min_eigenvalue > rel_tol * scale(sys.M);
  d.stiffness_positive_semidefinite =
      sys.K.isZero(0.0) || d.stiffness_min_eigenvalue >= -1e3 * rel_tol * scale(sys.K);
  return d;
}

std::vector<std::string> SystemDiagnostics::messages() const {
  std::vector<std::string> out;
  auto add = [&out](const std::string& what, double value) {
    std::ostringstream os;
    os << what << " (" << value << ")";
    out.push_back(os.str());
  };
  if (!mass_symmetric) add("M is not symmetric: max |M - M^T|", mass_asymmetry);
  if (!stiffness_symmetric) add("K is not symmetric: max |K - K^T|", stiffness_asymmetry);
  if (!damping_symmetric) add("C is not symmetric: max |C - C^T|", damping_asymmetry);
  if (!mass_positive_definite) add("M is not positive definite: min eigenvalue", mass_min_eigenvalue);
  if (!stiffness_positive_semidefinite) {
    add("K is not positive semi-definite: min eigenvalue", stiffness_min_eigenvalue);
  }
  return out;
}

}  // namespace ssmsel
