#include "ssmsel/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ssmsel {

namespace {

void require_symmetric(const Matrix& W) {
  const double scale = std::max(1.0, W.cwiseAbs().maxCoeff());
  if ((W - W.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw std::invalid_argument("W_k must be symmetric");
  }
}

double curvature_terms(const Matrix& W, const Matrix& A) {
  const Matrix WA = W * A;
  const int d = static_cast<int>(W.rows());
  double sum = 0.0;
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      const double cross = WA(a, b) + WA(b, a);
      sum += W(a, a) * W(b, b) + 4.0 * WA(a, a) * WA(b, b) - W(a, b) * W(a, b) - cross * cross;
    }
  }
  return sum;
}

}  // namespace

double directional_curvature(const Matrix& W, const Matrix& A) {
  if (W.rows() != A.rows() || W.cols() != A.cols()) {
    throw DimensionError("W_k and A must have the same size");
  }
  require_symmetric(W);
  return 4.0 * curvature_terms(W, A);
}

double total_curvature(const SSMCoefficients& coeffs) {
  double sum = 0.0;
  for (int k : coeffs.split.slaves()) {
    auto it = coeffs.W.find(k);
    if (it == coeffs.W.end()) {
      throw std::invalid_argument("missing SSM coefficients for slave mode " + std::to_string(k));
    }
    require_symmetric(it->second);
    sum += curvature_terms(it->second, coeffs.op.A);
  }
  return 4.0 * sum;
}

std::vector<CurvatureEntry> CurvatureReport::ranked() const {
  std::vector<CurvatureEntry> out = entries;
  std::stable_sort(out.begin(), out.end(), [](const CurvatureEntry& a, const CurvatureEntry& b) {
    const double x = std::abs(a.curvature), y = std::abs(b.curvature);
    if (x != y) return x > y;
    return a.mode < b.mode;
  });
  return out;
}

double CurvatureReport::sum_abs() const {
  double s = 0.0;
  for (const auto& e : entries) s += std::abs(e.curvature);
  return s;
}

CurvatureReport curvature_report(const SSMCoefficients& coeffs) {
  CurvatureReport report;
  report.split = coeffs.split;
  for (int k : coeffs.split.slaves()) {
    const Matrix& W = coeffs.at(k);
    CurvatureEntry e;
    e.mode = k;
    e.curvature = directional_curvature(W, coeffs.op.A);
    e.w_norm = W.size() ? Eigen::JacobiSVD<Matrix>(W).singularValues()[0] : 0.0;
    report.entries.push_back(e);
  }
  report.total = total_curvature(coeffs);
  return report;
}

QuadraticGraph QuadraticGraph::full(const SSMCoefficients& coeffs) {
  QuadraticGraph g;
  g.A = coeffs.op.A;
  for (int k : coeffs.split.slaves()) g.W.push_back(coeffs.at(k));
  return g;
}

QuadraticGraph QuadraticGraph::projected(const SSMCoefficients& coeffs, int k) {
  return {coeffs.op.A, {coeffs.at(k)}};
}

Vector QuadraticGraph::embed(const Vector& x) const {
  const int d = dim();
  const int p = static_cast<int>(W.size());
  Vector psi(d + 2 * p);
  psi.head(d) = x;
  const Vector Ax = A * x;
  for (int k = 0; k < p; ++k) {
    psi[d + k] = x.dot(W[k] * x);
    psi[d + p + k] = 2.0 * x.dot(W[k] * Ax);
  }
  return psi;
}

Matrix QuadraticGraph::tangent(const Vector& x) const {
  const int d = dim();
  const int p = static_cast<int>(W.size());
  Matrix T = Matrix::Zero(d + 2 * p, d);
  T.topRows(d).setIdentity();
  for (int k = 0; k < p; ++k) {
    // d/dx <x, W x> = 2 W x;  d/dx 2 <x, W A x> = 2 (W A + (W A)^T) x.
    const Matrix WA = W[k] * A;
    T.row(d + k) = (2.0 * W[k] * x).transpose();
    T.row(d + p + k) = (2.0 * (WA + WA.transpose()) * x).transpose();
  }
  return T;
}

Matrix QuadraticGraph::metric(const Vector& x) const {
  const Matrix T = tangent(x);
  return T.transpose() * T;
}

Matrix QuadraticGraph::metric_deviation(const Vector& x) const {
  const Matrix T = tangent(x).bottomRows(2 * static_cast<int>(W.size()));
  return T.transpose() * T;
}

namespace {

struct FdCurvature {
  double value = 0.0;
  double scale = 0.0;
};

FdCurvature fd_curvature(const QuadraticGraph& graph, double h) {
  const int d = graph.dim();
  auto G = [&](const Vector& x) { return graph.metric_deviation(x); };
  auto unit = [d](int i) {
    Vector e = Vector::Zero(d);
    e[i] = 1.0;
    return e;
  };
  const Matrix G0 = G(Vector::Zero(d));

  // Pure second derivatives d_a d_a g for every a.
  std::vector<Matrix> pure(d);
  for (int a = 0; a < d; ++a) {
    const Vector e = h * unit(a);
    pure[a] = (G(e) - 2.0 * G0 + G(-e)) / (h * h);
  }
  FdCurvature out;
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      double mixed_ab;
      if (a == b) {
        mixed_ab = pure[a](a, a);
      } else {
        const Vector ea = h * unit(a), eb = h * unit(b);
        const Matrix D =
            (G(ea + eb) - G(ea - eb) - G(-ea + eb) + G(-ea - eb)) / (4.0 * h * h);
        mixed_ab = D(a, b);
      }
      const double t1 = -pure[a](b, b);
      const double t2 = 2.0 * mixed_ab;
      const double t3 = -pure[b](a, a);
      out.value += 0.5 * (t1 + t2 + t3);
      out.scale += 0.5 * (std::abs(t1) + std::abs(t2) + std::abs(t3));
    }
  }
  return out;
}

}  // namespace

OracleResult curvature_oracle(const QuadraticGraph& graph, double h, double rel_tol) {
  if (!(h > 0.0) || !std::isfinite(h)) throw OracleError("finite-difference step must be positive");
  for (const auto& W : graph.W) {
    if (W.rows() != graph.dim() || W.cols() != graph.dim()) {
      throw DimensionError("graph coefficient has wrong size");
    }
  }
  OracleResult r;
  const int d = graph.dim();
  r.origin_metric_defect =
      (graph.metric(Vector::Zero(d)) - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
  if (r.origin_metric_defect > 1e-14) {
    throw OracleError("embedding does not induce an orthonormal frame at the origin");
  }
  const FdCurvature full = fd_curvature(graph, h);
  const FdCurvature half = fd_curvature(graph, 0.5 * h);
  r.curvature = full.value;
  r.curvature_half_step = half.value;
  r.richardson = (4.0 * half.value - full.value) / 3.0;
  const double scale = std::max(full.scale, 1e-300);
  if (std::abs(full.value - half.value) > rel_tol * scale) {
    std::ostringstream os;
    os << "finite-difference curvature changes by " << std::abs(full.value - half.value)
       << " between h = " << h << " and h/2 (scale " << scale << "); adjust the step";
    throw OracleError(os.str());
  }
  return r;
}

}  // namespace ssmsel
