#include "ssmsel/periodic_response.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

namespace ssmsel {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

// ---------------------------------------------------------------------------
// PeriodicSolution

PeriodicSolution PeriodicSolution::zero(int n, int nh, double omega) {
  PeriodicSolution s;
  s.omega = omega;
  s.nh = nh;
  s.coeffs = Matrix::Zero(n, 2 * nh + 1);
  return s;
}

double PeriodicSolution::period() const {
  if (!(omega > 0.0)) throw std::logic_error("static solution has no period");
  return kTwoPi / omega;
}

Vector PeriodicSolution::at(double t) const {
  Vector q = coeffs.col(0);
  for (int h = 1; h <= nh; ++h) {
    const double th = h * omega * t;
    q += std::cos(th) * coeffs.col(2 * h - 1) + std::sin(th) * coeffs.col(2 * h);
  }
  return q;
}

Vector PeriodicSolution::velocity(double t) const {
  Vector v = Vector::Zero(dofs());
  for (int h = 1; h <= nh; ++h) {
    const double w = h * omega;
    v += w * (-std::sin(w * t) * coeffs.col(2 * h - 1) + std::cos(w * t) * coeffs.col(2 * h));
  }
  return v;
}

Vector PeriodicSolution::acceleration(double t) const {
  Vector a = Vector::Zero(dofs());
  for (int h = 1; h <= nh; ++h) {
    const double w = h * omega;
    a -= w * w * (std::cos(w * t) * coeffs.col(2 * h - 1) + std::sin(w * t) * coeffs.col(2 * h));
  }
  return a;
}

Matrix PeriodicSolution::sample(int samples) const {
  if (samples <= 0) samples = default_samples();
  const int H = 2 * nh + 1;
  Matrix basis(H, samples);
  for (int j = 0; j < samples; ++j) {
    const double th = kTwoPi * j / samples;
    basis(0, j) = 1.0;
    for (int h = 1; h <= nh; ++h) {
      basis(2 * h - 1, j) = std::cos(h * th);
      basis(2 * h, j) = std::sin(h * th);
    }
  }
  return coeffs * basis;
}

double PeriodicSolution::max_norm(int samples) const {
  return sample(samples).colwise().norm().maxCoeff();
}

double PeriodicSolution::mass_norm(const Matrix& M, int samples) const {
  if (samples <= 0) samples = default_samples();
  const Matrix Q = sample(samples);
  const double integral = (Q.array() * (M * Q).array()).sum() * period() / samples;
  return std::sqrt(std::max(integral, 0.0));
}

double PeriodicSolution::dof_amplitude(int i, int samples) const {
  return sample(samples).row(i).cwiseAbs().maxCoeff();
}

PeriodicSolution PeriodicSolution::with_harmonics(int new_nh) const {
  PeriodicSolution s = *this;
  s.nh = new_nh;
  s.coeffs = Matrix::Zero(dofs(), 2 * new_nh + 1);
  const int keep = std::min(2 * nh + 1, 2 * new_nh + 1);
  s.coeffs.leftCols(keep) = coeffs.leftCols(keep);
  return s;
}

PeriodicSolution PeriodicSolution::shifted(double dt) const {
  PeriodicSolution s = *this;
  for (int h = 1; h <= nh; ++h) {
    const double c = std::cos(h * omega * dt), sn = std::sin(h * omega * dt);
    // a cos(w(t+dt)) + b sin(w(t+dt)) = (a c + b s) cos(wt) + (b c - a s) sin(wt)
    s.coeffs.col(2 * h - 1) = c * coeffs.col(2 * h - 1) + sn * coeffs.col(2 * h);
    s.coeffs.col(2 * h) = c * coeffs.col(2 * h) - sn * coeffs.col(2 * h - 1);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Linear response and reduction

Eigen::VectorXcd linear_response_complex(const SecondOrderSystem& sys, const ForcingSpec& forcing,
                                         double omega) {
  if (forcing.amplitude.size() != sys.n) throw DimensionError("forcing vector has wrong length");
  using CMatrix = Eigen::MatrixXcd;
  CMatrix D = (sys.K - omega * omega * sys.M).cast<std::complex<double>>();
  D += std::complex<double>(0.0, omega) * sys.C.cast<std::complex<double>>();
  Eigen::FullPivLU<CMatrix> lu(D);
  if (!lu.isInvertible()) {
    throw ConvergenceError("dynamic stiffness is singular at omega = " + std::to_string(omega));
  }
  const Eigen::VectorXcd rhs = forcing.load().cast<std::complex<double>>();
  return lu.solve(rhs);
}

PeriodicSolution linear_response(const SecondOrderSystem& sys, const ForcingSpec& forcing,
                                 double omega) {
  const Eigen::VectorXcd qh = linear_response_complex(sys, forcing, omega);
  PeriodicSolution s = PeriodicSolution::zero(sys.n, 1, omega);
  if (omega == 0.0) {
    s.coeffs.col(0) = qh.real();
    return s;
  }
  // q(t) = Re(qh e^{i omega t}) = Re(qh) cos - Im(qh) sin
  s.coeffs.col(1) = qh.real();
  s.coeffs.col(2) = -qh.imag();
  return s;
}

namespace {

// Contracts a canonical physical tensor with the master basis and returns the
// canonical reduced tensor in modal coordinates.
template <int Degree>
PolyTensor<Degree> project_tensor(const PolyTensor<Degree>& phys, const Matrix& UI) {
  const int m = static_cast<int>(UI.cols());
  std::vector<typename PolyTensor<Degree>::Entry> out;
  if (phys.empty()) return PolyTensor<Degree>(m);

  // Dense accumulation over ordered index tuples, then symmetrized sums.
  int tuples = 1;
  for (int d = 0; d < Degree; ++d) tuples *= m;
  std::vector<double> dense(static_cast<std::size_t>(m) * tuples, 0.0);
  for (const auto& e : phys.entries()) {
    std::array<int, Degree> a{};
    for (int flat = 0; flat < tuples; ++flat) {
      int rem = flat;
      double prod = e.value;
      for (int d = Degree - 1; d >= 0; --d) {
        a[d] = rem % m;
        rem /= m;
        prod *= UI(e.idx[d], a[d]);
      }
      if (prod == 0.0) continue;
      for (int i = 0; i < m; ++i) dense[static_cast<std::size_t>(i) * tuples + flat] += UI(e.k, i) * prod;
    }
  }
  for (int i = 0; i < m; ++i) {
    for (int flat = 0; flat < tuples; ++flat) {
      const double v = dense[static_cast<std::size_t>(i) * tuples + flat];
      if (v == 0.0) continue;
      typename PolyTensor<Degree>::Entry entry;
      entry.k = i;
      int rem = flat;
      for (int d = Degree - 1; d >= 0; --d) {
        entry.idx[d] = rem % m;
        rem /= m;
      }
      entry.value = v;
      out.push_back(entry);
    }
  }
  return PolyTensor<Degree>(m, std::move(out));
}

}  // namespace

ReducedModel reduce(const ModalModel& modal, const MasterSplit& split, const ForcingSpec& forcing) {
  if (split.m() == 0) throw std::invalid_argument("master set is empty");
  const SecondOrderSystem& sys = *modal.system;
  if (forcing.amplitude.size() != sys.n) throw DimensionError("forcing vector has wrong length");
  ReducedModel rom;
  rom.split = split;
  rom.lift = master_basis(modal, split);
  const int m = split.m();
  Vector w2(m), c(m);
  for (int a = 0; a < m; ++a) {
    const int i = split.master()[a];
    w2[a] = modal.frequency(i) * modal.frequency(i);
    c[a] = 2.0 * modal.damping(i) * modal.frequency(i);
  }
  rom.system = SecondOrderSystem(Matrix::Identity(m, m), c.asDiagonal().toDenseMatrix(),
                                 w2.asDiagonal().toDenseMatrix(),
                                 project_tensor(sys.quad, rom.lift),
                                 project_tensor(sys.cubic, rom.lift));
  rom.forcing = {rom.lift.transpose() * forcing.amplitude, forcing.omega, forcing.epsilon};
  rom.physical_mass = sys.M;
  return rom;
}

PeriodicSolution lift(const PeriodicSolution& solution, const ReducedModel& rom) {
  if (solution.dofs() != rom.split.m()) throw DimensionError("solution does not belong to the ROM");
  PeriodicSolution out = solution;
  out.coeffs = rom.lift * solution.coeffs;
  return out;
}

// ---------------------------------------------------------------------------
// Harmonic balance

HarmonicBalance::HarmonicBalance(const SecondOrderSystem& sys, int nh)
    : sys_(sys), n_(sys.n), nh_(nh) {
  if (nh < 1) throw std::invalid_argument("harmonic count must be at least 1");
  nt_ = static_cast<int>(std::bit_ceil(static_cast<unsigned>(4 * nh + 1)));
  const int H = components();
  synth_.resize(nt_, H);
  project_.resize(H, nt_);
  for (int j = 0; j < nt_; ++j) {
    const double th = kTwoPi * j / nt_;
    synth_(j, 0) = 1.0;
    project_(0, j) = 1.0 / nt_;
    for (int h = 1; h <= nh; ++h) {
      synth_(j, 2 * h - 1) = std::cos(h * th);
      synth_(j, 2 * h) = std::sin(h * th);
      project_(2 * h - 1, j) = 2.0 * std::cos(h * th) / nt_;
      project_(2 * h, j) = 2.0 * std::sin(h * th) / nt_;
    }
  }
}

Vector HarmonicBalance::pack(const PeriodicSolution& s) const {
  const PeriodicSolution t = s.nh == nh_ ? s : s.with_harmonics(nh_);
  if (t.dofs() != n_) throw DimensionError("solution has wrong DOF count");
  Vector X(unknowns());
  for (int c = 0; c < components(); ++c) X.segment(c * n_, n_) = t.coeffs.col(c);
  return X;
}

PeriodicSolution HarmonicBalance::unpack(const Vector& X, double omega) const {
  PeriodicSolution s = PeriodicSolution::zero(n_, nh_, omega);
  for (int c = 0; c < components(); ++c) s.coeffs.col(c) = X.segment(c * n_, n_);
  return s;
}

Vector HarmonicBalance::load(const Vector& force_amplitude) const {
  Vector F = Vector::Zero(unknowns());
  F.segment(n_, n_) = force_amplitude;
  return F;
}

Vector HarmonicBalance::linear_part(const Vector& X, double omega) const {
  Vector L(unknowns());
  L.segment(0, n_) = sys_.K * X.segment(0, n_);
  for (int h = 1; h <= nh_; ++h) {
    const double w = h * omega;
    const auto a = X.segment((2 * h - 1) * n_, n_);
    const auto b = X.segment(2 * h * n_, n_);
    L.segment((2 * h - 1) * n_, n_) = sys_.K * a - w * w * (sys_.M * a) + w * (sys_.C * b);
    L.segment(2 * h * n_, n_) = sys_.K * b - w * w * (sys_.M * b) - w * (sys_.C * a);
  }
  return L;
}

Vector HarmonicBalance::residual(const Vector& X, double omega, const Vector& load) const {
  Vector R = linear_part(X, omega) - load;
  if (sys_.is_linear()) return R;
  const int H = components();
  Matrix coeff(H, n_);  // component x dof
  for (int c = 0; c < H; ++c) coeff.row(c) = X.segment(c * n_, n_).transpose();
  const Matrix Q = synth_ * coeff;  // nt x n
  Matrix S(nt_, n_);
  for (int j = 0; j < nt_; ++j) S.row(j) = evaluate_nonlinearity(sys_, Q.row(j).transpose()).transpose();
  const Matrix F = project_ * S;  // H x n
  for (int c = 0; c < H; ++c) R.segment(c * n_, n_) += F.row(c).transpose();
  return R;
}

Matrix HarmonicBalance::jacobian(const Vector& X, double omega) const {
  const int H = components();
  const int N = unknowns();
  Matrix J = Matrix::Zero(N, N);
  J.block(0, 0, n_, n_) = sys_.K;
  for (int h = 1; h <= nh_; ++h) {
    const double w = h * omega;
    const Matrix D = sys_.K - w * w * sys_.M;
    const int ca = (2 * h - 1) * n_, cb = 2 * h * n_;
    J.block(ca, ca, n_, n_) = D;
    J.block(ca, cb, n_, n_) = w * sys_.C;
    J.block(cb, ca, n_, n_) = -w * sys_.C;
    J.block(cb, cb, n_, n_) = D;
  }
  if (sys_.is_linear()) return J;

  Matrix coeff(H, n_);
  for (int c = 0; c < H; ++c) coeff.row(c) = X.segment(c * n_, n_).transpose();
  const Matrix Q = synth_ * coeff;
  std::vector<Matrix> Jt(nt_);
  for (int j = 0; j < nt_; ++j) Jt[j] = evaluate_jacobian(sys_, Q.row(j).transpose());

  Vector v(nt_);
  for (int i = 0; i < n_; ++i) {
    for (int k = 0; k < n_; ++k) {
      bool any = false;
      for (int j = 0; j < nt_; ++j) {
        v[j] = Jt[j](i, k);
        any = any || v[j] != 0.0;
      }
      if (!any) continue;
      // d F_{c,i} / d X_{c',k} = sum_j project(c, j) J_j(i, k) synth(j, c')
      const Matrix block = project_ * v.asDiagonal() * synth_;
      for (int c = 0; c < H; ++c)
        for (int cp = 0; cp < H; ++cp) J(c * n_ + i, cp * n_ + k) += block(c, cp);
    }
  }
  return J;
}

Vector HarmonicBalance::omega_derivative(const Vector& X, double omega) const {
  Vector d = Vector::Zero(unknowns());
  for (int h = 1; h <= nh_; ++h) {
    const auto a = X.segment((2 * h - 1) * n_, n_);
    const auto b = X.segment(2 * h * n_, n_);
    // d/domega of (K - h^2 w^2 M) a + h w C b and (K - h^2 w^2 M) b - h w C a
    d.segment((2 * h - 1) * n_, n_) = -2.0 * h * h * omega * (sys_.M * a) + h * (sys_.C * b);
    d.segment(2 * h * n_, n_) = -2.0 * h * h * omega * (sys_.M * b) - h * (sys_.C * a);
  }
  return d;
}

namespace {

struct NewtonResult {
  Vector x;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Newton iteration with backtracking on the residual norm. When no backtracked
// step decreases the residual the full step is taken anyway; the best iterate
// is returned if the iteration does not converge.
template <class Residual, class Jacobian>
NewtonResult damped_newton(Residual&& F, Jacobian&& J, Vector x, double tol, int max_iter) {
  Vector r = F(x);
  double rn = r.norm();
  NewtonResult best{x, rn, 0, false};
  for (int it = 0; it < max_iter; ++it) {
    if (!std::isfinite(rn)) break;
    if (rn <= tol) return {x, rn, it, true};
    Eigen::PartialPivLU<Matrix> lu(J(x));
    const Vector dx = lu.solve(-r);
    if (!dx.allFinite()) break;
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 8; ++ls) {
      Vector xt = x + alpha * dx;
      Vector rt = F(xt);
      const double rtn = rt.norm();
      if (std::isfinite(rtn) && rtn < (1.0 - 1e-4 * alpha) * rn) {
        x = std::move(xt);
        r = std::move(rt);
        rn = rtn;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      x += dx;
      r = F(x);
      rn = r.norm();
    }
    if (std::isfinite(rn) && rn < best.residual) best = {x, rn, it + 1, false};
    if (rn <= tol) return {x, rn, it + 1, true};
  }
  best.converged = best.residual <= tol;
  return best;
}

}  // namespace

PeriodicSolution solve_periodic_hb(const SecondOrderSystem& sys, const ForcingSpec& forcing,
                                   double omega, const HBOptions& opts,
                                   const std::optional<PeriodicSolution>& init) {
  if (forcing.amplitude.size() != sys.n) throw DimensionError("forcing vector has wrong length");
  const HarmonicBalance hb(sys, opts.nh);
  const Vector load = hb.load(forcing.load());
  Vector X0 = init ? hb.pack(*init) : hb.pack(linear_response(sys, forcing, omega));
  const double tol = opts.tol * (1.0 + forcing.load().norm());
  auto result = damped_newton([&](const Vector& X) { return hb.residual(X, omega, load); },
                              [&](const Vector& X) { return hb.jacobian(X, omega); }, X0, tol,
                              opts.max_iter);
  PeriodicSolution s = hb.unpack(result.x, omega);
  s.residual = result.residual;
  s.iterations = result.iterations;
  s.converged = result.converged;
  return s;
}

double time_domain_residual(const SecondOrderSystem& sys, const ForcingSpec& forcing,
                            const PeriodicSolution& solution, int samples) {
  if (samples <= 0) samples = solution.default_samples();
  const double T = solution.period();
  const Vector f = forcing.load();
  double sum = 0.0;
  for (int j = 0; j < samples; ++j) {
    const double t = T * j / samples;
    const Vector q = solution.at(t);
    const Vector r = sys.M * solution.acceleration(t) + sys.C * solution.velocity(t) + sys.K * q +
                     evaluate_nonlinearity(sys, q) - std::cos(solution.omega * t) * f;
    sum += r.squaredNorm();
  }
  return std::sqrt(sum / samples);
}

// ---------------------------------------------------------------------------
// Continuation

const CurvePoint* ResponseCurve::peak() const {
  const CurvePoint* best = nullptr;
  for (const auto& p : points) {
    if (!best || p.norm > best->norm) best = &p;
  }
  return best;
}

namespace {

// Physical-coordinate measurement of solutions of the swept model.
struct Observer {
  Matrix lift;  // empty: identity
  Matrix mass;

  void measure(CurvePoint& p) const {
    if (lift.size() == 0) {
      p.norm = p.solution.max_norm();
      p.mass_norm = p.solution.mass_norm(mass);
    } else {
      PeriodicSolution phys = p.solution;
      phys.coeffs = lift * p.solution.coeffs;
      p.norm = phys.max_norm();
      p.mass_norm = phys.mass_norm(mass);
    }
  }
};

class Tracer {
 public:
  Tracer(const SecondOrderSystem& sys, const ForcingSpec& forcing, SweepKind kind, double begin,
         double end, const ContinuationOptions& opts, Observer observer)
      : hb_(sys, opts.hb.nh),
        sys_(sys),
        forcing_(forcing),
        kind_(kind),
        begin_(begin),
        end_(end),
        opts_(opts),
        observer_(std::move(observer)) {
    if (begin == end) throw std::invalid_argument("sweep range is empty");
    if (kind == SweepKind::Frequency && (begin <= 0.0 || end <= 0.0)) {
      throw std::invalid_argument("frequency sweep needs positive frequencies");
    }
    dir_ = end > begin ? 1.0 : -1.0;
    range_ = std::abs(end - begin);
    step0_ = opts.initial_step > 0 ? opts.initial_step : range_ / 100.0;
    min_step_ = opts.min_step > 0 ? opts.min_step : step0_ / 1024.0;
    max_step_ = opts.max_step > 0 ? opts.max_step : 4.0 * step0_;
    unit_load_ = hb_.load(forcing.amplitude);
    const double max_eps =
        kind == SweepKind::Amplitude ? std::max(std::abs(begin), std::abs(end)) : forcing.epsilon;
    tol_ = opts.hb.tol * (1.0 + max_eps * forcing.amplitude.norm());
    curve_.kind = kind;
  }

  ResponseCurve run();

 private:
  double omega_at(double mu) const { return kind_ == SweepKind::Frequency ? mu : forcing_.omega; }
  double eps_at(double mu) const { return kind_ == SweepKind::Amplitude ? mu : forcing_.epsilon; }

  Vector residual(const Vector& X, double mu) const {
    return hb_.residual(X, omega_at(mu), eps_at(mu) * unit_load_);
  }
  Matrix jac(const Vector& X, double mu) const { return hb_.jacobian(X, omega_at(mu)); }
  Vector dmu(const Vector& X, double mu) const {
    return kind_ == SweepKind::Frequency ? hb_.omega_derivative(X, mu) : Vector(-unit_load_);
  }

  NewtonResult solve_at(double mu, const Vector& guess, int max_iter) const {
    return damped_newton([&](const Vector& X) { return residual(X, mu); },
                         [&](const Vector& X) { return jac(X, mu); }, guess, tol_, max_iter);
  }

  void push(const Vector& X, double mu, const NewtonResult& nr, bool arclength) {
    CurvePoint p;
    p.param = mu;
    p.arclength = arclength;
    p.solution = hb_.unpack(X, omega_at(mu));
    p.solution.residual = nr.residual;
    p.solution.iterations = nr.iterations;
    p.solution.converged = nr.converged;
    observer_.measure(p);
    curve_.points.push_back(std::move(p));
  }

  bool start();
  bool natural_step();
  bool arclength_step();
  void enter_arclength();

  HarmonicBalance hb_;
  const SecondOrderSystem& sys_;
  ForcingSpec forcing_;
  SweepKind kind_;
  double begin_, end_, dir_ = 1.0, range_ = 0.0;
  ContinuationOptions opts_;
  Observer observer_;
  Vector unit_load_;
  double tol_ = 0.0;
  double step0_ = 0.0, min_step_ = 0.0, max_step_ = 0.0;

  ResponseCurve curve_;
  Vector X_;
  double mu_ = 0.0;
  double step_ = 0.0;
  bool arclength_ = false;
  // Arclength state: scaled tangent (X / xs, mu / ms) and step.
  Vector tangent_;
  double ds_ = 0.0, ds_min_ = 0.0, ds_max_ = 0.0;
  double xs_ = 1.0, ms_ = 1.0;
  double last_dmu_sign_ = 0.0;
  int arclength_steps_ = 0;
};

bool Tracer::start() {
  mu_ = begin_;
  const double omega = omega_at(mu_);
  const ForcingSpec f0 = forcing_.with_omega(omega).with_epsilon(eps_at(mu_));
  Vector guess = hb_.pack(linear_response(sys_, f0, omega));
  NewtonResult nr = solve_at(mu_, guess, 4 * opts_.hb.max_iter);
  if (!nr.converged) {
    // Ramp the forcing up from a small fraction at the starting frequency.
    const double target_eps = eps_at(mu_);
    Vector X = hb_.pack(linear_response(sys_, f0.with_epsilon(0.01 * target_eps), omega));
    bool ok = true;
    for (int s = 1; s <= 100 && ok; ++s) {
      const double e = target_eps * (0.01 + 0.99 * s / 100.0);
      auto r = damped_newton(
          [&](const Vector& Y) { return hb_.residual(Y, omega, e * unit_load_); },
          [&](const Vector& Y) { return hb_.jacobian(Y, omega); }, X, tol_, opts_.hb.max_iter);
      ok = r.converged;
      X = r.x;
      nr = r;
    }
    if (!ok && kind_ == SweepKind::Frequency) {
      // The ramp crosses a fold: continue in epsilon with arclength instead.
      ContinuationOptions aopts = opts_;
      aopts.allow_jumps = false;
      aopts.initial_step = aopts.min_step = aopts.max_step = 0.0;
      Tracer ramp(sys_, f0, SweepKind::Amplitude, 0.01 * target_eps, target_eps, aopts, observer_);
      const ResponseCurve c = ramp.run();
      if (c.complete && !c.points.empty()) {
        nr = solve_at(mu_, hb_.pack(c.points.back().solution), 4 * opts_.hb.max_iter);
        ok = nr.converged;
      }
    }
    if (!ok) {
      curve_.diagnostics.push_back("no converged harmonic balance solution at the start of the sweep");
      return false;
    }
  }
  X_ = nr.x;
  push(X_, mu_, nr, false);
  step_ = step0_;
  return true;
}

bool Tracer::natural_step() {
  double target = mu_ + dir_ * step_;
  if (dir_ * (target - end_) > 0) target = end_;
  Vector guess = X_;
  if (kind_ == SweepKind::Frequency) {
    // Tangent predictor along the branch.
    Eigen::PartialPivLU<Matrix> lu(jac(X_, mu_));
    const Vector v = lu.solve(-dmu(X_, mu_));
    if (v.allFinite()) guess = X_ + v * (target - mu_);
  }
  NewtonResult nr = solve_at(target, guess, opts_.hb.max_iter);
  bool accept = nr.converged;
  if (accept && kind_ == SweepKind::Frequency) {
    // A large unexpected change means Newton left the branch.
    const double change = (nr.x - guess).norm();
    if (change > 0.25 * std::max({guess.norm(), nr.x.norm(), 1e-300})) accept = false;
  }
  if (accept) {
    const double before = curve_.points.back().norm;
    push(nr.x, target, nr, false);
    if (kind_ == SweepKind::Amplitude && before > 0.0 && mu_ != 0.0) {
      const double expected = std::abs(target / mu_);
      const double actual = curve_.points.back().norm / before;
      if (std::abs(actual / expected - 1.0) > 0.25 && std::abs(actual - 1.0) > 0.25) {
        curve_.jumps.push_back({target, before, curve_.points.back().norm});
      }
    }
    X_ = nr.x;
    mu_ = target;
    if (nr.iterations <= 4) step_ = std::min(step_ * 1.5, max_step_);
    return true;
  }
  step_ *= 0.5;
  if (step_ >= min_step_) return true;

  if (kind_ == SweepKind::Amplitude && opts_.allow_jumps) {
    double jump_target = mu_ + dir_ * step0_;
    if (dir_ * (jump_target - end_) > 0) jump_target = end_;
    NewtonResult jr = solve_at(jump_target, X_, 10 * opts_.hb.max_iter);
    if (jr.converged) {
      const double before = curve_.points.back().norm;
      push(jr.x, jump_target, jr, false);
      curve_.jumps.push_back({jump_target, before, curve_.points.back().norm});
      std::ostringstream os;
      os << "sequential continuation jumped between branches at parameter " << jump_target;
      curve_.diagnostics.push_back(os.str());
      X_ = jr.x;
      mu_ = jump_target;
      step_ = step0_;
      return true;
    }
  }
  enter_arclength();
  return true;
}

void Tracer::enter_arclength() {
  arclength_ = true;
  arclength_steps_ = 0;
  std::ostringstream os;
  os << "switched to arclength continuation at parameter " << mu_;
  curve_.diagnostics.push_back(os.str());
  xs_ = std::max(X_.norm(), 1e-300);
  ms_ = range_;
  ds_ = step0_ / ms_;
  ds_min_ = ds_ / 4096.0;
  ds_max_ = 8.0 * ds_;
  // Initial tangent: secant through the last two points when available.
  const int N = hb_.unknowns();
  tangent_ = Vector::Zero(N + 1);
  if (curve_.points.size() >= 2) {
    const auto& p0 = curve_.points[curve_.points.size() - 2];
    const Vector X0 = hb_.pack(p0.solution);
    tangent_.head(N) = (X_ - X0) / xs_;
    tangent_[N] = (mu_ - p0.param) / ms_;
  } else {
    tangent_[N] = dir_;
  }
  if (tangent_.norm() == 0.0) tangent_[N] = dir_;
  tangent_.normalize();
  last_dmu_sign_ = dir_;
}

bool Tracer::arclength_step() {
  const int N = hb_.unknowns();
  // Tangent from the bordered system [J, R_mu; t_prev^T S] dY = [0; 1].
  Matrix Jb(N + 1, N + 1);
  Jb.topLeftCorner(N, N) = jac(X_, mu_);
  Jb.topRightCorner(N, 1) = dmu(X_, mu_);
  Jb.bottomLeftCorner(1, N) = tangent_.head(N).transpose() / xs_;
  Jb(N, N) = tangent_[N] / ms_;
  Vector rhs = Vector::Zero(N + 1);
  rhs[N] = 1.0;
  Vector dY = Eigen::PartialPivLU<Matrix>(Jb).solve(rhs);
  if (dY.allFinite() && dY.norm() > 0.0) {
    Vector t(N + 1);
    t.head(N) = dY.head(N) / xs_;
    t[N] = dY[N] / ms_;
    t.normalize();
    if (t.dot(tangent_) < 0) t = -t;
    tangent_ = t;
  }

  Vector Z0(N + 1);
  Z0.head(N) = X_;
  Z0[N] = mu_;
  auto scaled_step = [&](const Vector& Z) {
    return tangent_.head(N).dot((Z.head(N) - X_) / xs_) + tangent_[N] * (Z[N] - mu_) / ms_;
  };
  Vector pred(N + 1);
  pred.head(N) = X_ + ds_ * xs_ * tangent_.head(N);
  pred[N] = mu_ + ds_ * ms_ * tangent_[N];
  const double ds = ds_;
  auto F = [&](const Vector& Z) {
    Vector r(N + 1);
    r.head(N) = residual(Z.head(N), Z[N]);
    r[N] = scaled_step(Z) - ds;
    return r;
  };
  auto J = [&](const Vector& Z) {
    Matrix A(N + 1, N + 1);
    A.topLeftCorner(N, N) = jac(Z.head(N), Z[N]);
    A.topRightCorner(N, 1) = dmu(Z.head(N), Z[N]);
    A.bottomLeftCorner(1, N) = tangent_.head(N).transpose() / xs_;
    A(N, N) = tangent_[N] / ms_;
    return A;
  };
  NewtonResult nr = damped_newton(F, J, pred, tol_, opts_.hb.max_iter);
  if (!nr.converged) {
    ds_ *= 0.5;
    if (ds_ < ds_min_) {
      curve_.diagnostics.push_back("arclength continuation failed; branch truncated");
      return false;
    }
    return true;
  }

  const double mu_new = nr.x[N];
  const Vector X_new = nr.x.head(N);
  // Crossing the end of the range: finish with a natural solve at the end.
  if (dir_ * (mu_new - end_) >= 0) {
    const double frac = (end_ - mu_) / (mu_new - mu_);
    const Vector guess = X_ + frac * (X_new - X_);
    NewtonResult fin = solve_at(end_, guess, opts_.hb.max_iter);
    if (fin.converged) {
      push(fin.x, end_, fin, true);
      X_ = fin.x;
      mu_ = end_;
      return true;
    }
  }
  const double dmu_sign = (mu_new - mu_) >= 0 ? 1.0 : -1.0;
  if (dmu_sign != last_dmu_sign_) curve_.turning_points.push_back(mu_);
  last_dmu_sign_ = dmu_sign;
  push(X_new, mu_new, nr, true);
  X_ = X_new;
  mu_ = mu_new;
  xs_ = std::max(X_.norm(), 1e-300);
  ++arclength_steps_;
  if (nr.iterations <= 4) ds_ = std::min(ds_ * 1.5, ds_max_);

  if (dir_ * (mu_ - begin_) < -0.05 * range_) {
    curve_.diagnostics.push_back("branch turned back out of the parameter range");
    return false;
  }
  if (arclength_steps_ >= 3 && tangent_[N] * dir_ > 0.8) {
    arclength_ = false;
    step_ = std::clamp(std::abs(ds_ * ms_ * tangent_[N]), min_step_ * 2.0, max_step_);
  }
  return true;
}

ResponseCurve Tracer::run() {
  if (!start()) return curve_;
  while (static_cast<int>(curve_.points.size()) < opts_.max_points) {
    if (mu_ == end_) {
      curve_.complete = true;
      break;
    }
    const bool ok = arclength_ ? arclength_step() : natural_step();
    if (!ok) break;
  }
  if (static_cast<int>(curve_.points.size()) >= opts_.max_points && mu_ != end_) {
    curve_.diagnostics.push_back("point budget exhausted before the end of the range");
  }
  return std::move(curve_);
}

Observer physical_observer(const SecondOrderSystem& sys) { return {Matrix(), sys.M}; }
Observer rom_observer(const ReducedModel& rom) { return {rom.lift, rom.physical_mass}; }

}  // namespace

ResponseCurve frequency_sweep(const SecondOrderSystem& sys, const ForcingSpec& forcing,
                              double omega_begin, double omega_end,
                              const ContinuationOptions& opts) {
  Tracer t(sys, forcing, SweepKind::Frequency, omega_begin, omega_end, opts,
           physical_observer(sys));
  return t.run();
}

ResponseCurve frequency_sweep(const ReducedModel& rom, double omega_begin, double omega_end,
                              const ContinuationOptions& opts) {
  Tracer t(rom.system, rom.forcing, SweepKind::Frequency, omega_begin, omega_end, opts,
           rom_observer(rom));
  return t.run();
}

ResponseCurve amplitude_sweep(const SecondOrderSystem& sys, const ForcingSpec& forcing,
                              double eps_begin, double eps_end, const ContinuationOptions& opts) {
  if (!(forcing.omega > 0.0)) throw std::invalid_argument("amplitude sweep needs omega > 0");
  Tracer t(sys, forcing, SweepKind::Amplitude, eps_begin, eps_end, opts, physical_observer(sys));
  return t.run();
}

ResponseCurve amplitude_sweep(const ReducedModel& rom, double eps_begin, double eps_end,
                              const ContinuationOptions& opts) {
  if (!(rom.forcing.omega > 0.0)) throw std::invalid_argument("amplitude sweep needs omega > 0");
  Tracer t(rom.system, rom.forcing, SweepKind::Amplitude, eps_begin, eps_end, opts,
           rom_observer(rom));
  return t.run();
}

double relative_error(const PeriodicSolution& full, const PeriodicSolution& reduced_lifted,
                      const Matrix& M, int samples) {
  if (full.dofs() != reduced_lifted.dofs()) throw DimensionError("solutions have different sizes");
  if (std::abs(full.omega - reduced_lifted.omega) > 1e-12 * std::abs(full.omega)) {
    throw std::invalid_argument("solutions must share the same period");
  }
  const int nh = std::max(full.nh, reduced_lifted.nh);
  if (samples <= 0) samples = 128 * std::max(nh, 1);
  const PeriodicSolution a = full.with_harmonics(nh);
  PeriodicSolution diff = reduced_lifted.with_harmonics(nh);
  diff.coeffs -= a.coeffs;
  const double ref = a.mass_norm(M, samples);
  if (ref == 0.0) throw std::invalid_argument("reference solution has zero mass norm");
  return diff.mass_norm(M, samples) / ref;
}

}  // namespace ssmsel
