#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssmsel/modal_analysis.hpp"

namespace ssmsel {

/// Truncated Fourier series of a T-periodic displacement, T = 2 pi / omega.
///
/// Column 0 of `coeffs` is the mean, column 2h-1 the cos(h omega t) and
/// column 2h the sin(h omega t) coefficient vector.
struct PeriodicSolution {
  double omega = 0.0;
  int nh = 0;
  Matrix coeffs;
  double residual = 0.0;
  int iterations = 0;
  bool converged = true;

  static PeriodicSolution zero(int n, int nh, double omega);

  int dofs() const { return static_cast<int>(coeffs.rows()); }
  double period() const;
  Vector at(double t) const;
  Vector velocity(double t) const;
  Vector acceleration(double t) const;
  /// n x samples matrix of displacements on a uniform grid over one period.
  Matrix sample(int samples) const;
  /// max over one period of the Euclidean norm of q(t).
  double max_norm(int samples = 0) const;
  /// sqrt(int_0^T <q, M q> dt), periodic trapezoid rule.
  double mass_norm(const Matrix& M, int samples = 0) const;
  /// Amplitude max_t |q_i(t)| of one DOF.
  double dof_amplitude(int i, int samples = 0) const;
  /// Same signal with the harmonic count changed (padded with zeros or truncated).
  PeriodicSolution with_harmonics(int new_nh) const;
  /// Shifts the signal in time: q(t) -> q(t + dt).
  PeriodicSolution shifted(double dt) const;
  int default_samples() const { return 128 * std::max(nh, 1); }
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Complex single-harmonic amplitude (K - Omega^2 M + i Omega C)^{-1} eps f.
Eigen::VectorXcd linear_response_complex(const SecondOrderSystem& sys, const ForcingSpec& forcing,
                                         double omega);
PeriodicSolution linear_response(const SecondOrderSystem& sys, const ForcingSpec& forcing,
                                 double omega);

/// Galerkin projection onto the master modes, in modal coordinates.
struct ReducedModel {
  MasterSplit split;
  SecondOrderSystem system;  // M = I, K = diag(omega^2), C = diag(2 zeta omega)
  Matrix lift;               // U_I, physical = lift * modal
  ForcingSpec forcing;       // amplitude U_I^T f, same epsilon and omega as the source
  Matrix physical_mass;
};

ReducedModel reduce(const ModalModel& modal, const MasterSplit& split, const ForcingSpec& forcing);

/// Per-harmonic map to physical coordinates, q = U_I xi.
PeriodicSolution lift(const PeriodicSolution& solution, const ReducedModel& rom);

struct HBOptions {
  int nh = 7;
  double tol = 1e-9;  // residual target is tol * (1 + |f|)
  int max_iter = 40;
};

/// Residual, Jacobian and frequency derivative of the harmonic balance
/// equations of one system. Unknowns are stacked component-major:
/// X[c * n + i] is Fourier component c of DOF i. The nonlinear force is
/// evaluated on a power-of-two time grid with at least 4 nh + 1 samples,
/// which projects cubic terms onto the retained harmonics without aliasing.
class HarmonicBalance {
 public:
  HarmonicBalance(const SecondOrderSystem& sys, int nh);

  int dofs() const { return n_; }
  int harmonics() const { return nh_; }
  int components() const { return 2 * nh_ + 1; }
  int unknowns() const { return n_ * components(); }
  int time_samples() const { return nt_; }

  Vector pack(const PeriodicSolution& s) const;
  PeriodicSolution unpack(const Vector& X, double omega) const;
  /// Fourier load vector of eps * f * cos(omega t).
  Vector load(const Vector& force_amplitude) const;

  Vector residual(const Vector& X, double omega, const Vector& load) const;
  Matrix jacobian(const Vector& X, double omega) const;
  Vector omega_derivative(const Vector& X, double omega) const;

 private:
  Vector linear_part(const Vector& X, double omega) const;

  SecondOrderSystem sys_;
  int n_, nh_, nt_;
  Matrix synth_;    // nt x H
  Matrix project_;  // H x nt
};

PeriodicSolution solve_periodic_hb(const SecondOrderSystem& sys, const ForcingSpec& forcing,
                                   double omega, const HBOptions& opts = {},
                                   const std::optional<PeriodicSolution>& init = std::nullopt);

/// RMS over one period of M q'' + C q' + K q + S(q) - eps f cos(omega t).
double time_domain_residual(const SecondOrderSystem& sys, const ForcingSpec& forcing,
                            const PeriodicSolution& solution, int samples = 0);

enum class SweepKind { Frequency, Amplitude };

struct CurvePoint {
  double param = 0.0;      // omega for frequency sweeps, epsilon for amplitude sweeps
  double norm = 0.0;       // max-in-time Euclidean norm, physical coordinates
  double mass_norm = 0.0;  // physical mass norm over one period
  bool arclength = false;  // traced in arclength mode
  PeriodicSolution solution;  // in the coordinates of the solved model
};

struct Discontinuity {
  double param = 0.0;
  double norm_before = 0.0;
  double norm_after = 0.0;
};

struct ResponseCurve {
  SweepKind kind = SweepKind::Frequency;
  std::vector<CurvePoint> points;
  std::vector<Discontinuity> jumps;
  std::vector<double> turning_points;
  std::vector<std::string> diagnostics;
  bool complete = false;  // reached the requested end of the parameter range

  const CurvePoint* peak() const;
};

struct ContinuationOptions {
  HBOptions hb;
  double initial_step = 0.0;  // 0: 1/100 of the range
  double min_step = 0.0;      // 0: initial_step / 2^10
  double max_step = 0.0;      // 0: 4 * initial_step
  int max_points = 4000;
  /// Amplitude sweeps only: on a fold, jump to the next solution found by
  /// restarting Newton from the previous point (sequential continuation)
  /// before falling back to arclength tracing.
  bool allow_jumps = true;
};

ResponseCurve frequency_sweep(const SecondOrderSystem& sys, const ForcingSpec& forcing,
                              double omega_begin, double omega_end,
                              const ContinuationOptions& opts = {});
ResponseCurve frequency_sweep(const ReducedModel& rom, double omega_begin, double omega_end,
                              const ContinuationOptions& opts = {});

/// Sweeps epsilon from eps_begin to eps_end at fixed forcing frequency.
ResponseCurve amplitude_sweep(const SecondOrderSystem& sys, const ForcingSpec& forcing,
                              double eps_begin, double eps_end,
                              const ContinuationOptions& opts = {});
ResponseCurve amplitude_sweep(const ReducedModel& rom, double eps_begin, double eps_end,
                              const ContinuationOptions& opts = {});

/// |q_r - q|_M / |q|_M over one common period.
double relative_error(const PeriodicSolution& full, const PeriodicSolution& reduced_lifted,
                      const Matrix& M, int samples = 0);

}  // namespace ssmsel
