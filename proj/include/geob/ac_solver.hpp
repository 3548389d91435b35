#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "geob/field.hpp"

namespace geob {

using Mat4 = Eigen::Matrix4cd;
using Vec4 = Eigen::Vector4cd;

/// Parameters of the rotating artificial-compressibility system. The
/// rotation axis is fixed to g = (0, 0, 1).
struct ACParams {
  double eps = 0.1;
  double beta = 1.0;
  double mu = 1.0;
  bool nonlinear = true;
  double cfl = 0.5;
  bool strict_cfl = false;

  /// Throws std::invalid_argument for eps <= 0, mu < 0, beta <= 0.
  void validate() const;
  /// Non-fatal remarks, e.g. beta outside {1/2} and [1, inf).
  std::vector<std::string> warnings() const;
};

struct ACState {
  VectorField u;  // parities (even, even, odd)
  ScalarField p;  // even
  double t = 0.0;
};

/// Zero state in coefficient space.
ACState make_state(const GridPtr& grid);

/// Solver aborted at the given step (NaN or strict CFL failure).
class NumericalAbort : public std::runtime_error {
 public:
  NumericalAbort(const std::string& what, long step) : std::runtime_error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

/// Per-mode linear operator acting on (u1, u2, u3, p) coefficients of the
/// cosine/sine basis: d/dt x = M x. xi1, xi2 are horizontal wavenumbers,
/// kappa the vertical wavenumber 2 pi k.
Mat4 mode_matrix(const ACParams& params, double xi1, double xi2, double kappa);

struct ModeEigen {
  Mat4 matrix;
  Vec4 eigenvalues;  // ordered by imaginary part
  Mat4 eigenvectors;
};

/// Dense eigendecomposition of mode_matrix.
ModeEigen mode_eigen(const ACParams& params, double xi1, double xi2, double kappa);

/// exp(h M) for every grid mode, computed once and applied many times.
class LinearPropagator {
 public:
  LinearPropagator(GridPtr grid, const ACParams& params, double h);
  double h() const { return h_; }
  void apply(ACState& s) const;

 private:
  GridPtr grid_;
  double h_;
  std::vector<Mat4> exp_;
};

/// Exact per-mode linear evolution over dt.
ACState linear_phase(const ACState& s, const ACParams& params, double dt);

/// N(u) = -(u . grad) u - 1/2 (div u) u, products in physical space,
/// result dealiased. u must be real (conjugate-symmetric coefficients).
VectorField nonlinear_rhs(const VectorField& u);
/// Same, also reporting max |u| over the physical grid.
VectorField nonlinear_rhs(const VectorField& u, double& max_speed);

/// 1/2 (|u|^2 + |p|^2) integrated over the domain.
double energy(const ACState& s);
/// ||grad u||^2 summed over the components.
double gradient_norm_sq(const VectorField& u);

/// Strang splitting: half linear step, RK4 on the nonlinearity, half linear step.
class Stepper {
 public:
  Stepper(GridPtr grid, const ACParams& params, double dt);

  const ACParams& params() const { return params_; }
  double dt() const { return dt_; }
  /// Advances one step. Throws NumericalAbort on NaN or strict CFL failure.
  void advance(ACState& s);
  /// Energy removed by viscosity during the last step (mu int ||grad u||^2).
  double last_viscous_loss() const { return last_loss_; }
  long steps() const { return steps_; }
  long cfl_violations() const { return cfl_violations_; }

 private:
  GridPtr grid_;
  ACParams params_;
  double dt_;
  LinearPropagator half_;
  double last_loss_ = 0.0;
  long steps_ = 0;
  long cfl_violations_ = 0;
};

/// One step from a fresh stepper. Prefer Stepper in loops.
ACState step(const ACState& s, const ACParams& params, double dt);

struct Trajectory {
  ACParams params;
  double dt = 0.0;
  std::vector<ACState> snapshots;
  std::vector<double> times;
  std::vector<double> energies;
  /// Running viscous dissipation mu int_0^t ||grad u||^2 at each snapshot.
  std::vector<double> dissipation;
  double dissipation_integral = 0.0;
  long steps = 0;
  long cfl_violations = 0;
  std::vector<std::string> warnings;
};

/// Called with each snapshot and its index, including t = 0.
using SnapshotObserver = std::function<void(const ACState&, std::size_t)>;

struct RunOptions {
  long snap_every = 1;
  bool keep_snapshots = true;
  SnapshotObserver observer;
};

/// Integrates from ic to T with ceil(T / dt) equal steps (dt shrunk to fit).
/// Throws NumericalAbort with the offending step index.
Trajectory run(const ACParams& params, const ACState& ic, double T, double dt,
               const RunOptions& options = {});
Trajectory run(const ACParams& params, const ACState& ic, double T, double dt, long snap_every);

struct EnergyReport {
  bool pass = true;
  double tol = 1e-8;
  double e0 = 0.0;
  /// max over snapshots of (E(t) + D(t)) / E(0) - 1
  double max_excess = 0.0;
  std::vector<std::size_t> flagged;
};

/// Flags snapshots with E(t) + D(t) > E(0) (1 + tol).
EnergyReport check_energy(const Trajectory& traj, double tol = 1e-8);

/// Flat key=value block describing a run.
std::string run_metadata(const ACParams& params, const Grid& grid, double dt, unsigned long seed);

}  // namespace geob
