#pragma once

#include <array>

#include "geob/field.hpp"

namespace geob {

/// 2D incompressible Navier-Stokes in vorticity form on the horizontal box.
struct NSE2DState {
  HField omega;
  double t = 0.0;
};

/// Quasi-geostrophic state, stream/pressure function pi.
struct QGState {
  HField pi;
  double t = 0.0;
};

struct QGParams {
  double nu = 1.0;
  /// Sign in front of the Jacobian: dq/dt = -sign * (grad_perp pi . grad lap pi) + nu lap^2 pi
  /// with grad_perp f = (d2 f, -d1 f). -1 transports q with geostrophic_velocity(pi).
  int jacobian_sign = -1;
  bool nonlinear = true;
};

/// psi with Laplacian psi = omega and zero mean.
HField streamfunction(const HField& omega);
/// (u1, u2) = (-d2 psi, d1 psi).
std::array<HField, 2> nse2d_velocity(const HField& omega);
/// d1 u2 - d2 u1 of a horizontal velocity.
HField vorticity_2d(const HField& u1, const HField& u2);

/// Strang splitting with the exact viscous factor and RK4 on the advection.
class NSE2DStepper {
 public:
  /// nonlinear = false drops the advection (Stokes flow).
  NSE2DStepper(GridPtr grid, double dt, double nu, double cfl = 0.5, bool nonlinear = true);
  void advance(NSE2DState& s);
  long cfl_violations() const { return cfl_violations_; }

 private:
  HField advection(const HField& omega, double* max_speed) const;
  GridPtr grid_;
  double dt_, nu_, cfl_;
  bool nonlinear_;
  std::vector<double> half_decay_;
  long steps_ = 0;
  long cfl_violations_ = 0;
};

NSE2DState nse2d_step(const NSE2DState& s, double dt, double nu = 1.0);

/// q = Laplacian pi - pi and its per-mode inverse.
HField qg_potential_vorticity(const HField& pi);
HField qg_invert(const HField& q);

class QGStepper {
 public:
  QGStepper(GridPtr grid, double dt, const QGParams& params = {});
  void advance(QGState& s);

 private:
  HField rhs(const HField& q) const;
  GridPtr grid_;
  double dt_;
  QGParams params_;
  std::vector<double> half_decay_;
  long steps_ = 0;
};

QGState qg_step(const QGState& s, double dt, const QGParams& params = {});

/// u = (-d2 pi, d1 pi, 0), lifted to x3-independent fields of the grid.
VectorField geostrophic_velocity(const HField& pi);

double nse2d_energy(const HField& omega);
double nse2d_enstrophy(const HField& omega);

}  // namespace geob
