#include "geob/limit.hpp"

#include <cmath>

#include "geob/ac_solver.hpp"
#include "geob/operators.hpp"

namespace geob {

namespace {

void require_spectral(const HField& f, const char* op) {
  if (f.empty() || f.space() != Space::spectral)
    throw RepresentationError(std::string(op) + ": field must be in coefficient space");
}

double horizontal_k2(const Grid& g, int iy, int ix) { return g.wavenumber_sq(0, iy, ix); }

void check_finite(const HField& f, long step) {
  if (!all_finite(f)) throw NumericalAbort("non-finite value at step " + std::to_string(step), step);
}

HField product(const HField& a, const HField& b) {
  HField out(a.grid_ptr(), Space::physical);
  for (std::size_t i = 0; i < out.values().size(); ++i) out.values()[i] = a.values()[i].real() * b.values()[i].real();
  return out;
}

HField rk4(const HField& y0, double dt, const auto& f) {
  HField k1 = f(y0);
  HField k2 = f(y0 + (0.5 * dt) * k1);
  HField k3 = f(y0 + (0.5 * dt) * k2);
  HField k4 = f(y0 + dt * k3);
  HField out = y0;
  out.axpy(dt / 6.0, k1).axpy(dt / 3.0, k2).axpy(dt / 3.0, k3).axpy(dt / 6.0, k4);
  return out;
}

void scale_modes(HField& f, const std::vector<double>& factor) {
  for (std::size_t i = 0; i < factor.size(); ++i) f.values()[i] *= factor[i];
}

}  // namespace

HField streamfunction(const HField& omega) {
  require_spectral(omega, "streamfunction");
  const Grid& g = omega.grid();
  HField psi(omega.grid_ptr());
  for (int iy = 0; iy < g.N_h(); ++iy)
    for (int ix = 0; ix < g.N_h(); ++ix) {
      const double k2 = horizontal_k2(g, iy, ix);
      if (k2 > 0.0) psi(iy, ix) = -omega(iy, ix) / k2;
    }
  return psi;
}

std::array<HField, 2> nse2d_velocity(const HField& omega) {
  const HField psi = streamfunction(omega);
  return {-1.0 * diff(psi, Axis::x2), diff(psi, Axis::x1)};
}

HField vorticity_2d(const HField& u1, const HField& u2) { return diff(u2, Axis::x1) - diff(u1, Axis::x2); }

NSE2DStepper::NSE2DStepper(GridPtr grid, double dt, double nu, double cfl, bool nonlinear)
    : grid_(std::move(grid)), dt_(dt), nu_(nu), cfl_(cfl), nonlinear_(nonlinear), half_decay_(grid_->plane_size()) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(nu >= 0.0)) throw std::invalid_argument("nu must be non-negative");
  const int n = grid_->N_h();
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix)
      half_decay_[static_cast<std::size_t>(iy) * n + ix] = std::exp(-0.5 * dt * nu * horizontal_k2(*grid_, iy, ix));
}

HField NSE2DStepper::advection(const HField& omega, double* max_speed) const {
  auto u = nse2d_velocity(omega);
  HField u1 = to_physical(u[0]), u2 = to_physical(u[1]);
  HField w1 = to_physical(diff(omega, Axis::x1)), w2 = to_physical(diff(omega, Axis::x2));
  HField out = product(u1, w1) + product(u2, w2);
  if (max_speed) {
    double m = 0.0;
    for (std::size_t i = 0; i < u1.values().size(); ++i) m = std::max(m, std::hypot(u1.values()[i].real(), u2.values()[i].real()));
    *max_speed = m;
  }
  out *= -1.0;
  out.transform_in_place();
  dealias_in_place(out);
  return out;
}

void NSE2DStepper::advance(NSE2DState& s) {
  require_spectral(s.omega, "nse2d_step");
  const long index = ++steps_;
  scale_modes(s.omega, half_decay_);
  double speed = 0.0;
  bool first = true;
  if (nonlinear_)
    s.omega = rk4(s.omega, dt_, [&](const HField& w) {
    HField r = advection(w, first ? &speed : nullptr);
    first = false;
    return r;
  });
  if (speed > 0.0 && dt_ > cfl_ * grid_->dx() / speed) ++cfl_violations_;
  scale_modes(s.omega, half_decay_);
  s.t += dt_;
  check_finite(s.omega, index);
}

NSE2DState nse2d_step(const NSE2DState& s, double dt, double nu) {
  NSE2DState out = s;
  NSE2DStepper(s.omega.grid_ptr(), dt, nu).advance(out);
  return out;
}

HField qg_potential_vorticity(const HField& pi) {
  require_spectral(pi, "qg_potential_vorticity");
  return laplacian(pi) - pi;
}

HField qg_invert(const HField& q) {
  require_spectral(q, "qg_invert");
  const Grid& g = q.grid();
  HField pi(q.grid_ptr());
  for (int iy = 0; iy < g.N_h(); ++iy)
    for (int ix = 0; ix < g.N_h(); ++ix) pi(iy, ix) = q(iy, ix) / (-horizontal_k2(g, iy, ix) - 1.0);
  return pi;
}

QGStepper::QGStepper(GridPtr grid, double dt, const QGParams& params)
    : grid_(std::move(grid)), dt_(dt), params_(params), half_decay_(grid_->plane_size()) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (params.jacobian_sign != 1 && params.jacobian_sign != -1)
    throw std::invalid_argument("qg_jacobian_sign must be +1 or -1");
  if (!(params.nu >= 0.0)) throw std::invalid_argument("nu must be non-negative");
  const int n = grid_->N_h();
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const double k2 = horizontal_k2(*grid_, iy, ix);
      half_decay_[static_cast<std::size_t>(iy) * n + ix] = std::exp(-0.5 * dt * params.nu * k2 * k2 / (1.0 + k2));
    }
}

HField QGStepper::rhs(const HField& q) const {
  const HField pi = qg_invert(q);
  const HField lap = laplacian(pi);
  HField p1 = to_physical(diff(pi, Axis::x1)), p2 = to_physical(diff(pi, Axis::x2));
  HField l1 = to_physical(diff(lap, Axis::x1)), l2 = to_physical(diff(lap, Axis::x2));
  // grad_perp pi . grad lap pi with grad_perp = (d2, -d1).
  HField jac = product(p2, l1) - product(p1, l2);
  jac *= -static_cast<double>(params_.jacobian_sign);
  jac.transform_in_place();
  dealias_in_place(jac);
  return jac;
}

void QGStepper::advance(QGState& s) {
  require_spectral(s.pi, "qg_step");
  const long index = ++steps_;
  HField q = qg_potential_vorticity(s.pi);
  scale_modes(q, half_decay_);
  if (params_.nonlinear) q = rk4(q, dt_, [&](const HField& x) { return rhs(x); });
  scale_modes(q, half_decay_);
  s.pi = qg_invert(q);
  s.t += dt_;
  check_finite(s.pi, index);
}

QGState qg_step(const QGState& s, double dt, const QGParams& params) {
  QGState out = s;
  QGStepper(s.pi.grid_ptr(), dt, params).advance(out);
  return out;
}

VectorField geostrophic_velocity(const HField& pi) {
  require_spectral(pi, "geostrophic_velocity");
  VectorField u = make_velocity(pi.grid_ptr());
  const HField u1 = -1.0 * diff(pi, Axis::x2);
  const HField u2 = diff(pi, Axis::x1);
  u[0] = lift(u1);
  u[1] = lift(u2);
  return u;
}

double nse2d_energy(const HField& omega) {
  auto u = nse2d_velocity(omega);
  return 0.5 * (norm_sq(u[0]) + norm_sq(u[1]));
}

double nse2d_enstrophy(const HField& omega) { return 0.5 * norm_sq(omega); }

}  // namespace geob
