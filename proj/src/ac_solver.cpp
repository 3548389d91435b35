#include "geob/ac_solver.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "geob/operators.hpp"
#include "text.hpp"

namespace geob {

namespace {
constexpr cplx I{0.0, 1.0};
}

void ACParams::validate() const {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("eps must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be positive");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw std::invalid_argument("mu must be non-negative");
  if (!(cfl > 0.0)) throw std::invalid_argument("cfl must be positive");
}

std::vector<std::string> ACParams::warnings() const {
  std::vector<std::string> w;
  if (beta != 0.5 && beta < 1.0)
    w.push_back("beta = " + detail::num(beta) + " lies outside {1/2} and [1, inf)");
  return w;
}

ACState make_state(const GridPtr& grid) {
  return ACState{make_velocity(grid), ScalarField(grid, Parity::even), 0.0};
}

Mat4 mode_matrix(const ACParams& params, double xi1, double xi2, double kappa) {
  const double s = std::pow(params.eps, -2.0 * params.beta);
  const double r = 1.0 / params.eps;
  const double visc = -params.mu * (xi1 * xi1 + xi2 * xi2 + kappa * kappa);
  Mat4 m = Mat4::Zero();
  m(0, 0) = m(1, 1) = m(2, 2) = visc;
  // Coriolis: -(g x u) = (u2, -u1, 0).
  m(0, 1) = r;
  m(1, 0) = -r;
  // Pressure gradient; the vertical derivative maps cosine to sine with -kappa.
  m(0, 3) = -I * xi1 * s;
  m(1, 3) = -I * xi2 * s;
  m(2, 3) = kappa * s;
  // Divergence; the vertical derivative maps sine to cosine with +kappa.
  m(3, 0) = -I * xi1 * s;
  m(3, 1) = -I * xi2 * s;
  m(3, 2) = -kappa * s;
  return m;
}

ModeEigen mode_eigen(const ACParams& params, double xi1, double xi2, double kappa) {
  ModeEigen out;
  out.matrix = mode_matrix(params, xi1, xi2, kappa);
  Eigen::ComplexEigenSolver<Mat4> es(out.matrix);
  std::array<int, 4> order{0, 1, 2, 3};
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return es.eigenvalues()(a).imag() < es.eigenvalues()(b).imag();
  });
  for (int i = 0; i < 4; ++i) {
    out.eigenvalues(i) = es.eigenvalues()(order[i]);
    out.eigenvectors.col(i) = es.eigenvectors().col(order[i]);
  }
  return out;
}

LinearPropagator::LinearPropagator(GridPtr grid, const ACParams& params, double h)
    : grid_(std::move(grid)), h_(h), exp_(grid_->size()) {
  params.validate();
  const Grid& g = *grid_;
  const int n = g.N_h();
  for (int kz = 0; kz < g.N_v(); ++kz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const Mat4 m = mode_matrix(params, g.wavenumber(ix), g.wavenumber(iy), g.vertical_wavenumber(kz));
        Mat4& e = exp_[g.index(kz, iy, ix)];
        if (params.mu == 0.0) {
          // i M is Hermitian; the spectral form keeps exp(h M) unitary.
          Eigen::SelfAdjointEigenSolver<Mat4> es(I * m);
          const Eigen::Vector4cd phase =
              (-I * h * es.eigenvalues().cast<cplx>()).array().exp().matrix();
          e = es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
        } else {
          e = (h * m).exp();
        }
      }
}

void LinearPropagator::apply(ACState& s) const {
  require_spectral(s.p, "linear_phase");
  for (int c = 0; c < 3; ++c) require_spectral(s.u[c], "linear_phase");
  if (s.p.grid_ptr() != grid_) throw RepresentationError("linear_phase: grid mismatch");
  auto u1 = s.u[0].values(), u2 = s.u[1].values(), u3 = s.u[2].values(), p = s.p.values();
  for (std::size_t i = 0; i < exp_.size(); ++i) {
    const Vec4 x(u1[i], u2[i], u3[i], p[i]);
    const Vec4 y = exp_[i] * x;
    u1[i] = y(0);
    u2[i] = y(1);
    u3[i] = y(2);
    p[i] = y(3);
  }
}

ACState linear_phase(const ACState& s, const ACParams& params, double dt) {
  ACState out = s;
  LinearPropagator(s.p.grid_ptr(), params, dt).apply(out);
  out.t += dt;
  return out;
}

namespace {

// Two real fields of equal parity share one complex transform: a + i b.
void to_physical_pair(const ScalarField& a, const ScalarField& b, ScalarField& pa, ScalarField& pb) {
  ScalarField buf = a;
  require_same_layout(a, b, "nonlinear_rhs");
  auto v = buf.values();
  const auto bv = b.values();
  for (std::size_t q = 0; q < v.size(); ++q) v[q] += I * bv[q];
  buf.transform_in_place();
  pa = ScalarField(a.grid_ptr(), a.parity(), Space::physical);
  pb = ScalarField(a.grid_ptr(), a.parity(), Space::physical);
  for (std::size_t q = 0; q < v.size(); ++q) {
    pa.values()[q] = v[q].real();
    pb.values()[q] = v[q].imag();
  }
}

// Inverse of to_physical_pair, splitting by conjugate symmetry.
void to_spectral_pair(const ScalarField& a, const ScalarField& b, ScalarField& sa, ScalarField& sb) {
  const Grid& g = a.grid();
  ScalarField buf(a.grid_ptr(), a.parity(), Space::physical);
  for (std::size_t q = 0; q < buf.values().size(); ++q)
    buf.values()[q] = cplx(a.values()[q].real(), b.values()[q].real());
  buf.transform_in_place();
  sa = ScalarField(a.grid_ptr(), a.parity());
  sb = ScalarField(a.grid_ptr(), a.parity());
  const int n = g.N_h();
  for (int kz = 0; kz < g.N_v(); ++kz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const cplx f = buf(kz, iy, ix);
        const cplx fm = std::conj(buf(kz, (n - iy) % n, (n - ix) % n));
        sa(kz, iy, ix) = 0.5 * (f + fm);
        sb(kz, iy, ix) = -0.5 * I * (f - fm);
      }
}

}  // namespace

VectorField nonlinear_rhs(const VectorField& u, double& max_speed) {
  for (int c = 0; c < 3; ++c) require_spectral(u[c], "nonlinear_rhs");
  const Grid& g = u.grid();
  std::array<ScalarField, 3> up;
  std::array<std::array<ScalarField, 3>, 3> du;  // du[i][j] = d_i u_j
  const auto d = [&](int i, int j) { return diff(u[j], static_cast<Axis>(i)); };
  // even: u1, u2, d1 u1, d1 u2, d2 u1, d2 u2, d3 u3; odd: u3, d1 u3, d2 u3, d3 u1, d3 u2
  to_physical_pair(u[0], u[1], up[0], up[1]);
  to_physical_pair(d(0, 0), d(0, 1), du[0][0], du[0][1]);
  to_physical_pair(d(1, 0), d(1, 1), du[1][0], du[1][1]);
  du[2][2] = to_physical(d(2, 2));
  to_physical_pair(u[2], d(0, 2), up[2], du[0][2]);
  to_physical_pair(d(1, 2), d(2, 0), du[1][2], du[2][0]);
  du[2][1] = to_physical(d(2, 1));

  VectorField n{{ScalarField(u.grid_ptr(), Parity::even, Space::physical),
                 ScalarField(u.grid_ptr(), Parity::even, Space::physical),
                 ScalarField(u.grid_ptr(), Parity::odd, Space::physical)}};
  max_speed = 0.0;
  const std::size_t size = g.size();
  for (std::size_t q = 0; q < size; ++q) {
    const double a = up[0].values()[q].real(), b = up[1].values()[q].real(), c = up[2].values()[q].real();
    max_speed = std::max(max_speed, std::sqrt(a * a + b * b + c * c));
    const double dv = du[0][0].values()[q].real() + du[1][1].values()[q].real() + du[2][2].values()[q].real();
    for (int j = 0; j < 3; ++j) {
      const double adv = a * du[0][j].values()[q].real() + b * du[1][j].values()[q].real() +
                         c * du[2][j].values()[q].real();
      n[j].values()[q] = -adv - 0.5 * dv * up[j].values()[q].real();
    }
  }
  VectorField out;
  to_spectral_pair(n[0], n[1], out[0], out[1]);
  out[2] = to_spectral(n[2]);
  for (int j = 0; j < 3; ++j) dealias_in_place(out[j]);
  return out;
}

VectorField nonlinear_rhs(const VectorField& u) {
  double unused = 0.0;
  return nonlinear_rhs(u, unused);
}

double energy(const ACState& s) { return 0.5 * (norm_sq(s.u) + norm_sq(s.p)); }

double gradient_norm_sq(const VectorField& u) {
  double sum = 0.0;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) sum += norm_sq(diff(u[j], static_cast<Axis>(i)));
  return sum;
}

Stepper::Stepper(GridPtr grid, const ACParams& params, double dt)
    : grid_(std::move(grid)), params_(params), dt_(dt), half_(grid_, params, 0.5 * dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
}

void Stepper::advance(ACState& s) {
  const long index = steps_ + 1;
  double loss = 0.0;
  double e0 = energy(s);
  half_.apply(s);
  double e1 = energy(s);
  loss += e0 - e1;

  if (params_.nonlinear) {
    double speed = 0.0;
    const VectorField& u0 = s.u;
    VectorField k1 = nonlinear_rhs(u0, speed);
    if (speed > 0.0 && dt_ > params_.cfl * grid_->dx() / speed) {
      ++cfl_violations_;
      if (params_.strict_cfl)
        throw NumericalAbort("CFL violation at step " + std::to_string(index) + ": dt = " + detail::num(dt_) +
                                 ", limit " + detail::num(params_.cfl * grid_->dx() / speed),
                             index);
    }
    VectorField k2 = nonlinear_rhs(u0 + (0.5 * dt_) * k1);
    VectorField k3 = nonlinear_rhs(u0 + (0.5 * dt_) * k2);
    VectorField k4 = nonlinear_rhs(u0 + dt_ * k3);
    k1.axpy(2.0, k2).axpy(2.0, k3) += k4;
    s.u.axpy(dt_ / 6.0, k1);
  }

  e0 = energy(s);
  half_.apply(s);
  e1 = energy(s);
  loss += e0 - e1;
  last_loss_ = params_.mu > 0.0 ? std::max(loss, 0.0) : 0.0;
  s.t += dt_;
  ++steps_;

  bool finite = all_finite(s.p);
  for (int c = 0; c < 3; ++c) finite = finite && all_finite(s.u[c]);
  if (!finite) throw NumericalAbort("non-finite value at step " + std::to_string(index), index);
}

ACState step(const ACState& s, const ACParams& params, double dt) {
  ACState out = s;
  Stepper(s.p.grid_ptr(), params, dt).advance(out);
  return out;
}

Trajectory run(const ACParams& params, const ACState& ic, double T, double dt, const RunOptions& options) {
  params.validate();
  if (!(T > 0.0)) throw std::invalid_argument("run: T must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("run: dt must be positive");
  if (options.snap_every < 1) throw std::invalid_argument("run: snap_every must be at least 1");
  const long n = std::max(1L, static_cast<long>(std::ceil(T / dt - 1e-9)));
  Trajectory traj;
  traj.params = params;
  traj.dt = T / n;
  traj.warnings = params.warnings();

  Stepper stepper(ic.p.grid_ptr(), params, traj.dt);
  ACState s = ic;
  std::size_t index = 0;
  auto record = [&](const ACState& st) {
    traj.times.push_back(st.t);
    traj.energies.push_back(energy(st));
    traj.dissipation.push_back(traj.dissipation_integral);
    if (options.observer) options.observer(st, index);
    if (options.keep_snapshots) traj.snapshots.push_back(st);
    ++index;
  };
  record(s);
  for (long k = 1; k <= n; ++k) {
    stepper.advance(s);
    traj.dissipation_integral += stepper.last_viscous_loss();
    if (k % options.snap_every == 0 || k == n) record(s);
  }
  traj.steps = n;
  traj.cfl_violations = stepper.cfl_violations();
  if (traj.cfl_violations > 0)
    traj.warnings.push_back("CFL condition violated in " + std::to_string(traj.cfl_violations) + " steps");
  return traj;
}

Trajectory run(const ACParams& params, const ACState& ic, double T, double dt, long snap_every) {
  RunOptions o;
  o.snap_every = snap_every;
  return run(params, ic, T, dt, o);
}

EnergyReport check_energy(const Trajectory& traj, double tol) {
  EnergyReport r;
  r.tol = tol;
  if (traj.energies.empty()) return r;
  r.e0 = traj.energies.front();
  for (std::size_t i = 0; i < traj.energies.size(); ++i) {
    const double total = traj.energies[i] + traj.dissipation[i];
    const double excess = r.e0 > 0.0 ? total / r.e0 - 1.0 : total;
    r.max_excess = std::max(r.max_excess, excess);
    if (total > r.e0 * (1.0 + tol) + (r.e0 > 0.0 ? 0.0 : tol)) {
      r.pass = false;
      r.flagged.push_back(i);
    }
  }
  return r;
}

std::string run_metadata(const ACParams& params, const Grid& grid, double dt, unsigned long seed) {
  std::ostringstream os;
  os << "eps=" << detail::num(params.eps) << "\n"
     << "beta=" << detail::num(params.beta) << "\n"
     << "mu=" << detail::num(params.mu) << "\n"
     << "nonlinear=" << (params.nonlinear ? 1 : 0) << "\n"
     << "cfl=" << detail::num(params.cfl) << "\n"
     << "dt=" << detail::num(dt) << "\n"
     << "L_h=" << detail::num(grid.L_h()) << "\n"
     << "N_h=" << grid.N_h() << "\n"
     << "N_v=" << grid.N_v() << "\n"
     << "dealias_fraction=" << detail::num(grid.dealias_fraction()) << "\n"
     << "seed=" << seed << "\n";
  return os.str();
}

}  // namespace geob
