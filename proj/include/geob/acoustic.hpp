#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "geob/ac_solver.hpp"

namespace geob {

/// Per-mode acoustic operator acting on (p, u1, u2, u3) coefficients.
/// kappa is the vertical wavenumber (2 pi k on the grid).
Mat4 acoustic_block(double xi1, double xi2, double kappa);

/// The four roots of lambda^4 + (1 + |xi|^2 + kappa^2) lambda^2 + kappa^2,
/// all on the imaginary axis, sorted by imaginary part.
std::array<cplx, 4> eigenvalues(double xi1, double xi2, double kappa);

/// Eigenstructure of one mode. Columns of eigenvectors are orthonormal and
/// match the eigenvalues. The kernel vector (u3 = 0) exists iff kappa = 0.
struct ModeBlock {
  double xi1 = 0.0, xi2 = 0.0, kappa = 0.0;
  std::array<cplx, 4> eigenvalues{};
  Mat4 eigenvectors = Mat4::Zero();
  std::optional<Vec4> kernel_vector;
};

ModeBlock mode_block(double xi1, double xi2, double kappa);

/// W(p, u) = (div u, g x u + grad p). The result stores div u in p.
ACState apply_W(const ACState& x);

/// Orthogonal projection onto Ker W (vertical mode 0 only).
ACState kernel_project(const ACState& x);
ACState complement_project(const ACState& x);

/// True iff |xi_h| + |kappa| <= M for the mode.
bool in_truncation(const Grid& g, int kz, int iy, int ix, double M);
ScalarField truncate(const ScalarField& f, double M);
ACState truncate(const ACState& x, double M);

/// exp(-s W) applied per mode through the closed-form eigenbasis.
ACState propagate(const ACState& x, double s);

/// exp(i sqrt(-Laplacian) t): multiplies each coefficient by exp(i |k| t).
ScalarField half_wave(const ScalarField& v, double t);
HField half_wave(const HField& v, double t);

/// Physical-space horizontal weights, centered at (L_h/2, L_h/2).
HField box_indicator(const GridPtr& g, double side);
/// Smooth radial bump exp(1 - 1/(1 - (r/R)^2)), 1 at the center, 0 for r >= R.
HField bump(const GridPtr& g, double radius);
HField constant_weight(const GridPtr& g, double value = 1.0);

/// int w |f|^2 over the domain; f in either representation, w physical.
double weighted_norm_sq(const ScalarField& f, const HField& w);
double weighted_norm_sq(const HField& f, const HField& w);

/// Raised when a local functional would see periodic images re-entering K.
class RecurrenceViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Time before a unit-speed wave leaving a centered box of side K_side
/// re-enters it through a periodic image, in units of t / eps^m.
double recurrence_time(const Grid& g, double K_side, double eps, double m);

/// int_0^T int_K |exp(i sqrt(-Laplacian) t / eps^m) v|^2 dx dt by the
/// trapezoidal rule on `samples` + 1 times (0 picks a step of one grid
/// spacing in rescaled time). K is the centered box of side K_side; a box
/// covering the whole domain skips the recurrence guard.
double local_decay_functional(const HField& v, double m, double eps, double T, double K_side, int samples = 0);
double local_decay_functional(const ScalarField& v, double m, double eps, double T, double K_side,
                              int samples = 0);

/// (1/T) int_0^T <chi w(t), w(t)> dt with w = P_M Q_perp of the given
/// states, trapezoidal in the given times (T their span).
double rage_functional(const std::vector<ACState>& states, const std::vector<double>& times, const HField& chi,
                       double M);
/// Same for the linear evolution w(t) = exp(-t W / eps) P_M Q_perp X.
double rage_functional(const ACState& X, const HField& chi, double eps, double T, double M, int samples = 200);

/// CSV rows `kx ky kz re_l1 im_l1 ... re_l4 im_l4 has_kernel` for all modes
/// of the grid with |xi_h| + |kappa| <= M (signed mode numbers).
void write_mode_table(std::ostream& os, const Grid& g, double M);

}  // namespace geob
