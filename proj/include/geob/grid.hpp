#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>

namespace geob {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Vertical symmetry of a field about x3 = 0. Even fields are cosine
/// series in x3, odd fields are sine series.
enum class Parity { even, odd };

inline Parity flip(Parity p) { return p == Parity::even ? Parity::odd : Parity::even; }
inline const char* to_string(Parity p) { return p == Parity::even ? "even" : "odd"; }
Parity parse_parity(const std::string& s);

/// Thrown when an operation receives a field in the wrong representation
/// or on an incompatible grid.
class RepresentationError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Periodic box of side L_h in (x1, x2) times the unit torus in x3, with the
/// vertical structure carried by parity-constrained cosine/sine series.
///
/// Physical samples sit on x_i = i L_h / N_h horizontally and on the
/// midpoints x3_j = (j + 1/2) / (2 N_v), j < N_v, of the half period.
/// Coefficients are stored as [kz][iy][ix] with FFT ordering in ix, iy and
/// kz the vertical mode index (for odd fields kz = 0 is identically zero).
///
/// Grids own their FFT plans and are shared read-only between fields.
class Grid {
 public:
  Grid(double L_h, int N_h, int N_v, double dealias_fraction);
  ~Grid();
  Grid(const Grid&) = delete;
  Grid& operator=(const Grid&) = delete;

  double L_h() const { return L_h_; }
  int N_h() const { return N_h_; }
  int N_v() const { return N_v_; }
  double dealias_fraction() const { return dealias_fraction_; }

  std::size_t plane_size() const { return static_cast<std::size_t>(N_h_) * N_h_; }
  std::size_t size() const { return plane_size() * N_v_; }
  std::size_t index(int kz, int iy, int ix) const {
    return (static_cast<std::size_t>(kz) * N_h_ + iy) * N_h_ + ix;
  }

  /// Signed mode number of FFT index i, in [-N_h/2, N_h/2).
  int mode_number(int i) const { return i < N_h_ / 2 ? i : i - N_h_; }
  /// FFT index of signed mode number m.
  int fft_index(int m) const { return m >= 0 ? m : m + N_h_; }
  /// Horizontal wavenumber used by derivatives. The Nyquist mode maps to 0.
  double wavenumber(int i) const;
  /// Vertical wavenumber 2 pi kz.
  double vertical_wavenumber(int kz) const { return kTwoPi * kz; }
  /// |xi_h|^2 + kappa^2 with the derivative wavenumbers.
  double wavenumber_sq(int kz, int iy, int ix) const;

  /// Largest retained |mode number| horizontally and vertically.
  int horizontal_cutoff() const { return cutoff_h_; }
  int vertical_cutoff() const { return cutoff_v_; }
  bool is_retained(int kz, int iy, int ix) const;

  double dx() const { return L_h_ / N_h_; }
  double x(int i) const { return i * dx(); }
  double x3(int j) const { return (j + 0.5) / (2.0 * N_v_); }
  /// Volume of the box times the unit torus.
  double volume() const { return L_h_ * L_h_; }

  /// In-place transforms of a full 3D buffer (size()).
  void to_spectral(std::span<cplx> data, Parity parity) const;
  void to_physical(std::span<cplx> data, Parity parity) const;
  /// In-place transforms of one horizontal plane (plane_size()).
  void to_spectral_h(std::span<cplx> data) const;
  void to_physical_h(std::span<cplx> data) const;

 private:
  double L_h_;
  int N_h_;
  int N_v_;
  double dealias_fraction_;
  int cutoff_h_;
  int cutoff_v_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Validates the parameters and builds a grid with its transform plans.
/// Throws std::invalid_argument for odd or too small N_h, N_v < 4, L_h <= 0
/// or a dealias fraction outside (0, 1].
GridPtr make_grid(double L_h, int N_h, int N_v, double dealias_fraction = 2.0 / 3.0);

}  // namespace geob
