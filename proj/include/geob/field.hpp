#pragma once

#include <array>
#include <span>
#include <vector>

#include "geob/grid.hpp"

namespace geob {

enum class Space { physical, spectral };

/// A scalar field on the slab: either physical samples or coefficients,
/// tagged with its vertical parity. Physical values are stored as complex
/// numbers; real fields carry a zero imaginary part.
class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(GridPtr grid, Parity parity, Space space = Space::spectral);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  Parity parity() const { return parity_; }
  Space space() const { return space_; }
  bool empty() const { return !grid_; }

  std::span<cplx> values() { return data_; }
  std::span<const cplx> values() const { return data_; }
  cplx& operator()(int kz, int iy, int ix) { return data_[grid_->index(kz, iy, ix)]; }
  const cplx& operator()(int kz, int iy, int ix) const { return data_[grid_->index(kz, iy, ix)]; }

  ScalarField& operator+=(const ScalarField& other);
  ScalarField& operator-=(const ScalarField& other);
  ScalarField& operator*=(double s);
  ScalarField& operator*=(cplx s);
  /// this += s * other
  ScalarField& axpy(double s, const ScalarField& other);
  void set_zero();

  /// Flips the representation in place.
  void transform_in_place();

 private:
  GridPtr grid_;
  Parity parity_ = Parity::even;
  Space space_ = Space::spectral;
  std::vector<cplx> data_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);

/// Forward or inverse transform, whichever flips the representation.
ScalarField transform(const ScalarField& f);
ScalarField to_spectral(const ScalarField& f);
ScalarField to_physical(const ScalarField& f);

void require_spectral(const ScalarField& f, const char* op);
void require_same_layout(const ScalarField& a, const ScalarField& b, const char* op);

/// Three components with per-component parity. Velocities use (even, even, odd).
struct VectorField {
  std::array<ScalarField, 3> comp;

  ScalarField& operator[](int i) { return comp[i]; }
  const ScalarField& operator[](int i) const { return comp[i]; }
  const Grid& grid() const { return comp[0].grid(); }
  const GridPtr& grid_ptr() const { return comp[0].grid_ptr(); }
  Space space() const { return comp[0].space(); }

  VectorField& operator+=(const VectorField& o);
  VectorField& operator-=(const VectorField& o);
  VectorField& operator*=(double s);
  VectorField& axpy(double s, const VectorField& o);
};

VectorField operator+(VectorField a, const VectorField& b);
VectorField operator-(VectorField a, const VectorField& b);
VectorField operator*(double s, VectorField a);

/// Zero vector field with velocity parities (even, even, odd).
VectorField make_velocity(GridPtr grid, Space space = Space::spectral);
VectorField transform(const VectorField& u);
VectorField to_spectral(const VectorField& u);
VectorField to_physical(const VectorField& u);

/// Horizontal (x3-independent) field on the horizontal part of a grid.
class HField {
 public:
  HField() = default;
  HField(GridPtr grid, Space space = Space::spectral);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  Space space() const { return space_; }
  bool empty() const { return !grid_; }

  std::span<cplx> values() { return data_; }
  std::span<const cplx> values() const { return data_; }
  cplx& operator()(int iy, int ix) { return data_[static_cast<std::size_t>(iy) * grid_->N_h() + ix]; }
  const cplx& operator()(int iy, int ix) const {
    return data_[static_cast<std::size_t>(iy) * grid_->N_h() + ix];
  }

  HField& operator+=(const HField& o);
  HField& operator-=(const HField& o);
  HField& operator*=(double s);
  HField& axpy(double s, const HField& o);
  void set_zero();
  void transform_in_place();

 private:
  GridPtr grid_;
  Space space_ = Space::spectral;
  std::vector<cplx> data_;
};

HField operator+(HField a, const HField& b);
HField operator-(HField a, const HField& b);
HField operator*(double s, HField a);
HField transform(const HField& f);
HField to_spectral(const HField& f);
HField to_physical(const HField& f);

/// Weight of vertical mode kz in the L2 pairing: 1 for kz = 0, 1/2 otherwise.
inline double vertical_weight(int kz) { return kz == 0 ? 1.0 : 0.5; }

/// L2 norms and pairings over the box times the unit torus. Spectral inputs
/// use Parseval; physical inputs use the (exact) grid quadrature.
double norm_sq(const ScalarField& f);
double norm(const ScalarField& f);
cplx inner(const ScalarField& f, const ScalarField& g);
double norm_sq(const VectorField& u);
double norm(const VectorField& u);
cplx inner(const VectorField& u, const VectorField& v);
/// L2 norms over the horizontal box.
double norm_sq(const HField& f);
double norm(const HField& f);
cplx inner(const HField& f, const HField& g);

/// Largest |value| over the stored entries.
double max_abs(const ScalarField& f);
double max_abs(const HField& f);
bool all_finite(const ScalarField& f);
bool all_finite(const HField& f);

/// Largest |c(m) - conj(c(-m))| over all modes of a spectral field.
double conjugate_symmetry_defect(const ScalarField& f);

}  // namespace geob
