#include "geob/field.hpp"

#include <cmath>

namespace geob {

ScalarField::ScalarField(GridPtr grid, Parity parity, Space space)
    : grid_(std::move(grid)), parity_(parity), space_(space), data_(grid_->size()) {}

void require_spectral(const ScalarField& f, const char* op) {
  if (f.empty()) throw RepresentationError(std::string(op) + ": empty field");
  if (f.space() != Space::spectral)
    throw RepresentationError(std::string(op) + ": field must be in coefficient space");
}

void require_same_layout(const ScalarField& a, const ScalarField& b, const char* op) {
  if (a.grid_ptr() != b.grid_ptr()) throw RepresentationError(std::string(op) + ": grid mismatch");
  if (a.space() != b.space())
    throw RepresentationError(std::string(op) + ": representation mismatch");
  if (a.parity() != b.parity()) throw RepresentationError(std::string(op) + ": parity mismatch");
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  require_same_layout(*this, o, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  require_same_layout(*this, o, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

ScalarField& ScalarField::operator*=(cplx s) {
  for (auto& v : data_) v *= s;
  return *this;
}

ScalarField& ScalarField::axpy(double s, const ScalarField& o) {
  require_same_layout(*this, o, "axpy");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
  return *this;
}

void ScalarField::set_zero() { std::fill(data_.begin(), data_.end(), cplx{}); }

void ScalarField::transform_in_place() {
  if (space_ == Space::physical) {
    grid_->to_spectral(data_, parity_);
    space_ = Space::spectral;
  } else {
    grid_->to_physical(data_, parity_);
    space_ = Space::physical;
  }
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

ScalarField transform(const ScalarField& f) {
  ScalarField out = f;
  out.transform_in_place();
  return out;
}

ScalarField to_spectral(const ScalarField& f) {
  return f.space() == Space::spectral ? f : transform(f);
}

ScalarField to_physical(const ScalarField& f) {
  return f.space() == Space::physical ? f : transform(f);
}

VectorField& VectorField::operator+=(const VectorField& o) {
  for (int i = 0; i < 3; ++i) comp[i] += o.comp[i];
  return *this;
}

VectorField& VectorField::operator-=(const VectorField& o) {
  for (int i = 0; i < 3; ++i) comp[i] -= o.comp[i];
  return *this;
}

VectorField& VectorField::operator*=(double s) {
  for (auto& c : comp) c *= s;
  return *this;
}

VectorField& VectorField::axpy(double s, const VectorField& o) {
  for (int i = 0; i < 3; ++i) comp[i].axpy(s, o.comp[i]);
  return *this;
}

VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
VectorField operator*(double s, VectorField a) { return a *= s; }

VectorField make_velocity(GridPtr grid, Space space) {
  return VectorField{{ScalarField(grid, Parity::even, space), ScalarField(grid, Parity::even, space),
                      ScalarField(grid, Parity::odd, space)}};
}

VectorField transform(const VectorField& u) {
  return VectorField{{transform(u[0]), transform(u[1]), transform(u[2])}};
}

VectorField to_spectral(const VectorField& u) {
  return VectorField{{to_spectral(u[0]), to_spectral(u[1]), to_spectral(u[2])}};
}

VectorField to_physical(const VectorField& u) {
  return VectorField{{to_physical(u[0]), to_physical(u[1]), to_physical(u[2])}};
}

// ---------------------------------------------------------------------------

HField::HField(GridPtr grid, Space space)
    : grid_(std::move(grid)), space_(space), data_(grid_->plane_size()) {}

namespace {
void require_same_layout(const HField& a, const HField& b, const char* op) {
  if (a.grid_ptr() != b.grid_ptr()) throw RepresentationError(std::string(op) + ": grid mismatch");
  if (a.space() != b.space())
    throw RepresentationError(std::string(op) + ": representation mismatch");
}
}  // namespace

HField& HField::operator+=(const HField& o) {
  require_same_layout(*this, o, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

HField& HField::operator-=(const HField& o) {
  require_same_layout(*this, o, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

HField& HField::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

HField& HField::axpy(double s, const HField& o) {
  require_same_layout(*this, o, "axpy");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
  return *this;
}

void HField::set_zero() { std::fill(data_.begin(), data_.end(), cplx{}); }

void HField::transform_in_place() {
  if (space_ == Space::physical) {
    grid_->to_spectral_h(data_);
    space_ = Space::spectral;
  } else {
    grid_->to_physical_h(data_);
    space_ = Space::physical;
  }
}

HField operator+(HField a, const HField& b) { return a += b; }
HField operator-(HField a, const HField& b) { return a -= b; }
HField operator*(double s, HField a) { return a *= s; }

HField transform(const HField& f) {
  HField out = f;
  out.transform_in_place();
  return out;
}

HField to_spectral(const HField& f) { return f.space() == Space::spectral ? f : transform(f); }
HField to_physical(const HField& f) { return f.space() == Space::physical ? f : transform(f); }

// ---------------------------------------------------------------------------

cplx inner(const ScalarField& f, const ScalarField& g) {
  require_same_layout(f, g, "inner");
  const Grid& grid = f.grid();
  const std::size_t np = grid.plane_size();
  cplx sum{};
  if (f.space() == Space::spectral) {
    for (int kz = 0; kz < grid.N_v(); ++kz) {
      cplx plane{};
      for (std::size_t i = 0; i < np; ++i) plane += std::conj(f.values()[kz * np + i]) * g.values()[kz * np + i];
      sum += vertical_weight(kz) * plane;
    }
    return sum * grid.volume();
  }
  for (std::size_t i = 0; i < f.values().size(); ++i) sum += std::conj(f.values()[i]) * g.values()[i];
  return sum * (grid.dx() * grid.dx() / grid.N_v());
}

double norm_sq(const ScalarField& f) { return inner(f, f).real(); }
double norm(const ScalarField& f) { return std::sqrt(norm_sq(f)); }

cplx inner(const VectorField& u, const VectorField& v) {
  return inner(u[0], v[0]) + inner(u[1], v[1]) + inner(u[2], v[2]);
}

double norm_sq(const VectorField& u) { return norm_sq(u[0]) + norm_sq(u[1]) + norm_sq(u[2]); }
double norm(const VectorField& u) { return std::sqrt(norm_sq(u)); }

cplx inner(const HField& f, const HField& g) {
  require_same_layout(f, g, "inner");
  cplx sum{};
  for (std::size_t i = 0; i < f.values().size(); ++i) sum += std::conj(f.values()[i]) * g.values()[i];
  const Grid& grid = f.grid();
  if (f.space() == Space::spectral) return sum * grid.volume();
  return sum * (grid.dx() * grid.dx());
}

double norm_sq(const HField& f) { return inner(f, f).real(); }
double norm(const HField& f) { return std::sqrt(norm_sq(f)); }

double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (const auto& v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs(const HField& f) {
  double m = 0.0;
  for (const auto& v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

bool all_finite(const ScalarField& f) {
  for (const auto& v : f.values())
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

bool all_finite(const HField& f) {
  for (const auto& v : f.values())
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

double conjugate_symmetry_defect(const ScalarField& f) {
  require_spectral(f, "conjugate_symmetry_defect");
  const Grid& g = f.grid();
  const int n = g.N_h();
  double worst = 0.0;
  for (int kz = 0; kz < g.N_v(); ++kz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const int jy = (n - iy) % n, jx = (n - ix) % n;
        worst = std::max(worst, std::abs(f(kz, iy, ix) - std::conj(f(kz, jy, jx))));
      }
  return worst;
}

}  // namespace geob
