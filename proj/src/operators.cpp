#include "geob/operators.hpp"

#include <cmath>
#include <stdexcept>

namespace geob {

namespace {

constexpr cplx I{0.0, 1.0};

// Multiplier of d/dx3 acting on a field of parity `from`.
double vertical_multiplier(const Grid& g, int kz, Parity from) {
  const double k = g.vertical_wavenumber(kz);
  return from == Parity::even ? -k : k;
}

void require_spectral(const VectorField& u, const char* op) {
  for (const auto& c : u.comp) geob::require_spectral(c, op);
}

void require_spectral(const HField& f, const char* op) {
  if (f.empty()) throw RepresentationError(std::string(op) + ": empty field");
  if (f.space() != Space::spectral)
    throw RepresentationError(std::string(op) + ": field must be in coefficient space");
}

// Parities (P, P, flip P) as carried by gradients of a P-parity scalar.
Parity gradient_like_parity(const VectorField& u, const char* op) {
  const Parity p = u[0].parity();
  if (u[1].parity() != p || u[2].parity() != flip(p))
    throw RepresentationError(std::string(op) + ": components must have parities (P, P, flip P)");
  return p;
}

}  // namespace

ScalarField diff(const ScalarField& f, Axis axis) {
  require_spectral(f, "diff");
  const Grid& g = f.grid();
  const int n = g.N_h();
  if (axis == Axis::x3) {
    ScalarField out(f.grid_ptr(), flip(f.parity()));
    for (int kz = 1; kz < g.N_v(); ++kz) {
      const double m = vertical_multiplier(g, kz, f.parity());
      for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) out(kz, iy, ix) = m * f(kz, iy, ix);
    }
    return out;
  }
  ScalarField out(f.grid_ptr(), f.parity());
  for (int kz = 0; kz < g.N_v(); ++kz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const double k = axis == Axis::x1 ? g.wavenumber(ix) : g.wavenumber(iy);
        out(kz, iy, ix) = I * k * f(kz, iy, ix);
      }
  return out;
}

VectorField grad(const ScalarField& f) {
  return VectorField{{diff(f, Axis::x1), diff(f, Axis::x2), diff(f, Axis::x3)}};
}

ScalarField div(const VectorField& u) {
  require_spectral(u, "div");
  gradient_like_parity(u, "div");
  ScalarField out = diff(u[0], Axis::x1);
  out += diff(u[1], Axis::x2);
  out += diff(u[2], Axis::x3);
  return out;
}

ScalarField laplacian(const ScalarField& f) {
  require_spectral(f, "laplacian");
  const Grid& g = f.grid();
  const int n = g.N_h();
  ScalarField out(f.grid_ptr(), f.parity());
  for (int kz = 0; kz < g.N_v(); ++kz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) out(kz, iy, ix) = -g.wavenumber_sq(kz, iy, ix) * f(kz, iy, ix);
  return out;
}

VectorField grad_h(const ScalarField& f) {
  return VectorField{{diff(f, Axis::x1), diff(f, Axis::x2),
                      ScalarField(f.grid_ptr(), flip(f.parity()))}};
}

ScalarField div_h(const VectorField& u) {
  require_spectral(u, "div_h");
  if (u[0].parity() != u[1].parity())
    throw RepresentationError("div_h: horizontal components must share parity");
  ScalarField out = diff(u[0], Axis::x1);
  out += diff(u[1], Axis::x2);
  return out;
}

ScalarField laplacian_h(const ScalarField& f) {
  require_spectral(f, "laplacian_h");
  const Grid& g = f.grid();
  const int n = g.N_h();
  ScalarField out(f.grid_ptr(), f.parity());
  for (int kz = 0; kz < g.N_v(); ++kz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const double a = g.wavenumber(ix), b = g.wavenumber(iy);
        out(kz, iy, ix) = -(a * a + b * b) * f(kz, iy, ix);
      }
  return out;
}

HField diff(const HField& f, Axis axis) {
  require_spectral(f, "diff");
  if (axis == Axis::x3) return HField(f.grid_ptr());
  const Grid& g = f.grid();
  const int n = g.N_h();
  HField out(f.grid_ptr());
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const double k = axis == Axis::x1 ? g.wavenumber(ix) : g.wavenumber(iy);
      out(iy, ix) = I * k * f(iy, ix);
    }
  return out;
}

HField laplacian(const HField& f) {
  require_spectral(f, "laplacian");
  const Grid& g = f.grid();
  const int n = g.N_h();
  HField out(f.grid_ptr());
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) out(iy, ix) = -g.wavenumber_sq(0, iy, ix) * f(iy, ix);
  return out;
}

HelmholtzParts leray_decompose(const VectorField& u) {
  require_spectral(u, "leray_decompose");
  const Parity p = gradient_like_parity(u, "leray_decompose");
  const Grid& g = u.grid();
  const int n = g.N_h();
  HelmholtzParts parts{u, ScalarField(u.grid_ptr(), p)};
  for (int kz = 0; kz < g.N_v(); ++kz) {
    const double g3 = vertical_multiplier(g, kz, p);  // d/dx3 on the potential
    const double d3 = -g3;                            // d/dx3 on the third component
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const double k2 = g.wavenumber_sq(kz, iy, ix);
        if (k2 == 0.0) continue;
        const double a = g.wavenumber(ix), b = g.wavenumber(iy);
        const cplx dv = I * a * u[0](kz, iy, ix) + I * b * u[1](kz, iy, ix) + d3 * u[2](kz, iy, ix);
        const cplx psi = -dv / k2;
        parts.potential(kz, iy, ix) = psi;
        parts.solenoidal[0](kz, iy, ix) -= I * a * psi;
        parts.solenoidal[1](kz, iy, ix) -= I * b * psi;
        parts.solenoidal[2](kz, iy, ix) -= g3 * psi;
      }
  }
  return parts;
}

VectorField leray_P(const VectorField& u) { return leray_decompose(u).solenoidal; }

VectorField leray_Q(const VectorField& u) { return u - leray_decompose(u).solenoidal; }

HField vertical_average(const ScalarField& f) {
  require_spectral(f, "vertical_average");
  HField out(f.grid_ptr());
  if (f.parity() == Parity::odd) return out;
  const auto src = f.values().subspan(0, f.grid().plane_size());
  std::copy(src.begin(), src.end(), out.values().begin());
  return out;
}

ScalarField lift(const HField& h) {
  require_spectral(h, "lift");
  ScalarField out(h.grid_ptr(), Parity::even);
  std::copy(h.values().begin(), h.values().end(), out.values().begin());
  return out;
}

ScalarField oscillation(const ScalarField& f) {
  require_spectral(f, "oscillation");
  ScalarField out = f;
  if (f.parity() == Parity::even) {
    auto plane = out.values().subspan(0, f.grid().plane_size());
    std::fill(plane.begin(), plane.end(), cplx{});
  }
  return out;
}

ScalarField vertical_antiderivative(const ScalarField& f, double tol) {
  require_spectral(f, "vertical_antiderivative");
  const Grid& g = f.grid();
  const std::size_t np = g.plane_size();
  if (f.parity() == Parity::even) {
    double mean = 0.0;
    for (std::size_t i = 0; i < np; ++i) mean = std::max(mean, std::abs(f.values()[i]));
    if (mean > tol * std::max(1.0, max_abs(f)))
      throw std::domain_error("vertical_antiderivative: field has nonzero vertical mean");
  }
  ScalarField out(f.grid_ptr(), flip(f.parity()));
  for (int kz = 1; kz < g.N_v(); ++kz) {
    // d/dx3 of the result must reproduce f: invert the vertical multiplier.
    const double m = vertical_multiplier(g, kz, out.parity());
    for (std::size_t i = 0; i < np; ++i) out.values()[kz * np + i] = f.values()[kz * np + i] / m;
  }
  return out;
}

ScalarField vorticity_component(const VectorField& u, int i, int j) {
  if (i < 1 || i > 3 || j < 1 || j > 3) throw std::invalid_argument("vorticity_component: indices must lie in {1,2,3}");
  if (i == j) throw std::invalid_argument("vorticity_component: requires i != j");
  const auto ax = [](int k) { return static_cast<Axis>(k - 1); };
  ScalarField out = diff(u[j - 1], ax(i));
  out -= diff(u[i - 1], ax(j));
  return out;
}

void dealias_in_place(ScalarField& f) {
  require_spectral(f, "dealias");
  const Grid& g = f.grid();
  const int n = g.N_h();
  for (int kz = 0; kz < g.N_v(); ++kz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix)
        if (!g.is_retained(kz, iy, ix)) f(kz, iy, ix) = 0.0;
}

void dealias_in_place(HField& f) {
  require_spectral(f, "dealias");
  const Grid& g = f.grid();
  const int n = g.N_h();
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix)
      if (!g.is_retained(0, iy, ix)) f(iy, ix) = 0.0;
}

ScalarField dealias(const ScalarField& f) {
  ScalarField out = f;
  dealias_in_place(out);
  return out;
}

VectorField dealias(const VectorField& u) {
  return VectorField{{dealias(u[0]), dealias(u[1]), dealias(u[2])}};
}

HField dealias(const HField& f) {
  HField out = f;
  dealias_in_place(out);
  return out;
}

}  // namespace geob
