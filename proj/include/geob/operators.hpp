#pragma once

#include "geob/field.hpp"

namespace geob {

/// Spatial axes, zero based: x1, x2 horizontal, x3 vertical.
enum class Axis { x1 = 0, x2 = 1, x3 = 2 };

/// Exact spectral derivative. A vertical derivative flips parity.
ScalarField diff(const ScalarField& f, Axis axis);
VectorField grad(const ScalarField& f);
ScalarField div(const VectorField& u);
ScalarField laplacian(const ScalarField& f);

/// Horizontal operators. grad_h returns (d1 f, d2 f, 0).
VectorField grad_h(const ScalarField& f);
ScalarField div_h(const VectorField& u);
ScalarField laplacian_h(const ScalarField& f);

HField diff(const HField& f, Axis axis);
HField laplacian(const HField& f);

/// u = solenoidal + grad(potential), with Laplacian(potential) = div u per
/// mode and the zero mode of the potential set to 0.
struct HelmholtzParts {
  VectorField solenoidal;
  ScalarField potential;
};

HelmholtzParts leray_decompose(const VectorField& u);
/// Leray projector onto divergence-free fields.
VectorField leray_P(const VectorField& u);
/// Complementary projector onto gradients, Q = I - P.
VectorField leray_Q(const VectorField& u);

/// Mean over the torus in x3. Odd fields average to zero.
HField vertical_average(const ScalarField& f);
/// The x3-independent field with the given horizontal profile.
ScalarField lift(const HField& h);
/// f minus its vertical average.
ScalarField oscillation(const ScalarField& f);
/// I with d/dx3 I = f and zero vertical mean. Throws std::domain_error if
/// the vertical mean of f exceeds tol relative to max |f|.
ScalarField vertical_antiderivative(const ScalarField& f, double tol = 1e-12);

/// omega_{i,j} = d_i u_j - d_j u_i for 1 <= i != j <= 3.
ScalarField vorticity_component(const VectorField& u, int i, int j);

/// Zeroes coefficients outside the retained band of the grid.
ScalarField dealias(const ScalarField& f);
VectorField dealias(const VectorField& u);
HField dealias(const HField& f);
void dealias_in_place(ScalarField& f);
void dealias_in_place(HField& f);

}  // namespace geob
