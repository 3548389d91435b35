#pragma once

#include <random>

#include "geob/field.hpp"

namespace geob::testing {

// Real random samples, returned in coefficient space.
inline ScalarField random_field(const GridPtr& g, Parity parity, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  ScalarField f(g, parity, Space::physical);
  for (auto& v : f.values()) v = n(rng);
  f.transform_in_place();
  return f;
}

inline VectorField random_velocity(const GridPtr& g, unsigned seed) {
  return VectorField{{random_field(g, Parity::even, seed), random_field(g, Parity::even, seed + 1),
                      random_field(g, Parity::odd, seed + 2)}};
}

inline double rel_diff(const ScalarField& a, const ScalarField& b) {
  return norm(a - b) / std::max(norm(a), 1e-300);
}

inline double rel_diff(const VectorField& a, const VectorField& b) {
  return norm(a - b) / std::max(norm(a), 1e-300);
}

}  // namespace geob::testing

#include "geob/operators.hpp"

namespace geob::testing {

// Band-limited field with coefficients decaying like exp(-|k|^2 / 8), unit RMS scale.
inline ScalarField smooth_field(const GridPtr& g, Parity parity, unsigned seed, double amplitude = 1.0) {
  ScalarField f = dealias(random_field(g, parity, seed));
  const int n = g->N_h();
  for (int kz = 0; kz < g->N_v(); ++kz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const double m2 = double(g->mode_number(ix)) * g->mode_number(ix) +
                          double(g->mode_number(iy)) * g->mode_number(iy) + double(kz) * kz;
        f(kz, iy, ix) *= std::exp(-m2 / 8.0);
      }
  const double rms = norm(f) / std::sqrt(g->volume());
  if (rms > 0) f *= amplitude / rms;
  return f;
}

inline VectorField smooth_velocity(const GridPtr& g, unsigned seed, double amplitude = 1.0) {
  return VectorField{{smooth_field(g, Parity::even, seed, amplitude), smooth_field(g, Parity::even, seed + 1, amplitude),
                      smooth_field(g, Parity::odd, seed + 2, amplitude)}};
}

}  // namespace geob::testing
