#pragma once

#include <iosfwd>
#include <string>

#include "geob/field.hpp"

namespace geob {

/// Text snapshot: a header line `GEOB1 scalar|vector N_h N_v L_h parity t`
/// followed by one row `kx ky kz re im` per retained mode (vector rows carry
/// three re/im pairs), sorted by (kx, ky, kz) with signed mode numbers.
/// Values are written with 17 significant digits and read back exactly.
/// Vector parities are written as `even,even,odd`. Horizontal fields are
/// stored with N_v = 1 and parity even.
void write_snapshot(std::ostream& os, const ScalarField& f, double t);
void write_snapshot(std::ostream& os, const VectorField& u, double t);
void write_snapshot(std::ostream& os, const HField& f, double t);

struct ScalarSnapshot {
  ScalarField field;
  double t = 0.0;
};
struct VectorSnapshot {
  VectorField field;
  double t = 0.0;
};
struct HSnapshot {
  HField field;
  double t = 0.0;
};

/// Readers take the grid to load into; its sizes must match the header.
/// Throws std::runtime_error on malformed input.
ScalarSnapshot read_scalar_snapshot(std::istream& is, const GridPtr& grid);
VectorSnapshot read_vector_snapshot(std::istream& is, const GridPtr& grid);
HSnapshot read_horizontal_snapshot(std::istream& is, const GridPtr& grid);

void save_snapshot(const std::string& path, const ScalarField& f, double t);
void save_snapshot(const std::string& path, const VectorField& u, double t);

}  // namespace geob
