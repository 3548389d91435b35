#include "geob/snapshot.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>
#include <vector>

#include "text.hpp"

namespace geob {

namespace {

struct Mode {
  int kx, ky, kz;
  std::size_t index;
};

// Retained modes sorted by signed (kx, ky, kz).
std::vector<Mode> retained_modes(const Grid& g, int n_v) {
  std::vector<Mode> modes;
  const int n = g.N_h();
  for (int kz = 0; kz < n_v; ++kz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix)
        if (g.is_retained(kz, iy, ix)) modes.push_back({g.mode_number(ix), g.mode_number(iy), kz, g.index(kz, iy, ix)});
  std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
    return std::tie(a.kx, a.ky, a.kz) < std::tie(b.kx, b.ky, b.kz);
  });
  return modes;
}

void header(std::ostream& os, const char* kind, const Grid& g, int n_v, const std::string& parity, double t) {
  os << "GEOB1 " << kind << ' ' << g.N_h() << ' ' << n_v << ' ' << detail::num(g.L_h()) << ' ' << parity << ' '
     << detail::num(t) << '\n';
}

void put(std::ostream& os, cplx v) { os << ' ' << detail::num(v.real()) << ' ' << detail::num(v.imag()); }

struct Header {
  std::string kind, parity;
  int n_h = 0, n_v = 0;
  double L_h = 0.0, t = 0.0;
};

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw std::runtime_error("snapshot: bad number '" + s + "'");
  return v;
}

Header read_header(std::istream& is, const std::string& kind, const Grid& g, int n_v) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("snapshot: missing header");
  std::istringstream ls(line);
  std::string magic, L, t;
  Header h;
  if (!(ls >> magic >> h.kind >> h.n_h >> h.n_v >> L >> h.parity >> t) || magic != "GEOB1")
    throw std::runtime_error("snapshot: malformed header");
  h.L_h = parse_double(L);
  h.t = parse_double(t);
  if (h.kind != kind) throw std::runtime_error("snapshot: expected a " + kind + " snapshot, found " + h.kind);
  if (h.n_h != g.N_h() || h.n_v != n_v || h.L_h != g.L_h())
    throw std::runtime_error("snapshot: grid does not match the header");
  return h;
}

std::vector<cplx> read_rows(std::istream& is, const Grid& g, int n_v, int values_per_row,
                            std::vector<std::size_t>& where) {
  std::vector<cplx> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    int kx, ky, kz;
    if (!(ls >> kx >> ky >> kz)) throw std::runtime_error("snapshot: malformed row '" + line + "'");
    const int n = g.N_h();
    if (kz < 0 || kz >= n_v || kx < -n / 2 || kx >= n / 2 || ky < -n / 2 || ky >= n / 2)
      throw std::runtime_error("snapshot: mode out of range in row '" + line + "'");
    where.push_back(g.index(kz, g.fft_index(ky), g.fft_index(kx)));
    for (int c = 0; c < values_per_row; ++c) {
      std::string re, im;
      if (!(ls >> re >> im)) throw std::runtime_error("snapshot: malformed row '" + line + "'");
      out.emplace_back(parse_double(re), parse_double(im));
    }
  }
  return out;
}

void require_spectral_field(const ScalarField& f) { require_spectral(f, "write_snapshot"); }

}  // namespace

void write_snapshot(std::ostream& os, const ScalarField& f, double t) {
  require_spectral_field(f);
  const Grid& g = f.grid();
  header(os, "scalar", g, g.N_v(), to_string(f.parity()), t);
  for (const Mode& m : retained_modes(g, g.N_v())) {
    os << m.kx << ' ' << m.ky << ' ' << m.kz;
    put(os, f.values()[m.index]);
    os << '\n';
  }
}

void write_snapshot(std::ostream& os, const VectorField& u, double t) {
  for (int c = 0; c < 3; ++c) require_spectral_field(u[c]);
  const Grid& g = u.grid();
  const std::string par = std::string(to_string(u[0].parity())) + "," + to_string(u[1].parity()) + "," +
                          to_string(u[2].parity());
  header(os, "vector", g, g.N_v(), par, t);
  for (const Mode& m : retained_modes(g, g.N_v())) {
    os << m.kx << ' ' << m.ky << ' ' << m.kz;
    for (int c = 0; c < 3; ++c) put(os, u[c].values()[m.index]);
    os << '\n';
  }
}

void write_snapshot(std::ostream& os, const HField& f, double t) {
  if (f.space() != Space::spectral) throw RepresentationError("write_snapshot: field must be in coefficient space");
  const Grid& g = f.grid();
  header(os, "scalar", g, 1, "even", t);
  for (const Mode& m : retained_modes(g, 1)) {
    os << m.kx << ' ' << m.ky << ' ' << m.kz;
    put(os, f.values()[m.index]);
    os << '\n';
  }
}

ScalarSnapshot read_scalar_snapshot(std::istream& is, const GridPtr& grid) {
  const Header h = read_header(is, "scalar", *grid, grid->N_v());
  ScalarSnapshot s{ScalarField(grid, parse_parity(h.parity)), h.t};
  std::vector<std::size_t> where;
  const auto vals = read_rows(is, *grid, grid->N_v(), 1, where);
  for (std::size_t i = 0; i < where.size(); ++i) s.field.values()[where[i]] = vals[i];
  return s;
}

VectorSnapshot read_vector_snapshot(std::istream& is, const GridPtr& grid) {
  const Header h = read_header(is, "vector", *grid, grid->N_v());
  std::array<Parity, 3> par{};
  std::istringstream ps(h.parity);
  for (auto& p : par) {
    std::string tok;
    if (!std::getline(ps, tok, ',')) throw std::runtime_error("snapshot: bad vector parity '" + h.parity + "'");
    p = parse_parity(tok);
  }
  VectorSnapshot s{VectorField{{ScalarField(grid, par[0]), ScalarField(grid, par[1]), ScalarField(grid, par[2])}},
                   h.t};
  std::vector<std::size_t> where;
  const auto vals = read_rows(is, *grid, grid->N_v(), 3, where);
  for (std::size_t i = 0; i < where.size(); ++i)
    for (int c = 0; c < 3; ++c) s.field[c].values()[where[i]] = vals[3 * i + c];
  return s;
}

HSnapshot read_horizontal_snapshot(std::istream& is, const GridPtr& grid) {
  const Header h = read_header(is, "scalar", *grid, 1);
  HSnapshot s{HField(grid), h.t};
  std::vector<std::size_t> where;
  const auto vals = read_rows(is, *grid, 1, 1, where);
  for (std::size_t i = 0; i < where.size(); ++i) s.field.values()[where[i]] = vals[i];
  return s;
}

void save_snapshot(const std::string& path, const ScalarField& f, double t) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_snapshot(os, f, t);
}

void save_snapshot(const std::string& path, const VectorField& u, double t) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_snapshot(os, u, t);
}

}  // namespace geob
