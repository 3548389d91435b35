#include <doctest.h>

#include <sstream>

#include "geob/operators.hpp"
#include "geob/snapshot.hpp"
#include "helpers.hpp"

using namespace geob;

TEST_CASE("scalar snapshot round trip is bit exact") {
  auto g = make_grid(8 * kPi / 3, 16, 6);
  auto f = dealias(geob::testing::random_field(g, Parity::odd, 3));
  std::stringstream ss;
  write_snapshot(ss, f, 0.1 + 0.2);
  std::string first;
  std::getline(ss, first);
  CHECK(first.rfind("GEOB1 scalar 16 6 ", 0) == 0);
  ss.seekg(0);
  auto back = read_scalar_snapshot(ss, g);
  CHECK(back.t == 0.1 + 0.2);
  CHECK(back.field.parity() == Parity::odd);
  for (std::size_t i = 0; i < f.values().size(); ++i) CHECK(back.field.values()[i] == f.values()[i]);
}

TEST_CASE("vector and horizontal snapshots") {
  auto g = make_grid(kTwoPi, 8, 4);
  auto u = dealias(geob::testing::random_velocity(g, 5));
  std::stringstream ss;
  write_snapshot(ss, u, 1.5);
  auto back = read_vector_snapshot(ss, g);
  for (int c = 0; c < 3; ++c) {
    CHECK(back.field[c].parity() == u[c].parity());
    for (std::size_t i = 0; i < u[c].values().size(); ++i) CHECK(back.field[c].values()[i] == u[c].values()[i]);
  }

  HField h = vertical_average(u[0]);
  std::stringstream hs;
  write_snapshot(hs, h, 2.0);
  CHECK(hs.str().rfind("GEOB1 scalar 8 1 ", 0) == 0);
  auto hb = read_horizontal_snapshot(hs, g);
  for (std::size_t i = 0; i < h.values().size(); ++i) CHECK(hb.field.values()[i] == h.values()[i]);
}

TEST_CASE("rows are sorted by mode") {
  auto g = make_grid(kTwoPi, 8, 4);
  std::stringstream ss;
  write_snapshot(ss, ScalarField(g, Parity::even), 0.0);
  std::string line;
  std::getline(ss, line);
  std::getline(ss, line);
  CHECK(line.rfind("-2 -2 0 ", 0) == 0);
}

TEST_CASE("malformed snapshots are rejected") {
  auto g = make_grid(kTwoPi, 8, 4);
  std::stringstream a("GEOB2 scalar 8 4 1 even 0\n");
  CHECK_THROWS_AS(read_scalar_snapshot(a, g), std::runtime_error);
  std::stringstream b("GEOB1 scalar 16 4 6.2831853071795862 even 0\n");
  CHECK_THROWS_AS(read_scalar_snapshot(b, g), std::runtime_error);
  std::stringstream c("GEOB1 scalar 8 4 6.2831853071795862 even 0\n0 0 9 1 0\n");
  CHECK_THROWS_AS(read_scalar_snapshot(c, g), std::runtime_error);
}
