#include <doctest.h>

#include <cmath>
#include <sstream>

#include "geob/acoustic.hpp"
#include "geob/operators.hpp"
#include "helpers.hpp"

using namespace geob;
using geob::testing::random_field;
using geob::testing::smooth_field;
using geob::testing::smooth_velocity;

namespace {

ACState random_state(const GridPtr& g, unsigned seed) {
  return ACState{geob::testing::random_velocity(g, seed), random_field(g, Parity::even, seed + 7), 0.0};
}

double state_norm(const ACState& x) { return std::sqrt(norm_sq(x.u) + norm_sq(x.p)); }

ACState difference(ACState a, const ACState& b) {
  a.u -= b.u;
  a.p -= b.p;
  return a;
}

cplx pairing(const ACState& a, const ACState& b) { return inner(a.u, b.u) + inner(a.p, b.p); }

void check_eigs(double xi1, double xi2, double kappa, std::array<cplx, 4> expect) {
  auto l = eigenvalues(xi1, xi2, kappa);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(l[i] - expect[i]) < 1e-14);
}

}  // namespace

TEST_CASE("closed-form eigenvalues") {
  check_eigs(0, 0, 0, {cplx(0, -1), 0.0, 0.0, cplx(0, 1)});
  check_eigs(1, 0, 0, {cplx(0, -std::sqrt(2.0)), 0.0, 0.0, cplx(0, std::sqrt(2.0))});
  check_eigs(0, 0, 1, {cplx(0, -1), cplx(0, -1), cplx(0, 1), cplx(0, 1)});
  // Roots of the quartic.
  for (double k : {0.0, 0.5, 3.0})
    for (double xi : {0.0, 0.3, 2.0})
      for (const cplx& l : eigenvalues(xi, -xi, k)) {
        const double a = 2 * xi * xi, b = k * k;
        CHECK(std::abs(l * l * l * l + (1 + a + b) * l * l + b) < 1e-11 * (1 + a + b) * (1 + a + b));
      }
}

TEST_CASE("mode blocks diagonalize W") {
  for (double k : {0.0, 1.0, kTwoPi, -2.0})
    for (double xi1 : {0.0, 0.7, -3.0})
      for (double xi2 : {0.0, 1.1}) {
        auto mb = mode_block(xi1, xi2, k);
        Mat4 w = acoustic_block(xi1, xi2, k);
        CHECK((w + w.adjoint()).norm() == 0.0);
        CHECK((mb.eigenvectors.adjoint() * mb.eigenvectors - Mat4::Identity()).norm() < 1e-13);
        for (int i = 0; i < 4; ++i)
          CHECK((w * mb.eigenvectors.col(i) - mb.eigenvalues[i] * mb.eigenvectors.col(i)).norm() <
                1e-12 * (1 + w.norm()));
        CHECK(mb.kernel_vector.has_value() == (k == 0.0));
        if (mb.kernel_vector) {
          CHECK((w * *mb.kernel_vector).norm() < 1e-14);
          CHECK((*mb.kernel_vector)(3) == cplx{});
        }
      }
}

TEST_CASE("eigenvalues match the dense solve of the beta = 1/2 mode matrix") {
  ACParams p{1.0, 0.5, 0.0};
  auto g = make_grid(8 * kPi, 32, 8);
  int checked = 0;
  for (int kz = 0; kz < g->N_v(); ++kz)
    for (int iy = 0; iy < 32; ++iy)
      for (int ix = 0; ix < 32; ++ix) {
        if (!in_truncation(*g, kz, iy, ix, 8.0)) continue;
        const double a = g->wavenumber(ix), b = g->wavenumber(iy), k = g->vertical_wavenumber(kz);
        auto dense = mode_eigen(p, a, b, k);
        auto closed = eigenvalues(a, b, k);
        for (int i = 0; i < 4; ++i) CHECK(std::abs(dense.eigenvalues(i) - closed[i]) < 1e-10);
        const bool has_zero = std::abs(closed[1]) < 1e-12;
        CHECK(has_zero == (kz == 0));
        for (const auto& l : closed) CHECK(l.real() == 0.0);
        ++checked;
      }
  CHECK(checked > 100);
}

TEST_CASE("apply_W") {
  auto g = make_grid(8 * kPi, 32, 8);
  SUBCASE("kernel element maps to zero") {
    HField ph = vertical_average(smooth_field(g, Parity::even, 3));
    ScalarField p = lift(ph);
    ACState x{VectorField{{-1.0 * diff(p, Axis::x2), diff(p, Axis::x1), ScalarField(g, Parity::odd)}}, p, 0.0};
    auto w = apply_W(x);
    CHECK(state_norm(w) < 1e-13 * state_norm(x));
  }
  SUBCASE("gradient velocity") {
    auto psi = smooth_field(g, Parity::even, 4);
    ACState x{grad(psi), ScalarField(g, Parity::even), 0.0};
    auto w = apply_W(x);
    CHECK(norm(w.p - laplacian(psi)) < 1e-12 * norm(laplacian(psi)));
    auto gp = grad(psi);
    CHECK(norm(w.u[0] + gp[1]) < 1e-13 * norm(gp));
    CHECK(norm(w.u[1] - gp[0]) < 1e-13 * norm(gp));
    CHECK(norm(w.u[2]) == 0.0);
  }
  SUBCASE("skew-adjoint") {
    auto x = random_state(g, 5);
    const double n2 = state_norm(x) * state_norm(apply_W(x));
    CHECK(std::abs(pairing(apply_W(x), x).real()) < 1e-12 * n2);
    CHECK(apply_W(x).u[2].parity() == Parity::odd);
  }
}

TEST_CASE("kernel projection") {
  auto g = make_grid(8 * kPi, 32, 8);
  auto x = random_state(g, 9);
  const double n = state_norm(x);
  auto q = kernel_project(x);
  auto qperp = complement_project(x);
  CHECK(state_norm(apply_W(q)) < 1e-12 * n);
  CHECK(state_norm(difference(kernel_project(q), q)) < 1e-13 * n);
  CHECK(std::abs(pairing(q, qperp)) < 1e-13 * n * n);
  // Image is geostrophically balanced and horizontally divergence free.
  auto gp = grad(q.p);
  CHECK(norm(q.u[0] + gp[1]) < 1e-12 * n);
  CHECK(norm(q.u[1] - gp[0]) < 1e-12 * n);
  CHECK(norm(div_h(q.u)) < 1e-12 * n);

  // States with only k != 0 content project to zero.
  ACState y = x;
  for (ScalarField* f : {&y.p, &y.u[0], &y.u[1], &y.u[2]}) {
    auto plane = f->values().subspan(0, g->plane_size());
    std::fill(plane.begin(), plane.end(), cplx{});
  }
  CHECK(state_norm(kernel_project(y)) == 0.0);

  // A balanced x_h-only state is a fixed point.
  ACState b = kernel_project(x);
  CHECK(state_norm(difference(kernel_project(b), b)) < 1e-13 * state_norm(b));
}

TEST_CASE("truncation") {
  auto g = make_grid(8 * kPi, 32, 8);
  auto x = random_state(g, 13);
  auto t0 = truncate(x, 0.0);
  CHECK(std::abs(t0.p(0, 0, 0) - x.p(0, 0, 0)) == 0.0);
  for (const ScalarField* f : {&t0.p, &t0.u[0], &t0.u[1], &t0.u[2]})
    for (std::size_t i = 1; i < f->values().size(); ++i) CHECK(f->values()[i] == cplx{});
  CHECK(state_norm(difference(truncate(x, 1e6), x)) == 0.0);
  auto tm = truncate(x, 5.0);
  CHECK(state_norm(difference(truncate(tm, 5.0), tm)) == 0.0);
  auto a = truncate(kernel_project(x), 5.0);
  auto b = kernel_project(truncate(x, 5.0));
  CHECK(state_norm(difference(a, b)) < 1e-13 * state_norm(x));
}

TEST_CASE("half-wave group") {
  auto g = make_grid(8 * kPi, 32, 8);
  auto v = random_field(g, Parity::even, 17);
  CHECK(norm(half_wave(v, 0.0) - v) == 0.0);
  CHECK(std::abs(norm(half_wave(v, 3.7)) - norm(v)) < 1e-14 * norm(v));
  auto st = half_wave(half_wave(v, 0.4), 1.3);
  CHECK(norm(st - half_wave(v, 1.7)) < 1e-13 * norm(v));
  ScalarField one(g, Parity::even);
  one(2, 3, 0) = 1.0;
  const double k = std::sqrt(g->wavenumber_sq(2, 3, 0));
  CHECK(std::abs(half_wave(one, 0.9)(2, 3, 0) - std::exp(cplx(0, k * 0.9))) < 1e-15);
}

TEST_CASE("propagate agrees with the solver's linear phase at beta = 1/2") {
  auto g = make_grid(8 * kPi, 16, 4);
  ACState x{smooth_velocity(g, 21), smooth_field(g, Parity::even, 22), 0.0};
  for (double eps : {1.0, 0.1}) {
    ACParams p{eps, 0.5, 0.0, false};
    const double t = 0.37;
    auto a = linear_phase(x, p, t);
    auto b = propagate(x, t / eps);
    CHECK(state_norm(difference(a, b)) < 1e-12 * state_norm(x));
  }
  // Kernel states are stationary.
  auto k = kernel_project(x);
  auto lp = linear_phase(k, ACParams{0.05, 0.5, 0.0, false}, 1.0);
  CHECK(state_norm(difference(lp, k)) < 1e-12 * state_norm(k));
}

TEST_CASE("local decay functional") {
  auto g = make_grid(64.0, 64, 4);
  HField v(g, Space::physical);
  for (int iy = 0; iy < 64; ++iy)
    for (int ix = 0; ix < 64; ++ix) {
      const double dx = g->x(ix) - 32, dy = g->x(iy) - 32;
      v(iy, ix) = std::exp(-(dx * dx + dy * dy) / 4.0);
    }
  v.transform_in_place();
  CHECK(local_decay_functional(HField(g), 2, 0.1, 0.01, 8.0) == 0.0);
  const double full = local_decay_functional(v, 2, 0.1, 0.05, 64.0, 40);
  CHECK(full == doctest::Approx(0.05 * norm_sq(v)).epsilon(1e-12));
  CHECK_THROWS_AS(local_decay_functional(v, 2, 0.1, 1.0, 8.0), RecurrenceViolation);
  CHECK_THROWS_AS(local_decay_functional(v, 2, 0.1, 0.01, 40.0), std::invalid_argument);
  const double a = local_decay_functional(v, 2, 0.1, 0.2, 8.0);
  CHECK(a > 0.0);
  CHECK(a < 0.2 * norm_sq(v));
}

TEST_CASE("rage functional") {
  auto g = make_grid(8 * kPi, 16, 4);
  ACState x{smooth_velocity(g, 31), smooth_field(g, Parity::even, 32), 0.0};
  const HField chi = bump(g, 6.0);
  CHECK(rage_functional(kernel_project(x), chi, 0.1, 0.5, 100.0, 20) < 1e-24);
  const double m = 100.0;
  ACState y = truncate(complement_project(x), m);
  const double r1 = rage_functional(y, constant_weight(g), 0.1, 0.5, m, 10);
  CHECK(r1 == doctest::Approx(norm_sq(y.u) + norm_sq(y.p)).epsilon(1e-10));
  CHECK_THROWS_AS(rage_functional(y, constant_weight(g, 1.5), 0.1, 0.5, m, 10), std::domain_error);
  std::vector<ACState> states{y, propagate(y, 1.0)};
  CHECK(rage_functional(states, {0.0, 0.1}, chi, m) > 0.0);
}

TEST_CASE("mode table") {
  auto g = make_grid(kTwoPi, 8, 4);
  std::ostringstream os;
  write_mode_table(os, *g, 2.0);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line.rfind("kx,ky,kz,re_l1", 0) == 0);
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 13);  // |m| <= 2 disc in the kz = 0 plane
}
