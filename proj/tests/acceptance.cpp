// Acceptance runner: one PASS/FAIL line per criterion, details indented below.
// Usage: geob_acceptance [N ...]   (no arguments runs all ten)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "geob/acoustic.hpp"
#include "geob/harness.hpp"
#include "geob/limit.hpp"
#include "geob/operators.hpp"

using namespace geob;

namespace {

struct Outcome {
  bool pass = true;
  std::string summary;
  std::vector<std::string> details;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    details.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
  void info(const std::string& what) { details.push_back("     " + what); }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt("%.4g", v[i]);
  return "[" + s + "]";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ScalarField random_field(const GridPtr& g, Parity parity, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  ScalarField f(g, parity, Space::physical);
  for (auto& v : f.values()) v = n(rng);
  f.transform_in_place();
  return f;
}

VectorField random_velocity(const GridPtr& g, std::mt19937_64& rng) {
  return VectorField{{random_field(g, Parity::even, rng), random_field(g, Parity::even, rng),
                      random_field(g, Parity::odd, rng)}};
}

double state_norm(const ACState& x) { return std::sqrt(norm_sq(x.u) + norm_sq(x.p)); }

ACState minus(ACState a, const ACState& b) {
  a.u -= b.u;
  a.p -= b.p;
  return a;
}

std::vector<double> column_values(const StudyResult& r, const std::string& name) {
  std::size_t c = 0;
  while (r.columns[c] != name) ++c;
  std::vector<double> v;
  for (const auto& row : r.rows) v.push_back(row.values[c]);
  return v;
}

bool all_rows_ok(const StudyResult& r) {
  for (const auto& row : r.rows)
    if (!row.valid()) return false;
  return true;
}

std::string statuses(const StudyResult& r) {
  std::string s;
  for (const auto& row : r.rows) s += (s.empty() ? "" : ",") + row.status;
  return s;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

std::optional<Fit> fit_of(const StudyResult& r, const std::string& metric) {
  for (const auto& f : r.fits)
    if (f.metric == metric) return f;
  return std::nullopt;
}

const std::vector<double> kHalvings{0.2, 0.1, 0.05, 0.025, 0.0125};

// 1. Spectral algebra on 50 random fields.
Outcome spectral_algebra() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  auto g = make_grid(8 * kPi, 64, 16);
  std::mt19937_64 rng(20240501);
  double parseval = 0, roundtrip = 0, pq = 0, idem = 0, orth = 0, helm = 0;
  bool parity_ok = true;
  for (int s = 0; s < 50; ++s) {
    for (Parity p : {Parity::even, Parity::odd}) {
      ScalarField f = random_field(g, p, rng);
      ScalarField phys = to_physical(f);
      parseval = std::max(parseval, std::abs(norm_sq(phys) - norm_sq(f)) / norm_sq(f));
      roundtrip = std::max(roundtrip, norm(to_spectral(phys) - f) / norm(f));
      parity_ok = parity_ok && diff(f, Axis::x1).parity() == p && diff(f, Axis::x2).parity() == p &&
                  diff(f, Axis::x3).parity() == flip(p);
    }
    VectorField u = random_velocity(g, rng);
    const double n = norm(u);
    VectorField P = leray_P(u), Q = leray_Q(u);
    pq = std::max(pq, norm(P + Q - u) / n);
    idem = std::max({idem, norm(leray_P(P) - P) / n, norm(leray_Q(Q) - Q) / n});
    orth = std::max(orth, std::abs(inner(P, Q)) / (n * n));
    auto parts = leray_decompose(u);
    helm = std::max(helm, norm(parts.solenoidal + grad(parts.potential) - u) / n);
  }
  const double t = seconds_since(t0);
  o.require(parseval <= 1e-12, fmt("Parseval max rel %.2e <= 1e-12", parseval));
  o.require(roundtrip <= 1e-13, fmt("transform round trip max rel %.2e <= 1e-13", roundtrip));
  o.require(parity_ok, "derivative parity rules");
  o.require(pq <= 1e-13, fmt("P + Q = I max rel %.2e <= 1e-13", pq));
  o.require(idem <= 1e-13, fmt("P, Q idempotent max rel %.2e <= 1e-13", idem));
  o.require(orth <= 1e-13, fmt("<Pu, Qu> max rel %.2e <= 1e-13", orth));
  o.require(helm <= 1e-13, fmt("Helmholtz round trip max rel %.2e <= 1e-13", helm));
  o.require(t < 30.0, fmt("wall time %.1f s < 30 s", t));
  o.summary = "spectral algebra on 50 random fields, 64^2 x 16";
  return o;
}

// 2. Closed-form eigenvalues against the dense solve, beta = 1/2, mu = 0.
Outcome eigen_oracle() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  auto g = make_grid(8 * kPi, 64, 16);
  const ACParams p{1.0, 0.5, 0.0};
  double worst = 0;
  long modes = 0, zero_modes = 0;
  bool zeros_ok = true;
  for (int kz = 0; kz < g->N_v(); ++kz)
    for (int iy = 0; iy < g->N_h(); ++iy)
      for (int ix = 0; ix < g->N_h(); ++ix) {
        if (!in_truncation(*g, kz, iy, ix, 8.0)) continue;
        const double a = g->wavenumber(ix), b = g->wavenumber(iy), k = g->vertical_wavenumber(kz);
        auto dense = mode_eigen(p, a, b, k);
        auto closed = eigenvalues(a, b, k);
        for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(dense.eigenvalues(i) - closed[i]));
        bool has_zero = false;
        for (auto l : closed) has_zero = has_zero || std::abs(l) < 1e-12;
        if (has_zero) ++zero_modes;
        zeros_ok = zeros_ok && has_zero == (kz == 0);
        ++modes;
      }
  const double t = seconds_since(t0);
  o.require(worst <= 1e-10, fmt("max |closed - dense| %.2e <= 1e-10 over %ld modes", worst, modes));
  o.require(zeros_ok, fmt("zero eigenvalues only at k = 0 (%ld modes)", zero_modes));
  o.require(t < 5.0, fmt("wall time %.2f s < 5 s", t));
  o.summary = "eigenvalue oracle for |xi_h| + |k| <= 8";
  return o;
}

// 3. Kernel projection.
Outcome kernel_fidelity() {
  Outcome o;
  auto g = make_grid(8 * kPi, 64, 16);
  std::mt19937_64 rng(77);
  double w = 0, idem = 0, orth = 0;
  for (int s = 0; s < 10; ++s) {
    ACState x{random_velocity(g, rng), random_field(g, Parity::even, rng), 0.0};
    const double n = state_norm(x);
    ACState q = kernel_project(x), c = complement_project(x);
    w = std::max(w, state_norm(apply_W(q)) / n);
    idem = std::max(idem, state_norm(minus(kernel_project(q), q)) / n);
    orth = std::max(orth, std::abs(inner(q.u, c.u) + inner(q.p, c.p)) / (n * n));
  }
  o.require(w <= 1e-12, fmt("||W(Qx)|| / ||x|| max %.2e <= 1e-12", w));
  o.require(idem <= 1e-13, fmt("Q idempotent max rel %.2e <= 1e-13", idem));
  o.require(orth <= 1e-13, fmt("<Qx, (I-Q)x> max rel %.2e <= 1e-13", orth));
  o.summary = "kernel projection on 10 random states, 64^2 x 16";
  return o;
}

ACState smooth_state(const GridPtr& g, unsigned long seed, double amplitude) {
  StudyConfig c;
  c.ic_kind = "ill";
  c.ic_seed = seed;
  c.ic_band = {1, 3};
  c.ic_amplitude = amplitude;
  return gen_initial_data(c, g);
}

// 4. Energy contract.
Outcome energy_contract() {
  Outcome o;
  auto g = make_grid(8 * kPi, 32, 8);
  ACState x = smooth_state(g, 4, 1.0);

  auto lin = run(ACParams{0.1, 1.0, 0.0, false}, x, 10.0, 1e-3, 100);
  double drift = 0;
  for (double e : lin.energies) drift = std::max(drift, std::abs(e - lin.energies.front()) / lin.energies.front());
  o.require(lin.steps == 10000 && drift <= 1e-10,
            fmt("mu = 0 linear, %ld steps: max rel energy drift %.2e <= 1e-10", lin.steps, drift));

  auto nl = run(ACParams{0.1, 1.0, 1.0, true}, x, 0.5, 1e-3, 10);
  auto rep = check_energy(nl, 1e-8);
  o.require(rep.pass, fmt("mu = 1 nonlinear: max (E + D)/E0 - 1 = %.2e <= 1e-8 over %zu snapshots", rep.max_excess,
                          nl.energies.size()));

  std::mt19937_64 rng(5);
  double worst = 0;
  for (int s = 0; s < 5; ++s) {
    VectorField u = dealias(random_velocity(g, rng));
    const double scale = norm_sq(u) * std::sqrt(gradient_norm_sq(u));
    worst = std::max(worst, std::abs(inner(nonlinear_rhs(u), u)) / scale);
  }
  o.require(worst <= 1e-11, fmt("|<N(u), u>| / (||u||^2 ||grad u||) max %.2e <= 1e-11", worst));
  o.summary = "energy conservation, inequality and neutral nonlinearity";
  return o;
}

// 5. Exact solutions of the limit systems.
Outcome exact_solutions() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  auto g = make_grid(kTwoPi, 32, 4);
  HField w(g, Space::physical);
  for (int iy = 0; iy < 32; ++iy)
    for (int ix = 0; ix < 32; ++ix) w(iy, ix) = std::cos(g->x(ix)) * std::cos(g->x(iy));
  w.transform_in_place();
  NSE2DState s{w, 0.0};
  NSE2DStepper st(g, 1e-2, 1.0);
  for (int i = 0; i < 100; ++i) st.advance(s);
  const HField expect = std::exp(-2.0) * w;
  const double tg = norm(s.omega - expect) / norm(expect);
  o.require(tg <= 1e-6, fmt("Taylor-Green at t = 1: rel error %.2e <= 1e-6", tg));

  auto h = make_grid(kTwoPi, 16, 4);
  double worst = 0;
  for (auto [mx, my] : {std::pair{1, 0}, {2, 0}, {1, 1}, {2, 3}, {4, 1}}) {
    QGState q{HField(h), 0.0};
    q.pi(h->fft_index(my), h->fft_index(mx)) = 1e-3;
    q.pi(h->fft_index(-my), h->fft_index(-mx)) = 1e-3;
    const HField q0 = qg_potential_vorticity(q.pi);
    QGStepper qs(h, 1e-3, QGParams{1.0, -1, false});
    for (int i = 0; i < 1000; ++i) qs.advance(q);
    const double k2 = double(mx * mx + my * my);
    const double rate = k2 * k2 / (1 + k2);
    const HField q1 = qg_potential_vorticity(q.pi);
    const double got = std::abs(q1(h->fft_index(my), h->fft_index(mx)) / q0(h->fft_index(my), h->fft_index(mx)));
    worst = std::max(worst, std::abs(got - std::exp(-rate)) / std::exp(-rate));
  }
  o.require(worst <= 1e-6, fmt("linearized QG per-mode decay at t = 1: max rel error %.2e <= 1e-6", worst));
  const double t = seconds_since(t0);
  o.require(t < 60.0, fmt("wall time %.1f s < 60 s", t));
  o.summary = "Taylor-Green and QG per-mode decay";
  return o;
}

// 6. Half-wave local decay, m = 2.
Outcome half_wave_decay() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const double L = 200.0, side = 2.0, sigma = 1.0;
  const int N = 800;
  auto g = make_grid(L, N, 4, 1.0);
  HField v(g, Space::physical);
  for (int iy = 0; iy < N; ++iy)
    for (int ix = 0; ix < N; ++ix) {
      const double dx = g->x(ix) - L / 2, dy = g->x(iy) - L / 2;
      v(iy, ix) = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
    }
  v.transform_in_place();
  const std::vector<double> eps{0.2, 0.1, 0.05};
  const double T = recurrence_time(*g, side, eps.back(), 2.0);
  std::vector<double> D;
  for (double e : eps) D.push_back(local_decay_functional(v, 2.0, e, T, side));
  auto fit = fit_power_law("D", eps, D);
  const double t = seconds_since(t0);
  o.info(fmt("Gaussian sigma = %g on a %g box (%d^2), K side %g, T = %.4g (recurrence time at eps = %g)", sigma, L, N,
             side, T, eps.back()));
  o.info("D = " + join(D));
  o.require(fit && fit->exponent >= 2.0 - 0.3,
            fmt("fitted exponent %.4f >= 1.7 (residual %.2e)", fit ? fit->exponent : NAN, fit ? fit->residual : NAN));
  o.require(t < 120.0, fmt("wall time %.1f s < 120 s", t));
  o.summary = "half-wave local decay, m = 2";
  return o;
}

// 7. Acoustic decay for beta = 1 and 1.5.
Outcome acoustic_decay() {
  Outcome o;
  for (double beta : {1.0, 1.5}) {
    const auto t0 = std::chrono::steady_clock::now();
    StudyConfig c;
    c.study = "acoustic_decay";
    c.beta = beta;
    c.eps_list = {0.2, 0.1, 0.05, 0.025};
    c.recurrence_policy = "flag";
    auto g = make_study_grid(c);
    c.T = recurrence_time(*g, c.K * c.L_h, c.eps_list.back(), 2 * beta);
    c.dt = c.T / 100;
    StudyResult r = run_study(c);
    const double target = 2 * beta - 1;
    auto fit = fit_of(r, "D");
    o.info(fmt("beta = %g: T = %.4g (recurrence time at eps = %g), dt = %.3g", beta, c.T, c.eps_list.back(), c.dt));
    o.info("  D = " + join(column_values(r, "D")) + ", status " + statuses(r));
    o.require(fit && fit->exponent >= target - 0.3,
              fmt("beta = %g: fitted exponent %.4f >= %.1f (residual %.2e)", beta, fit ? fit->exponent : NAN,
                  target - 0.3, fit ? fit->residual : NAN));
    const double t = seconds_since(t0);
    o.require(t <= 900.0, fmt("beta = %g: wall time %.0f s <= 900 s", beta, t));
  }
  o.summary = "acoustic decay exponents, eps in {0.2, 0.1, 0.05, 0.025}, 64^2 x 16";
  return o;
}

// 8. Convergence to 2D Navier-Stokes, beta = 1.
Outcome beta_ge1_convergence() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::string kind : {"ill", "well"}) {
    StudyConfig c;
    c.study = "convergence_beta_ge1";
    c.beta = 1.0;
    c.eps_list = kHalvings;
    c.ic_kind = kind;
    StudyResult r = run_study(c);
    auto e = column_values(r, "e_L2K");
    o.info(kind + ": e = " + join(e) + ", status " + statuses(r));
    o.require(all_rows_ok(r) && strictly_decreasing(e), kind + "-prepared e(eps) strictly decreasing over 4 halvings");
  }
  const double t = seconds_since(t0);
  o.require(t <= 1200.0, fmt("wall time %.0f s <= 1200 s", t));
  o.summary = "beta = 1 convergence to 2D Navier-Stokes";
  return o;
}

// 9. Convergence to quasi-geostrophy, beta = 1/2.
Outcome beta_half_convergence() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  StudyConfig c;
  c.study = "convergence_beta_half";
  c.beta = 0.5;
  c.eps_list = kHalvings;
  c.ic_kind = "ill";
  StudyResult r = run_study(c);
  auto e = column_values(r, "pressure_error");
  o.info("ill: pressure error = " + join(e) + ", status " + statuses(r));
  o.require(all_rows_ok(r) && strictly_decreasing(e), "ill-prepared pressure error strictly decreasing over 4 halvings");

  StudyConfig k = c;
  k.ic_kind = "well";
  k.mu = 0.0;
  k.nonlinear = false;
  StudyResult rk = run_study(k);
  auto ek = column_values(rk, "pressure_error");
  double worst = 0;
  for (double v : ek) worst = std::max(worst, v);
  o.info("kernel control (mu = 0, linear): pressure error = " + join(ek));
  o.require(all_rows_ok(rk) && worst <= 1e-10, fmt("kernel control max pressure error %.2e <= 1e-10", worst));
  const double t = seconds_since(t0);
  o.require(t <= 1200.0, fmt("wall time %.0f s <= 1200 s", t));
  o.summary = "beta = 1/2 convergence to quasi-geostrophy";
  return o;
}

// 10. RAGE time averages.
Outcome rage_decay() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  StudyConfig c;
  c.study = "rage_decay";
  c.beta = 0.5;
  c.eps_list = kHalvings;
  c.ic_kind = "gaussian";
  c.ic_vertical_band = {1, 1};
  c.chi = "bump";
  c.chi_radius = 0.1;
  auto g = make_study_grid(c);
  c.T = recurrence_time(*g, 2 * c.chi_radius * c.L_h, c.eps_list.back(), 1.0);
  c.dt = c.T / 200;
  StudyResult r = run_study(c);
  o.info(fmt("bump radius %.3g, T = %.4g (recurrence time at eps = %g), dt = %.3g", c.chi_radius * c.L_h, c.T,
             c.eps_list.back(), c.dt));
  auto R = column_values(r, "R");
  o.info("bump: R = " + join(R) + ", status " + statuses(r));
  o.require(all_rows_ok(r) && strictly_decreasing(R), "R(eps/2) < R(eps) for every consecutive pair");

  StudyConfig f = c;
  f.chi = "one";
  f.mu = 0.0;
  f.nonlinear = false;
  StudyResult rf = run_study(f);
  auto Rf = column_values(rf, "R");
  const double hi = *std::max_element(Rf.begin(), Rf.end()), lo = *std::min_element(Rf.begin(), Rf.end());
  const double spread = hi > 0 ? (hi - lo) / hi : 0.0;
  o.info("chi = 1 control (mu = 0, linear): R = " + join(Rf));
  o.require(all_rows_ok(rf) && spread <= 0.05, fmt("chi = 1 control spread %.2e <= 5%%", spread));
  const double t = seconds_since(t0);
  o.require(t <= 600.0, fmt("wall time %.0f s <= 600 s", t));
  o.summary = "RAGE time averages for k != 0 localized data";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{spectral_algebra, eigen_oracle,   kernel_fidelity,
                                                       energy_contract,  exact_solutions, half_wave_decay,
                                                       acoustic_decay,   beta_ge1_convergence,
                                                       beta_half_convergence, rage_decay};
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) {
    const int n = std::atoi(argv[i]);
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion '%s' (expected 1..%zu)\n", argv[i], criteria.size());
      return 2;
    }
    which.push_back(n);
  }
  if (which.empty())
    for (int n = 1; n <= static_cast<int>(criteria.size()); ++n) which.push_back(n);

  bool all = true;
  for (int n : which) {
    Outcome o;
    try {
      o = criteria[n - 1]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("exception: ") + e.what();
    }
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", n, o.summary.c_str());
    for (const auto& d : o.details) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
