#include "geob/acoustic.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "geob/operators.hpp"
#include "text.hpp"

namespace geob {

namespace {

constexpr cplx I{0.0, 1.0};

struct EigenPair {
  cplx lambda;
  Vec4 v;
};

Vec4 unit(int i) {
  Vec4 v = Vec4::Zero();
  v(i) = 1.0;
  return v;
}

// (p, u1, u2, u3) eigenvector for lambda != +-i from W x = lambda x with p = 1.
Vec4 generic_vector(double xi1, double xi2, double kappa, cplx lambda) {
  const cplx den = lambda * lambda + 1.0;
  Vec4 v;
  v(0) = 1.0;
  v(1) = (lambda * I * xi1 - I * xi2) / den;
  v(2) = (I * xi1 + lambda * I * xi2) / den;
  v(3) = kappa == 0.0 ? cplx{} : -kappa / lambda;
  return v.normalized();
}

Vec4 kernel_vector_for(double xi1, double xi2) {
  Vec4 v(1.0, -I * xi2, I * xi1, 0.0);
  return v / std::sqrt(1.0 + xi1 * xi1 + xi2 * xi2);
}

template <class Fn>
void for_each_mode(const Grid& g, Fn&& fn) {
  const int n = g.N_h();
  for (int kz = 0; kz < g.N_v(); ++kz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) fn(kz, iy, ix, g.index(kz, iy, ix));
}

Vec4 gather(const ACState& x, std::size_t i) {
  return Vec4(x.p.values()[i], x.u[0].values()[i], x.u[1].values()[i], x.u[2].values()[i]);
}

void scatter(ACState& x, std::size_t i, const Vec4& v) {
  x.p.values()[i] = v(0);
  x.u[0].values()[i] = v(1);
  x.u[1].values()[i] = v(2);
  x.u[2].values()[i] = v(3);
}

void require_spectral(const ACState& x, const char* op) {
  geob::require_spectral(x.p, op);
  for (int c = 0; c < 3; ++c) geob::require_spectral(x.u[c], op);
}

ACState zero_like(const ACState& x) {
  return ACState{make_velocity(x.p.grid_ptr()), ScalarField(x.p.grid_ptr(), Parity::even), x.t};
}

void require_weight_range(const HField& w, const char* op) {
  if (w.empty() || w.space() != Space::physical)
    throw RepresentationError(std::string(op) + ": weight must be a physical-space field");
  for (const auto& v : w.values())
    if (!(v.real() >= 0.0 && v.real() <= 1.0) || v.imag() != 0.0)
      throw std::domain_error(std::string(op) + ": weight must take values in [0, 1]");
}

}  // namespace

Mat4 acoustic_block(double xi1, double xi2, double kappa) {
  Mat4 w = Mat4::Zero();
  w(0, 1) = I * xi1;
  w(0, 2) = I * xi2;
  w(0, 3) = kappa;
  w(1, 0) = I * xi1;
  w(1, 2) = -1.0;
  w(2, 0) = I * xi2;
  w(2, 1) = 1.0;
  w(3, 0) = -kappa;
  return w;
}

std::array<cplx, 4> eigenvalues(double xi1, double xi2, double kappa) {
  const double a = xi1 * xi1 + xi2 * xi2, b = kappa * kappa;
  const double s = 1.0 + a + b;
  const double d = std::sqrt((1.0 + a - b) * (1.0 + a - b) + 4.0 * a * b);
  const double hi = 0.5 * (s + d);
  const double lo = 2.0 * b / (s + d);
  const double wh = std::sqrt(hi), wl = std::sqrt(lo);
  return {cplx(0.0, -wh), cplx(0.0, -wl), cplx(0.0, wl), cplx(0.0, wh)};
}

ModeBlock mode_block(double xi1, double xi2, double kappa) {
  ModeBlock mb;
  mb.xi1 = xi1;
  mb.xi2 = xi2;
  mb.kappa = kappa;
  mb.eigenvalues = eigenvalues(xi1, xi2, kappa);
  const double a = xi1 * xi1 + xi2 * xi2;
  const double r = 1.0 / std::sqrt(2.0);

  std::vector<EigenPair> pairs;
  if (a == 0.0) {
    // Horizontal rotation block and (p, u3) block decouple.
    pairs.push_back({cplx(0, -1), Vec4(0.0, r, I * r, 0.0)});
    pairs.push_back({cplx(0, 1), Vec4(0.0, r, -I * r, 0.0)});
    if (kappa == 0.0) {
      pairs.push_back({0.0, unit(0)});
      pairs.push_back({0.0, unit(3)});
    } else {
      const double k = std::abs(kappa);
      const double sg = kappa > 0 ? 1.0 : -1.0;
      pairs.push_back({cplx(0, -k), Vec4(r, 0.0, 0.0, -sg * I * r)});
      pairs.push_back({cplx(0, k), Vec4(r, 0.0, 0.0, sg * I * r)});
    }
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const EigenPair& x, const EigenPair& y) { return x.lambda.imag() < y.lambda.imag(); });
  } else if (kappa == 0.0) {
    pairs.push_back({mb.eigenvalues[0], generic_vector(xi1, xi2, 0.0, mb.eigenvalues[0])});
    pairs.push_back({0.0, kernel_vector_for(xi1, xi2)});
    pairs.push_back({0.0, unit(3)});
    pairs.push_back({mb.eigenvalues[3], generic_vector(xi1, xi2, 0.0, mb.eigenvalues[3])});
  } else {
    for (const cplx& l : mb.eigenvalues) pairs.push_back({l, generic_vector(xi1, xi2, kappa, l)});
  }
  for (int i = 0; i < 4; ++i) mb.eigenvectors.col(i) = pairs[i].v;
  if (kappa == 0.0) mb.kernel_vector = kernel_vector_for(xi1, xi2);
  return mb;
}

ACState apply_W(const ACState& x) {
  require_spectral(x, "apply_W");
  ACState out{VectorField{}, div(x.u), x.t};
  out.u = grad(x.p);
  out.u[0] -= x.u[1];
  out.u[1] += x.u[0];
  return out;
}

ACState kernel_project(const ACState& x) {
  require_spectral(x, "kernel_project");
  const Grid& g = x.p.grid();
  ACState out = zero_like(x);
  const int n = g.N_h();
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const std::size_t i = g.index(0, iy, ix);
      const Vec4 v = kernel_vector_for(g.wavenumber(ix), g.wavenumber(iy));
      const cplx c = v.dot(gather(x, i));  // v^H x
      scatter(out, i, c * v);
    }
  return out;
}

ACState complement_project(const ACState& x) {
  ACState k = kernel_project(x);
  ACState out = x;
  out.p -= k.p;
  out.u -= k.u;
  return out;
}

bool in_truncation(const Grid& g, int kz, int iy, int ix, double M) {
  const double s = kTwoPi / g.L_h();
  const double a = s * g.mode_number(ix), b = s * g.mode_number(iy);
  return std::sqrt(a * a + b * b) + g.vertical_wavenumber(kz) <= M * (1.0 + 1e-14);
}

ScalarField truncate(const ScalarField& f, double M) {
  geob::require_spectral(f, "truncate");
  ScalarField out = f;
  for_each_mode(f.grid(), [&](int kz, int iy, int ix, std::size_t i) {
    if (!in_truncation(f.grid(), kz, iy, ix, M)) out.values()[i] = 0.0;
  });
  return out;
}

ACState truncate(const ACState& x, double M) {
  return ACState{VectorField{{truncate(x.u[0], M), truncate(x.u[1], M), truncate(x.u[2], M)}}, truncate(x.p, M),
                 x.t};
}

ACState propagate(const ACState& x, double s) {
  require_spectral(x, "propagate");
  const Grid& g = x.p.grid();
  ACState out = zero_like(x);
  for_each_mode(g, [&](int kz, int iy, int ix, std::size_t i) {
    const Vec4 in = gather(x, i);
    if (in.isZero(0.0)) return;
    const ModeBlock mb = mode_block(g.wavenumber(ix), g.wavenumber(iy), g.vertical_wavenumber(kz));
    Vec4 c = mb.eigenvectors.adjoint() * in;
    for (int j = 0; j < 4; ++j) c(j) *= std::exp(-mb.eigenvalues[j] * s);
    scatter(out, i, mb.eigenvectors * c);
  });
  return out;
}

ScalarField half_wave(const ScalarField& v, double t) {
  geob::require_spectral(v, "half_wave");
  const Grid& g = v.grid();
  ScalarField out = v;
  for_each_mode(g, [&](int kz, int iy, int ix, std::size_t i) {
    out.values()[i] *= std::exp(I * (std::sqrt(g.wavenumber_sq(kz, iy, ix)) * t));
  });
  return out;
}

HField half_wave(const HField& v, double t) {
  if (v.empty() || v.space() != Space::spectral)
    throw RepresentationError("half_wave: field must be in coefficient space");
  const Grid& g = v.grid();
  HField out = v;
  const int n = g.N_h();
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) out(iy, ix) *= std::exp(I * (std::sqrt(g.wavenumber_sq(0, iy, ix)) * t));
  return out;
}

HField box_indicator(const GridPtr& g, double side) {
  HField w(g, Space::physical);
  const double c = 0.5 * g->L_h(), h = 0.5 * side * (1.0 + 1e-12);
  for (int iy = 0; iy < g->N_h(); ++iy)
    for (int ix = 0; ix < g->N_h(); ++ix)
      w(iy, ix) = (std::abs(g->x(ix) - c) <= h && std::abs(g->x(iy) - c) <= h) ? 1.0 : 0.0;
  return w;
}

HField bump(const GridPtr& g, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("bump: radius must be positive");
  HField w(g, Space::physical);
  const double c = 0.5 * g->L_h();
  for (int iy = 0; iy < g->N_h(); ++iy)
    for (int ix = 0; ix < g->N_h(); ++ix) {
      const double dx = g->x(ix) - c, dy = g->x(iy) - c;
      const double s2 = (dx * dx + dy * dy) / (radius * radius);
      w(iy, ix) = s2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s2)) : 0.0;
    }
  return w;
}

HField constant_weight(const GridPtr& g, double value) {
  HField w(g, Space::physical);
  for (auto& v : w.values()) v = value;
  return w;
}

double weighted_norm_sq(const ScalarField& f, const HField& w) {
  if (w.space() != Space::physical) throw RepresentationError("weighted_norm_sq: weight must be physical");
  const ScalarField phys = to_physical(f);
  const Grid& g = f.grid();
  const std::size_t np = g.plane_size();
  double sum = 0.0;
  for (int j = 0; j < g.N_v(); ++j)
    for (std::size_t q = 0; q < np; ++q) sum += w.values()[q].real() * std::norm(phys.values()[j * np + q]);
  return sum * g.dx() * g.dx() / g.N_v();
}

double weighted_norm_sq(const HField& f, const HField& w) {
  if (w.space() != Space::physical) throw RepresentationError("weighted_norm_sq: weight must be physical");
  const HField phys = to_physical(f);
  double sum = 0.0;
  for (std::size_t q = 0; q < phys.values().size(); ++q)
    sum += w.values()[q].real() * std::norm(phys.values()[q]);
  return sum * f.grid().dx() * f.grid().dx();
}

double recurrence_time(const Grid& g, double K_side, double eps, double m) {
  return (0.5 * g.L_h() - 0.5 * std::sqrt(2.0) * K_side) * std::pow(eps, m);
}

namespace {

template <class Field>
double local_decay_impl(const Field& v, double m, double eps, double T, double K_side, int samples) {
  const Grid& g = v.grid();
  if (!(eps > 0.0)) throw std::invalid_argument("local_decay_functional: eps must be positive");
  if (!(T > 0.0)) throw std::invalid_argument("local_decay_functional: T must be positive");
  if (!(K_side > 0.0)) throw std::invalid_argument("local_decay_functional: K side must be positive");
  const bool full = K_side >= g.L_h();
  if (!full) {
    if (K_side > 0.5 * g.L_h() * (1.0 + 1e-12))
      throw std::invalid_argument("local_decay_functional: K side must not exceed L_h / 2");
    const double t_rec = recurrence_time(g, K_side, eps, m);
    if (T > t_rec)
      throw RecurrenceViolation("local_decay_functional: T = " + detail::num(T) +
                                " exceeds the recurrence time " + detail::num(t_rec) + " at eps = " +
                                detail::num(eps));
  }
  const HField w = full ? constant_weight(v.grid_ptr()) : box_indicator(v.grid_ptr(), K_side);
  const double scale = std::pow(eps, -m);
  const double tau = T * scale;
  const int n = samples > 0 ? samples : std::max(8, static_cast<int>(std::ceil(tau / g.dx())));
  double sum = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double val = weighted_norm_sq(half_wave(v, tau * j / n), w);
    sum += (j == 0 || j == n) ? 0.5 * val : val;
  }
  return sum * T / n;
}

}  // namespace

double local_decay_functional(const HField& v, double m, double eps, double T, double K_side, int samples) {
  return local_decay_impl(v, m, eps, T, K_side, samples);
}

double local_decay_functional(const ScalarField& v, double m, double eps, double T, double K_side, int samples) {
  return local_decay_impl(v, m, eps, T, K_side, samples);
}

namespace {

double localized_norm_sq(const ACState& w, const HField& chi) {
  double sum = weighted_norm_sq(w.p, chi);
  for (int c = 0; c < 3; ++c) sum += weighted_norm_sq(w.u[c], chi);
  return sum;
}

}  // namespace

double rage_functional(const std::vector<ACState>& states, const std::vector<double>& times, const HField& chi,
                       double M) {
  require_weight_range(chi, "rage_functional");
  if (states.empty() || states.size() != times.size())
    throw std::invalid_argument("rage_functional: need one time per state");
  std::vector<double> vals;
  vals.reserve(states.size());
  for (const auto& s : states) vals.push_back(localized_norm_sq(truncate(complement_project(s), M), chi));
  if (vals.size() == 1) return vals[0];
  double sum = 0.0;
  for (std::size_t i = 1; i < vals.size(); ++i) sum += 0.5 * (vals[i] + vals[i - 1]) * (times[i] - times[i - 1]);
  return sum / (times.back() - times.front());
}

double rage_functional(const ACState& X, const HField& chi, double eps, double T, double M, int samples) {
  require_weight_range(chi, "rage_functional");
  if (!(eps > 0.0) || !(T > 0.0) || samples < 1) throw std::invalid_argument("rage_functional: bad arguments");
  const ACState w0 = truncate(complement_project(X), M);
  double sum = 0.0;
  for (int j = 0; j <= samples; ++j) {
    const double t = T * j / samples;
    const double val = localized_norm_sq(propagate(w0, t / eps), chi);
    sum += (j == 0 || j == samples) ? 0.5 * val : val;
  }
  return sum / samples;
}

void write_mode_table(std::ostream& os, const Grid& g, double M) {
  os << "kx,ky,kz,re_l1,im_l1,re_l2,im_l2,re_l3,im_l3,re_l4,im_l4,has_kernel\n";
  const int n = g.N_h();
  for (int kz = 0; kz < g.N_v(); ++kz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        if (!in_truncation(g, kz, iy, ix, M)) continue;
        const auto l = eigenvalues(g.wavenumber(ix), g.wavenumber(iy), g.vertical_wavenumber(kz));
        os << g.mode_number(ix) << ',' << g.mode_number(iy) << ',' << kz;
        for (const cplx& v : l) os << ',' << detail::num(v.real()) << ',' << detail::num(v.imag());
        os << ',' << (kz == 0 ? 1 : 0) << '\n';
      }
}

}  // namespace geob
