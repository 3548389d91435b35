#include "geob/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <vector>

namespace geob {

namespace {

// FFTW planning is not thread safe; execution with the new-array API is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr unsigned kPlanFlags = FFTW_ESTIMATE | FFTW_UNALIGNED;

int horizontal_cutoff_for(int n, double fraction) {
  int k = static_cast<int>(std::floor(fraction * (n / 2) + 1e-12));
  // Quadratic products of retained modes must not alias back into the band.
  if (fraction < 1.0 && 3 * k >= n) k = (n - 1) / 3;
  return k;
}

int vertical_cutoff_for(int n, double fraction) {
  if (fraction >= 1.0) return n - 1;
  int k = static_cast<int>(std::floor(fraction * n + 1e-12));
  // Cosine/sine products alias m -> 2 n - m on the midpoint grid.
  if (3 * k >= 2 * n) k = (2 * n - 1) / 3;
  return std::min(k, n - 1);
}

}  // namespace

Parity parse_parity(const std::string& s) {
  if (s == "even") return Parity::even;
  if (s == "odd") return Parity::odd;
  throw std::invalid_argument("unknown parity '" + s + "'");
}

struct Grid::Plans {
  fftw_plan h_forward = nullptr;
  fftw_plan h_backward = nullptr;
  fftw_plan plane_forward = nullptr;
  fftw_plan plane_backward = nullptr;
  fftw_plan cos_forward = nullptr;   // REDFT10
  fftw_plan cos_backward = nullptr;  // REDFT01
  fftw_plan sin_forward = nullptr;   // RODFT10
  fftw_plan sin_backward = nullptr;  // RODFT01

  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    for (fftw_plan p : {h_forward, h_backward, plane_forward, plane_backward, cos_forward,
                        cos_backward, sin_forward, sin_backward}) {
      if (p) fftw_destroy_plan(p);
    }
  }
};

Grid::Grid(double L_h, int N_h, int N_v, double dealias_fraction)
    : L_h_(L_h), N_h_(N_h), N_v_(N_v), dealias_fraction_(dealias_fraction) {
  if (!(L_h > 0.0) || !std::isfinite(L_h)) throw std::invalid_argument("L_h must be positive");
  if (N_h % 2 != 0) throw std::invalid_argument("N_h must be even");
  if (N_h < 8) throw std::invalid_argument("N_h must be at least 8");
  if (N_v < 4) throw std::invalid_argument("N_v must be at least 4");
  if (!(dealias_fraction > 0.0 && dealias_fraction <= 1.0))
    throw std::invalid_argument("dealias_fraction must lie in (0, 1]");

  cutoff_h_ = horizontal_cutoff_for(N_h, dealias_fraction);
  cutoff_v_ = vertical_cutoff_for(N_v, dealias_fraction);

  plans_ = std::make_unique<Plans>();
  std::vector<cplx> scratch(size());
  auto* c = reinterpret_cast<fftw_complex*>(scratch.data());
  auto* r = reinterpret_cast<double*>(scratch.data());
  const int n2[2] = {N_h, N_h};
  const int np = static_cast<int>(plane_size());
  const int nv[1] = {N_v};
  const int stride_v = 2 * np;

  std::lock_guard<std::mutex> lock(planner_mutex());
  plans_->h_forward = fftw_plan_many_dft(2, n2, N_v, c, nullptr, 1, np, c, nullptr, 1, np,
                                         FFTW_FORWARD, kPlanFlags);
  plans_->h_backward = fftw_plan_many_dft(2, n2, N_v, c, nullptr, 1, np, c, nullptr, 1, np,
                                          FFTW_BACKWARD, kPlanFlags);
  plans_->plane_forward = fftw_plan_dft_2d(N_h, N_h, c, c, FFTW_FORWARD, kPlanFlags);
  plans_->plane_backward = fftw_plan_dft_2d(N_h, N_h, c, c, FFTW_BACKWARD, kPlanFlags);

  // Real and imaginary parts are transformed independently: 2 * N_h^2
  // interleaved transforms of length N_v with stride 2 * N_h^2 doubles.
  const fftw_r2r_kind k_cf = FFTW_REDFT10, k_cb = FFTW_REDFT01;
  const fftw_r2r_kind k_sf = FFTW_RODFT10, k_sb = FFTW_RODFT01;
  plans_->cos_forward =
      fftw_plan_many_r2r(1, nv, stride_v, r, nullptr, stride_v, 1, r, nullptr, stride_v, 1, &k_cf,
                         kPlanFlags);
  plans_->cos_backward =
      fftw_plan_many_r2r(1, nv, stride_v, r, nullptr, stride_v, 1, r, nullptr, stride_v, 1, &k_cb,
                         kPlanFlags);
  plans_->sin_forward =
      fftw_plan_many_r2r(1, nv, stride_v, r, nullptr, stride_v, 1, r, nullptr, stride_v, 1, &k_sf,
                         kPlanFlags);
  plans_->sin_backward =
      fftw_plan_many_r2r(1, nv, stride_v, r, nullptr, stride_v, 1, r, nullptr, stride_v, 1, &k_sb,
                         kPlanFlags);
  for (fftw_plan p : {plans_->h_forward, plans_->h_backward, plans_->plane_forward,
                      plans_->plane_backward, plans_->cos_forward, plans_->cos_backward,
                      plans_->sin_forward, plans_->sin_backward}) {
    if (!p) throw std::runtime_error("FFTW planning failed");
  }
}

Grid::~Grid() = default;

double Grid::wavenumber(int i) const {
  if (i == N_h_ / 2) return 0.0;
  return kTwoPi / L_h_ * mode_number(i);
}

double Grid::wavenumber_sq(int kz, int iy, int ix) const {
  const double a = wavenumber(ix), b = wavenumber(iy), k = vertical_wavenumber(kz);
  return a * a + b * b + k * k;
}

bool Grid::is_retained(int kz, int iy, int ix) const {
  return kz <= cutoff_v_ && std::abs(mode_number(iy)) <= cutoff_h_ &&
         std::abs(mode_number(ix)) <= cutoff_h_;
}

void Grid::to_spectral(std::span<cplx> data, Parity parity) const {
  if (data.size() != size()) throw RepresentationError("buffer size does not match grid");
  auto* c = reinterpret_cast<fftw_complex*>(data.data());
  auto* r = reinterpret_cast<double*>(data.data());
  fftw_execute_dft(plans_->h_forward, c, c);
  const std::size_t np = plane_size();
  const double hnorm = 1.0 / static_cast<double>(np);
  if (parity == Parity::even) {
    fftw_execute_r2r(plans_->cos_forward, r, r);
    for (int kz = 0; kz < N_v_; ++kz) {
      const double s = hnorm / (kz == 0 ? 2.0 * N_v_ : static_cast<double>(N_v_));
      for (std::size_t i = 0; i < np; ++i) data[kz * np + i] *= s;
    }
  } else {
    fftw_execute_r2r(plans_->sin_forward, r, r);
    // Output slot k carries sin(2 pi (k + 1) x3); the sine Nyquist term is dropped.
    const double s = hnorm / N_v_;
    for (int kz = N_v_ - 1; kz >= 1; --kz) {
      for (std::size_t i = 0; i < np; ++i) data[kz * np + i] = data[(kz - 1) * np + i] * s;
    }
    for (std::size_t i = 0; i < np; ++i) data[i] = 0.0;
  }
}

void Grid::to_physical(std::span<cplx> data, Parity parity) const {
  if (data.size() != size()) throw RepresentationError("buffer size does not match grid");
  auto* c = reinterpret_cast<fftw_complex*>(data.data());
  auto* r = reinterpret_cast<double*>(data.data());
  const std::size_t np = plane_size();
  if (parity == Parity::even) {
    for (std::size_t i = np; i < data.size(); ++i) data[i] *= 0.5;
    fftw_execute_r2r(plans_->cos_backward, r, r);
  } else {
    for (int kz = 0; kz + 1 < N_v_; ++kz) {
      for (std::size_t i = 0; i < np; ++i) data[kz * np + i] = 0.5 * data[(kz + 1) * np + i];
    }
    for (std::size_t i = 0; i < np; ++i) data[(N_v_ - 1) * np + i] = 0.0;
    fftw_execute_r2r(plans_->sin_backward, r, r);
  }
  fftw_execute_dft(plans_->h_backward, c, c);
}

void Grid::to_spectral_h(std::span<cplx> data) const {
  if (data.size() != plane_size()) throw RepresentationError("buffer size does not match plane");
  auto* c = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plans_->plane_forward, c, c);
  const double s = 1.0 / static_cast<double>(plane_size());
  for (auto& v : data) v *= s;
}

void Grid::to_physical_h(std::span<cplx> data) const {
  if (data.size() != plane_size()) throw RepresentationError("buffer size does not match plane");
  auto* c = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plans_->plane_backward, c, c);
}

GridPtr make_grid(double L_h, int N_h, int N_v, double dealias_fraction) {
  return std::make_shared<const Grid>(L_h, N_h, N_v, dealias_fraction);
}

}  // namespace geob
