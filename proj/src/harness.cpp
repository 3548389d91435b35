#include "geob/harness.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "geob/acoustic.hpp"
#include "geob/limit.hpp"
#include "geob/operators.hpp"
#include "text.hpp"

#ifndef GEOB_VERSION
#define GEOB_VERSION "unknown"
#endif

namespace geob {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(out))
    throw ConfigError(key, "expected a number, got '" + v + "'");
  return out;
}

long parse_long(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  long out = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw ConfigError(key, "expected an integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw ConfigError(key, "expected a boolean, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  if (out.empty()) throw ConfigError(key, "empty list");
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + detail::num(v[i]);
  return s;
}

bool is_half(double beta) { return std::abs(beta - 0.5) <= 1e-12; }

const std::vector<std::string>& study_names() {
  static const std::vector<std::string> names{"convergence_beta_ge1", "convergence_beta_half",
                                              "acoustic_decay", "rage_decay"};
  return names;
}

// Every configuration key with its effective value.
std::vector<std::pair<std::string, std::string>> config_entries(const StudyConfig& c) {
  return {{"study", c.study},
          {"L_h", detail::num(c.L_h)},
          {"N_h", std::to_string(c.N_h)},
          {"N_v", std::to_string(c.N_v)},
          {"dealias_fraction", detail::num(c.dealias_fraction)},
          {"eps_list", join(c.eps_list)},
          {"beta", detail::num(c.beta)},
          {"mu", detail::num(c.mu)},
          {"nonlinear", c.nonlinear ? "1" : "0"},
          {"T", detail::num(c.T)},
          {"dt", detail::num(c.dt)},
          {"snap_every", std::to_string(c.snap_every)},
          {"cfl", detail::num(c.cfl)},
          {"strict_cfl", c.strict_cfl ? "1" : "0"},
          {"energy_tol", detail::num(c.energy_tol)},
          {"ic_kind", c.ic_kind},
          {"ic_seed", std::to_string(c.ic_seed)},
          {"ic_spectral_slope", detail::num(c.ic_spectral_slope)},
          {"ic_band", join(c.ic_band)},
          {"ic_vertical_band", join(c.ic_vertical_band)},
          {"ic_amplitude", detail::num(c.ic_amplitude)},
          {"ic_width", detail::num(c.ic_width)},
          {"K", detail::num(c.K)},
          {"M", detail::num(c.M)},
          {"chi", c.chi},
          {"chi_radius", detail::num(c.chi_radius)},
          {"qg_jacobian_sign", std::to_string(c.qg_jacobian_sign)},
          {"recurrence_policy", c.recurrence_policy},
          {"output_dir", c.output_dir}};
}

}  // namespace

// ---------------------------------------------------------------- config

std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("", "line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("", "line " + std::to_string(lineno) + ": missing key");
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

void set_config_value(StudyConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  using Setter = std::function<void()>;
  const std::map<std::string, Setter> setters{
      {"study", [&] { c.study = v; }},
      {"L_h", [&] { c.L_h = parse_double(key, v); }},
      {"N_h", [&] { c.N_h = static_cast<int>(parse_long(key, v)); }},
      {"N_v", [&] { c.N_v = static_cast<int>(parse_long(key, v)); }},
      {"dealias_fraction", [&] { c.dealias_fraction = parse_double(key, v); }},
      {"eps_list", [&] { c.eps_list = parse_list(key, v); }},
      {"beta", [&] { c.beta = parse_double(key, v); }},
      {"mu", [&] { c.mu = parse_double(key, v); }},
      {"nonlinear", [&] { c.nonlinear = parse_bool(key, v); }},
      {"T", [&] { c.T = parse_double(key, v); }},
      {"dt", [&] { c.dt = parse_double(key, v); }},
      {"snap_every", [&] { c.snap_every = parse_long(key, v); }},
      {"cfl", [&] { c.cfl = parse_double(key, v); }},
      {"strict_cfl", [&] { c.strict_cfl = parse_bool(key, v); }},
      {"energy_tol", [&] { c.energy_tol = parse_double(key, v); }},
      {"ic_kind", [&] { c.ic_kind = v; }},
      {"ic_seed", [&] {
         const long s = parse_long(key, v);
         if (s < 0) throw ConfigError(key, "seed must be non-negative");
         c.ic_seed = static_cast<unsigned long>(s);
       }},
      {"ic_spectral_slope", [&] { c.ic_spectral_slope = parse_double(key, v); }},
      {"ic_band", [&] { c.ic_band = parse_list(key, v); }},
      {"ic_vertical_band", [&] { c.ic_vertical_band = parse_list(key, v); }},
      {"ic_amplitude", [&] { c.ic_amplitude = parse_double(key, v); }},
      {"ic_width", [&] { c.ic_width = parse_double(key, v); }},
      {"K", [&] { c.K = parse_double(key, v); }},
      {"M", [&] { c.M = parse_double(key, v); }},
      {"chi", [&] { c.chi = v; }},
      {"chi_radius", [&] { c.chi_radius = parse_double(key, v); }},
      {"qg_jacobian_sign", [&] { c.qg_jacobian_sign = static_cast<int>(parse_long(key, v)); }},
      {"recurrence_policy", [&] { c.recurrence_policy = v; }},
      {"output_dir", [&] { c.output_dir = v; }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError(key, "unknown key");
  it->second();
  c.echo.emplace_back(key, v);
}

StudyConfig make_config(const std::vector<std::pair<std::string, std::string>>& entries) {
  StudyConfig c;
  for (const auto& [k, v] : entries) set_config_value(c, k, v);
  validate(c);
  return c;
}

void validate(const StudyConfig& c) {
  if (std::find(study_names().begin(), study_names().end(), c.study) == study_names().end())
    throw ConfigError("study", "unknown study '" + c.study + "'");
  if (c.eps_list.empty()) throw ConfigError("eps_list", "empty list");
  for (std::size_t i = 0; i < c.eps_list.size(); ++i) {
    if (!(c.eps_list[i] > 0.0)) throw ConfigError("eps_list", "values must be positive");
    if (i > 0 && !(c.eps_list[i] < c.eps_list[i - 1]))
      throw ConfigError("eps_list", "values must be strictly decreasing");
  }
  if (!(c.L_h > 0.0)) throw ConfigError("L_h", "must be positive");
  if (c.N_h < 8 || c.N_h % 2 != 0) throw ConfigError("N_h", "must be even and at least 8");
  if (c.N_v < 4) throw ConfigError("N_v", "must be at least 4");
  if (!(c.dealias_fraction > 0.0 && c.dealias_fraction <= 1.0))
    throw ConfigError("dealias_fraction", "must lie in (0, 1]");
  if (!(c.beta > 0.0)) throw ConfigError("beta", "must be positive");
  if (!(c.mu >= 0.0)) throw ConfigError("mu", "must be non-negative");
  if (!(c.T > 0.0)) throw ConfigError("T", "must be positive");
  if (!(c.dt > 0.0)) throw ConfigError("dt", "must be positive");
  if (c.snap_every < 0) throw ConfigError("snap_every", "must be non-negative");
  if (!(c.cfl > 0.0)) throw ConfigError("cfl", "must be positive");
  if (!(c.energy_tol >= 0.0)) throw ConfigError("energy_tol", "must be non-negative");
  if (c.ic_kind != "well" && c.ic_kind != "ill" && c.ic_kind != "gaussian")
    throw ConfigError("ic_kind", "expected well, ill or gaussian");
  for (const auto* band : {&c.ic_band, &c.ic_vertical_band}) {
    const char* key = band == &c.ic_band ? "ic_band" : "ic_vertical_band";
    if (band->size() != 2) throw ConfigError(key, "expected 'low,high'");
    if (!((*band)[0] >= 0.0 && (*band)[0] <= (*band)[1])) throw ConfigError(key, "need 0 <= low <= high");
  }
  if (!(c.ic_amplitude > 0.0)) throw ConfigError("ic_amplitude", "must be positive");
  if (!(c.ic_width > 0.0)) throw ConfigError("ic_width", "must be positive");
  if (!(c.K > 0.0 && c.K <= 0.5)) throw ConfigError("K", "side fraction must lie in (0, 1/2]");
  if (!(c.M >= 0.0)) throw ConfigError("M", "must be non-negative");
  if (c.chi != "bump" && c.chi != "one") throw ConfigError("chi", "expected bump or one");
  if (!(c.chi_radius > 0.0 && c.chi_radius <= 0.5)) throw ConfigError("chi_radius", "must lie in (0, 1/2]");
  if (c.qg_jacobian_sign != 1 && c.qg_jacobian_sign != -1)
    throw ConfigError("qg_jacobian_sign", "must be 1 or -1");
  if (c.recurrence_policy != "flag" && c.recurrence_policy != "trim" && c.recurrence_policy != "enlarge")
    throw ConfigError("recurrence_policy", "expected flag, trim or enlarge");
  if (c.output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
}

GridPtr make_study_grid(const StudyConfig& c) {
  try {
    return make_grid(c.L_h, c.N_h, c.N_v, c.dealias_fraction);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("grid", e.what());
  }
}

// ---------------------------------------------------------- initial data

namespace {

bool in_band(const StudyConfig& c, const Grid& g, int kz, int iy, int ix) {
  if (!g.is_retained(kz, iy, ix)) return false;
  const double mx = g.mode_number(ix), my = g.mode_number(iy);
  const double mh = std::sqrt(mx * mx + my * my);
  return mh >= c.ic_band[0] && mh <= c.ic_band[1] && kz >= c.ic_vertical_band[0] && kz <= c.ic_vertical_band[1];
}

ScalarField band_noise(const StudyConfig& c, const GridPtr& g, Parity parity, unsigned stream) {
  std::seed_seq seq{static_cast<unsigned>(c.ic_seed & 0xffffffffu), static_cast<unsigned>(c.ic_seed >> 32), stream};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;
  ScalarField f(g, parity, Space::physical);
  for (auto& v : f.values()) v = normal(rng);
  f.transform_in_place();
  const int n = g->N_h();
  for (int kz = 0; kz < g->N_v(); ++kz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        if (!in_band(c, *g, kz, iy, ix)) {
          f(kz, iy, ix) = 0.0;
          continue;
        }
        const double mx = g->mode_number(ix), my = g->mode_number(iy);
        const double m = std::max(1.0, std::sqrt(mx * mx + my * my + double(kz) * kz));
        f(kz, iy, ix) *= std::pow(m, 0.5 * c.ic_spectral_slope);
      }
  return f;
}

VectorField band_velocity(const StudyConfig& c, const GridPtr& g, unsigned stream) {
  return VectorField{{band_noise(c, g, Parity::even, stream), band_noise(c, g, Parity::even, stream + 1),
                      band_noise(c, g, Parity::odd, stream + 2)}};
}

double rms(double norm_sq_value, const Grid& g) { return std::sqrt(norm_sq_value / g.volume()); }

template <class F>
void normalize(F& f, double amplitude, const Grid& g, const char* what) {
  const double r = rms(norm_sq(f), g);
  if (!(r > 0.0)) throw ConfigError("ic_band", std::string("band leaves the ") + what + " empty");
  f *= amplitude / r;
}

ACState gaussian_data(const StudyConfig& c, const GridPtr& g) {
  ACState s = make_state(g);
  ScalarField p(g, Parity::even, Space::physical);
  const double L = g->L_h(), mid = 0.5 * L, w = c.ic_width;
  const int k = static_cast<int>(c.ic_vertical_band[0]);
  const int n = g->N_h();
  const auto wrap = [L](double d) { return d - L * std::round(d / L); };
  for (int j = 0; j < g->N_v(); ++j) {
    const double vert = std::cos(kTwoPi * k * g->x3(j));
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const double dx = wrap(g->x(ix) - mid), dy = wrap(g->x(iy) - mid);
        p(j, iy, ix) = c.ic_amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * w * w)) * vert;
      }
  }
  p.transform_in_place();
  dealias_in_place(p);
  s.p = p;
  return s;
}

}  // namespace

ACState gen_initial_data(const StudyConfig& c, const GridPtr& grid) {
  if (c.ic_kind == "gaussian") return gaussian_data(c, grid);
  const Grid& g = *grid;
  bool any = false;
  for (int kz = 0; kz < g.N_v() && !any; ++kz)
    for (int iy = 0; iy < g.N_h() && !any; ++iy)
      for (int ix = 0; ix < g.N_h() && !any; ++ix) any = in_band(c, g, kz, iy, ix);
  if (!any) throw ConfigError("ic_band", "no retained mode lies in the band");

  ACState s = make_state(grid);
  if (c.ic_kind == "ill") {
    VectorField sol = leray_P(band_velocity(c, grid, 1));
    VectorField pot = leray_Q(band_velocity(c, grid, 4));
    ScalarField p = band_noise(c, grid, Parity::even, 7);
    normalize(sol, c.ic_amplitude, g, "solenoidal part");
    normalize(pot, c.ic_amplitude, g, "gradient part");
    normalize(p, c.ic_amplitude, g, "pressure");
    s.u = sol + pot;
    s.p = p;
    return s;
  }
  if (is_half(c.beta)) {
    ACState raw = make_state(grid);
    raw.u = band_velocity(c, grid, 1);
    raw.p = band_noise(c, grid, Parity::even, 7);
    s = kernel_project(raw);
    const double r = rms(norm_sq(s.u), g);
    if (!(r > 0.0))
      throw ConfigError("ic_vertical_band", "balanced data needs vertical mode 0 and horizontal content");
    s.u *= c.ic_amplitude / r;
    s.p *= c.ic_amplitude / r;
    s.t = 0.0;
    return s;
  }
  VectorField sol = leray_P(band_velocity(c, grid, 1));
  normalize(sol, c.ic_amplitude, g, "solenoidal part");
  s.u = sol;
  return s;
}

// ------------------------------------------------------------------ fits

std::optional<Fit> fit_power_law(const std::string& metric, const std::vector<double>& eps,
                                 const std::vector<double>& y) {
  if (eps.size() != y.size()) throw std::invalid_argument("fit_power_law: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < eps.size(); ++i)
    if (eps[i] > 0.0 && y[i] > 0.0 && std::isfinite(y[i])) {
      lx.push_back(std::log(eps[i]));
      ly.push_back(std::log(y[i]));
    }
  const std::size_t n = lx.size();
  if (n < 3) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) return std::nullopt;
  Fit f;
  f.metric = metric;
  f.exponent = sxy / sxx;
  f.intercept = my - f.exponent * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - (f.intercept + f.exponent * lx[i]);
    ss += r * r;
  }
  f.residual = std::sqrt(ss / n);
  f.points = static_cast<int>(n);
  return f;
}

bool StudyResult::aborted() const {
  return std::any_of(rows.begin(), rows.end(), [](const StudyRow& r) { return r.status == "aborted"; });
}

// --------------------------------------------------------------- studies

namespace {

double trapezoid(const std::vector<double>& t, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) s += 0.5 * (t[i] - t[i - 1]) * (v[i] + v[i - 1]);
  return s;
}

long step_count(const StudyConfig& c) { return std::max(1L, static_cast<long>(std::ceil(c.T / c.dt - 1e-9))); }

long snap_interval(const StudyConfig& c) {
  if (c.snap_every > 0) return c.snap_every;
  return std::max(1L, step_count(c) / 50);
}

// Step indices at which run() records snapshots.
std::vector<long> snapshot_steps(const StudyConfig& c) {
  const long n = step_count(c), every = snap_interval(c);
  std::vector<long> out{0};
  for (long k = 1; k <= n; ++k)
    if (k % every == 0 || k == n) out.push_back(k);
  return out;
}

ACParams ac_params(const StudyConfig& c, double eps) {
  ACParams p;
  p.eps = eps;
  p.beta = c.beta;
  p.mu = c.mu;
  p.nonlinear = c.nonlinear;
  p.cfl = c.cfl;
  p.strict_cfl = c.strict_cfl;
  return p;
}

double box_norm_sq(const VectorField& u, const HField& w) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += weighted_norm_sq(u[i], w);
  return s;
}

int thread_count(const RunControl& rc, std::size_t rows) {
  if (rc.serial) return 1;
  int n = rc.threads;
  if (n <= 0) {
    if (const char* env = std::getenv("GEOB_THREADS")) n = std::atoi(env);
    if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
  return std::max(1, std::min(n, static_cast<int>(rows)));
}

// Result of one eps row before it is merged into the study.
struct RowOut {
  std::vector<double> values;
  std::string status = "ok";
  std::string message;
  std::map<std::string, std::vector<double>> series;
};

// Runs job(i) for each row, in parallel when allowed; rows are merged by index.
std::vector<RowOut> run_rows(std::size_t count, const RunControl& rc, const std::function<RowOut(std::size_t)>& job,
                             int& threads_used) {
  std::vector<RowOut> out(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < count;) {
      try {
        out[i] = job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  threads_used = thread_count(rc, count);
  if (threads_used <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads_used; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

// One AC run with a per-snapshot observer; fills status and the energy verdict.
RowOut guarded_run(const StudyConfig& c, const ACParams& p, const ACState& ic, const SnapshotObserver& obs,
                   const std::function<void(RowOut&, const Trajectory&)>& finish) {
  RowOut row;
  try {
    RunOptions o;
    o.snap_every = snap_interval(c);
    o.keep_snapshots = false;
    o.observer = obs;
    Trajectory traj = run(p, ic, c.T, c.dt, o);
    const EnergyReport er = check_energy(traj, c.energy_tol);
    finish(row, traj);
    row.values.push_back(er.max_excess);
    row.series["time"] = traj.times;
    row.series["energy"] = traj.energies;
    if (!er.pass) {
      row.status = "energy_fail";
      row.message = "energy inequality violated at " + std::to_string(er.flagged.size()) + " snapshots";
    }
    if (traj.cfl_violations > 0)
      row.message += (row.message.empty() ? "" : "; ") + std::string("CFL violated in ") +
                     std::to_string(traj.cfl_violations) + " steps";
  } catch (const NumericalAbort& e) {
    row.status = "aborted";
    row.message = std::string(e.what()) + " (step " + std::to_string(e.step()) + ")";
  }
  return row;
}

StudyResult assemble(const StudyConfig& c, const std::string& study, std::vector<std::string> columns,
                     std::vector<RowOut>& rows, int threads) {
  StudyResult r;
  r.study = study;
  r.columns = std::move(columns);
  r.columns.push_back("energy_excess");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    StudyRow row;
    row.eps = c.eps_list[i];
    row.values = rows[i].values;
    row.values.resize(r.columns.size(), kNaN);
    row.status = rows[i].status;
    row.message = rows[i].message;
    r.rows.push_back(row);
    for (auto& [name, s] : rows[i].series) {
      auto& dst = r.series[name];
      dst.resize(rows.size());
      dst[i] = std::move(s);
    }
  }
  for (const auto& [k, v] : config_entries(c)) r.provenance["config." + k] = v;
  r.provenance["code_version"] = GEOB_VERSION;
  r.provenance["ic_seed"] = std::to_string(c.ic_seed);
  r.provenance["threads"] = std::to_string(threads);
  r.provenance["steps"] = std::to_string(step_count(c));
  r.provenance["dt_effective"] = detail::num(c.T / step_count(c));
  r.provenance["snap_every"] = std::to_string(snap_interval(c));
  return r;
}

std::size_t column(const StudyResult& r, const std::string& name) {
  const auto it = std::find(r.columns.begin(), r.columns.end(), name);
  if (it == r.columns.end()) throw std::logic_error("missing column " + name);
  return static_cast<std::size_t>(it - r.columns.begin());
}

// Valid (eps, value) pairs of a column.
std::pair<std::vector<double>, std::vector<double>> valid_points(const StudyResult& r, const std::string& name,
                                                                 bool include_flagged = false) {
  const std::size_t j = column(r, name);
  std::vector<double> e, y;
  for (const auto& row : r.rows)
    if ((row.valid() || (include_flagged && row.status == "recurrence")) && std::isfinite(row.values[j])) {
      e.push_back(row.eps);
      y.push_back(row.values[j]);
    }
  return {e, y};
}

void add_fit(StudyResult& r, const std::string& name, const std::string& label = {}, bool include_flagged = false) {
  auto [e, y] = valid_points(r, name, include_flagged);
  if (auto f = fit_power_law(label.empty() ? name : label, e, y)) {
    r.fits.push_back(*f);
  } else {
    r.notes.push_back("no fit for " + (label.empty() ? name : label) + ": " + std::to_string(e.size()) +
                      " valid points (3 required)");
  }
}

bool strictly_decreasing(const std::vector<double>& y) {
  for (std::size_t i = 1; i < y.size(); ++i)
    if (!(y[i] < y[i - 1])) return false;
  return true;
}

// Monotonicity verdicts on a column over the valid rows.
void trend_verdicts(StudyResult& r, const std::string& name) {
  auto [e, y] = valid_points(r, name);
  r.verdicts[name + ".valid_rows"] = std::to_string(y.size());
  r.verdicts[name + ".strictly_decreasing"] = y.size() >= 2 && strictly_decreasing(y) ? "yes" : "no";
  std::string ratios;
  for (std::size_t i = 1; i < y.size(); ++i) ratios += (i > 1 ? "," : "") + detail::num(y[i] / y[i - 1]);
  r.verdicts[name + ".ratios"] = ratios;
  // Largest eps from which the metric keeps decreasing to the end of the list.
  std::string star = "none";
  if (y.size() >= 2) {
    std::size_t k = y.size() - 1;
    while (k > 0 && y[k] < y[k - 1]) --k;
    if (k < y.size() - 1) star = detail::num(e[k]);
  }
  r.verdicts[name + ".eps_star"] = star;
}

}  // namespace

StudyResult study_convergence_beta_ge1(const StudyConfig& c, const RunControl& rc) {
  validate(c);
  if (!(c.beta >= 1.0)) throw ConfigError("beta", "convergence_beta_ge1 requires beta >= 1");
  const GridPtr g = make_study_grid(c);
  const ACState ic = gen_initial_data(c, g);
  const HField K = box_indicator(g, c.K * c.L_h);

  // Reference 2D flow from the vertically averaged horizontal velocity.
  const std::vector<long> steps = snapshot_steps(c);
  const double dt = c.T / step_count(c);
  std::vector<VectorField> ref;
  {
    NSE2DState s{vorticity_2d(vertical_average(ic.u[0]), vertical_average(ic.u[1])), 0.0};
    NSE2DStepper stepper(g, dt, c.mu, c.cfl, c.nonlinear);
    long k = 0;
    for (long target : steps) {
      for (; k < target; ++k) stepper.advance(s);
      const auto v = nse2d_velocity(s.omega);
      VectorField u = make_velocity(g);
      u[0] = lift(v[0]);
      u[1] = lift(v[1]);
      ref.push_back(u);
    }
  }

  int threads = 1;
  auto rows = run_rows(c.eps_list.size(), rc, [&](std::size_t i) {
    const std::size_t ns = ref.size();
    std::vector<double> err(ns), sol(ns), acoustic(ns), pn(ns);
    auto obs = [&](const ACState& s, std::size_t j) {
      const HelmholtzParts parts = leray_decompose(s.u);
      const VectorField gradpart = s.u - parts.solenoidal;
      err[j] = box_norm_sq(s.u - ref[j], K);
      sol[j] = box_norm_sq(parts.solenoidal - ref[j], K);
      acoustic[j] = box_norm_sq(gradpart, K);
      pn[j] = norm(s.p);
    };
    return guarded_run(c, ac_params(c, c.eps_list[i]), ic, obs, [&](RowOut& row, const Trajectory& tr) {
      row.values = {std::sqrt(trapezoid(tr.times, err)), std::sqrt(trapezoid(tr.times, sol)),
                    std::sqrt(trapezoid(tr.times, acoustic))};
      row.series["pressure_norm"] = pn;
    });
  }, threads);

  StudyResult r = assemble(c, "convergence_beta_ge1", {"e_L2K", "e_solenoidal_L2K", "acoustic_L2K"}, rows, threads);
  add_fit(r, "e_L2K");
  trend_verdicts(r, "e_L2K");
  return r;
}

StudyResult study_convergence_beta_half(const StudyConfig& c, const RunControl& rc) {
  validate(c);
  if (!is_half(c.beta)) throw ConfigError("beta", "convergence_beta_half requires beta = 1/2");
  const GridPtr g = make_study_grid(c);
  const ACState ic = gen_initial_data(c, g);
  const HField K = box_indicator(g, c.K * c.L_h);

  const std::vector<long> steps = snapshot_steps(c);
  const double dt = c.T / step_count(c);
  std::vector<HField> ref_pi;
  std::vector<VectorField> ref_u;
  {
    QGParams qp;
    qp.nu = c.mu;
    qp.jacobian_sign = c.qg_jacobian_sign;
    qp.nonlinear = c.nonlinear;
    QGState s{vertical_average(kernel_project(ic).p), 0.0};
    QGStepper stepper(g, dt, qp);
    long k = 0;
    for (long target : steps) {
      for (; k < target; ++k) stepper.advance(s);
      ref_pi.push_back(s.pi);
      ref_u.push_back(geostrophic_velocity(s.pi));
    }
  }

  int threads = 1;
  auto rows = run_rows(c.eps_list.size(), rc, [&](std::size_t i) {
    const std::size_t ns = ref_pi.size();
    std::vector<double> perr(ns), uerr(ns), pn(ns);
    auto obs = [&](const ACState& s, std::size_t j) {
      perr[j] = weighted_norm_sq(vertical_average(s.p) - ref_pi[j], K);
      uerr[j] = box_norm_sq(s.u - ref_u[j], K);
      pn[j] = norm(s.p);
    };
    return guarded_run(c, ac_params(c, c.eps_list[i]), ic, obs, [&](RowOut& row, const Trajectory& tr) {
      row.values = {std::sqrt(trapezoid(tr.times, perr)), std::sqrt(trapezoid(tr.times, uerr))};
      row.series["pressure_norm"] = pn;
    });
  }, threads);

  StudyResult r = assemble(c, "convergence_beta_half", {"pressure_error", "velocity_error"}, rows, threads);
  add_fit(r, "pressure_error");
  add_fit(r, "velocity_error");
  trend_verdicts(r, "pressure_error");
  trend_verdicts(r, "velocity_error");
  double pmax = 0.0, umax = 0.0;
  for (const auto& row : r.rows)
    if (row.valid()) {
      pmax = std::max(pmax, row.values[column(r, "pressure_error")]);
      umax = std::max(umax, row.values[column(r, "velocity_error")]);
    }
  r.verdicts["max_pressure_error"] = detail::num(pmax);
  r.verdicts["max_velocity_error"] = detail::num(umax);
  return r;
}

StudyResult study_acoustic_decay(const StudyConfig& cfg, const RunControl& rc) {
  validate(cfg);
  if (!(cfg.beta > 0.5)) throw ConfigError("beta", "acoustic_decay requires beta > 1/2");
  StudyConfig c = cfg;
  const double m = 2.0 * c.beta;
  std::vector<std::string> notes;
  if (c.recurrence_policy == "enlarge") {
    const double needed = 2.0 * c.T / ((1.0 - std::sqrt(2.0) * c.K) * std::pow(c.eps_list.back(), m));
    if (needed > c.L_h) {
      notes.push_back("L_h enlarged from " + detail::num(c.L_h) + " to " + detail::num(needed) +
                      " to satisfy the recurrence guard");
      c.L_h = needed;
    }
  }
  const GridPtr g = make_study_grid(c);
  const ACState ic = gen_initial_data(c, g);
  const double side = c.K * c.L_h;
  const HField K = box_indicator(g, side);

  int threads = 1;
  auto rows = run_rows(c.eps_list.size(), rc, [&](std::size_t i) {
    const double eps = c.eps_list[i];
    const double t_rec = recurrence_time(*g, side, eps, m);
    const bool inside = c.T <= t_rec;
    if (!inside && c.recurrence_policy == "trim") {
      RowOut row;
      row.values = {kNaN, kNaN, t_rec};
      row.status = "trimmed";
      row.message = "T exceeds the recurrence time " + detail::num(t_rec);
      return row;
    }
    std::vector<double> local, global;
    auto obs = [&](const ACState& s, std::size_t) {
      const VectorField q = leray_Q(s.u);
      local.push_back(box_norm_sq(q, K));
      global.push_back(norm_sq(q));
    };
    RowOut row = guarded_run(c, ac_params(c, eps), ic, obs, [&](RowOut& out, const Trajectory& tr) {
      out.values = {trapezoid(tr.times, local), trapezoid(tr.times, global), t_rec};
      out.series["acoustic_local"] = local;
    });
    if (!inside && row.status == "ok") {
      row.status = "recurrence";
      row.message = "T exceeds the recurrence time " + detail::num(t_rec);
    }
    return row;
  }, threads);

  StudyResult r = assemble(c, "acoustic_decay", {"D", "D_global", "t_rec"}, rows, threads);
  r.notes.insert(r.notes.end(), notes.begin(), notes.end());
  add_fit(r, "D");
  add_fit(r, "D", "D_unguarded", true);
  const double target = 2.0 * c.beta - 1.0;
  r.verdicts["target_exponent"] = detail::num(target);
  const auto fit = std::find_if(r.fits.begin(), r.fits.end(), [](const Fit& f) { return f.metric == "D"; });
  if (fit != r.fits.end()) {
    r.verdicts["exponent"] = detail::num(fit->exponent);
    r.verdicts["within_tolerance"] = fit->exponent >= target - 0.3 ? "yes" : "no";
  } else {
    r.verdicts["exponent"] = "none";
    r.verdicts["within_tolerance"] = "no";
  }
  return r;
}

StudyResult study_rage_decay(const StudyConfig& cfg, const RunControl& rc) {
  validate(cfg);
  if (!is_half(cfg.beta)) throw ConfigError("beta", "rage_decay requires beta = 1/2");
  StudyConfig c = cfg;
  // Fast waves travel at most at unit speed in t / eps; the support of chi
  // has diameter 2 chi_radius L_h.
  const bool local = c.chi != "one";
  const double shrink = 1.0 - 2.0 * std::sqrt(2.0) * c.chi_radius;
  std::vector<std::string> notes;
  if (local && c.recurrence_policy == "enlarge") {
    if (shrink <= 0.0) throw ConfigError("chi_radius", "too large for the recurrence guard");
    const double needed = 2.0 * c.T / (shrink * c.eps_list.back());
    if (needed > c.L_h) {
      notes.push_back("L_h enlarged from " + detail::num(c.L_h) + " to " + detail::num(needed) +
                      " to satisfy the recurrence guard");
      c.L_h = needed;
    }
  }
  const GridPtr g = make_study_grid(c);
  const ACState ic = gen_initial_data(c, g);
  const HField chi = local ? bump(g, c.chi_radius * c.L_h) : constant_weight(g);

  int threads = 1;
  auto rows = run_rows(c.eps_list.size(), rc, [&](std::size_t i) {
    const double eps = c.eps_list[i];
    const double t_rec = local ? recurrence_time(*g, 2.0 * c.chi_radius * c.L_h, eps, 1.0) : kInf;
    const bool inside = c.T <= t_rec;
    if (!inside && c.recurrence_policy == "trim") {
      RowOut row;
      row.values = {kNaN, t_rec};
      row.status = "trimmed";
      row.message = "T exceeds the recurrence time " + detail::num(t_rec);
      return row;
    }
    std::vector<double> vals;
    auto obs = [&](const ACState& s, std::size_t) {
      const ACState w = truncate(complement_project(s), c.M);
      double sum = weighted_norm_sq(w.p, chi);
      for (int k = 0; k < 3; ++k) sum += weighted_norm_sq(w.u[k], chi);
      vals.push_back(sum);
    };
    RowOut row = guarded_run(c, ac_params(c, eps), ic, obs, [&](RowOut& out, const Trajectory& tr) {
      out.values = {trapezoid(tr.times, vals) / c.T, t_rec};
      out.series["rage_integrand"] = vals;
    });
    if (!inside && row.status == "ok") {
      row.status = "recurrence";
      row.message = "T exceeds the recurrence time " + detail::num(t_rec);
    }
    return row;
  }, threads);

  StudyResult r = assemble(c, "rage_decay", {"R", "t_rec"}, rows, threads);
  r.notes.insert(r.notes.end(), notes.begin(), notes.end());
  add_fit(r, "R");
  trend_verdicts(r, "R");
  auto [e, y] = valid_points(r, "R");
  if (c.chi == "one" && !y.empty()) {
    const double hi = *std::max_element(y.begin(), y.end()), lo = *std::min_element(y.begin(), y.end());
    const bool flat = hi == 0.0 || (hi - lo) / hi <= 0.05;
    r.verdicts["R.spread"] = detail::num(hi > 0.0 ? (hi - lo) / hi : 0.0);
    r.verdicts["R.flat"] = flat ? "yes" : "no";
    if (flat) r.notes.push_back("no-decay control case");
  }
  return r;
}

StudyResult run_study(const StudyConfig& c, const RunControl& rc) {
  validate(c);
  if (c.study == "convergence_beta_ge1") return study_convergence_beta_ge1(c, rc);
  if (c.study == "convergence_beta_half") return study_convergence_beta_half(c, rc);
  if (c.study == "acoustic_decay") return study_acoustic_decay(c, rc);
  return study_rage_decay(c, rc);
}

// ---------------------------------------------------------------- output

std::string to_csv(const StudyResult& r) {
  std::ostringstream os;
  os << "eps";
  for (const auto& c : r.columns) os << ',' << c;
  os << ",status\n";
  for (const auto& row : r.rows) {
    os << detail::num(row.eps);
    for (double v : row.values) os << ',' << (std::isfinite(v) ? detail::num(v) : std::string("nan"));
    os << ',' << row.status << '\n';
  }
  return os.str();
}

namespace {

std::string plot_script(const StudyResult& r) {
  std::ostringstream os;
  os << "# gnuplot script for result.csv (" << r.study << ")\n"
     << "set datafile separator ','\n"
     << "set datafile missing 'nan'\n"
     << "set logscale xy\n"
     << "set xlabel 'eps'\n"
     << "set key left top\n"
     << "set terminal pngcairo size 800,600\n"
     << "set output 'result.png'\n"
     << "plot ";
  std::size_t shown = 0;
  for (std::size_t j = 0; j < r.columns.size(); ++j) {
    const auto& name = r.columns[j];
    if (name == "energy_excess" || name == "t_rec") continue;
    os << (shown++ ? ", \\\n     " : "") << "'result.csv' using 1:" << j + 2 << " with linespoints title '" << name
       << "'";
  }
  os << '\n';
  return os.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw ConfigError("output_dir", "cannot write " + p.string());
  out << text;
  if (!out) throw ConfigError("output_dir", "failed writing " + p.string());
}

}  // namespace

void emit(const StudyResult& r, const StudyConfig& c, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("output_dir", "cannot create '" + dir + "': " + ec.message());

  write_file(fs::path(dir) / "result.csv", to_csv(r));

  nlohmann::ordered_json j;
  j["study"] = r.study;
  std::vector<std::string> cols{"eps"};
  cols.insert(cols.end(), r.columns.begin(), r.columns.end());
  cols.push_back("status");
  j["columns"] = cols;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json o;
    o["eps"] = row.eps;
    for (std::size_t k = 0; k < r.columns.size(); ++k) {
      if (std::isfinite(row.values[k]))
        o[r.columns[k]] = row.values[k];
      else
        o[r.columns[k]] = nullptr;
    }
    o["status"] = row.status;
    if (!row.message.empty()) o["message"] = row.message;
    j["rows"].push_back(o);
  }
  j["fits"] = nlohmann::json::array();
  for (const auto& f : r.fits)
    j["fits"].push_back({{"metric", f.metric}, {"exponent", f.exponent}, {"intercept", f.intercept},
                         {"residual", f.residual}, {"points", f.points}});
  j["verdicts"] = r.verdicts;
  j["notes"] = r.notes;
  j["provenance"] = r.provenance;
  nlohmann::ordered_json echo = nlohmann::ordered_json::object();
  for (const auto& [k, v] : c.echo) echo[k] = v;
  j["provenance"]["config_echo"] = echo;
  j["series"] = r.series;
  write_file(fs::path(dir) / "result.json", j.dump(2) + "\n");

  write_file(fs::path(dir) / "plot.gp", plot_script(r));

  std::ostringstream meta;
  for (const auto& [k, v] : r.provenance) meta << k << '=' << v << '\n';
  write_file(fs::path(dir) / "run.meta", meta.str());
}

// ------------------------------------------------------------------- cli

int cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli(static_cast<int>(argv.size()), argv.data());
}

int cli(int argc, const char* const* argv) {
  CLI::App app{"eps-sweep studies for the rotating artificial-compressibility system", "geob"};
  std::string config_path, study, eps, output_dir, mode_table;
  std::vector<std::string> sets;
  std::optional<double> beta, T, dt, mu;
  bool serial = false;
  int threads = 0;
  app.add_option("-c,--config", config_path, "flat key = value configuration file");
  app.add_option("--study", study, "study name");
  app.add_option("--beta", beta, "beta");
  app.add_option("--eps", eps, "comma separated eps list");
  app.add_option("--T", T, "final time");
  app.add_option("--dt", dt, "time step");
  app.add_option("--mu", mu, "viscosity");
  app.add_option("-o,--output-dir", output_dir, "output directory");
  app.add_option("--set", sets, "key=value override (repeatable)");
  app.add_option("--mode-table", mode_table, "write the truncated eigenvalue table for the grid and exit");
  app.add_flag("--serial", serial, "run eps rows serially");
  app.add_option("--threads", threads, "cap on parallel rows");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    std::vector<std::pair<std::string, std::string>> entries;
    if (!config_path.empty()) entries = read_config_file(config_path);
    if (!study.empty()) entries.emplace_back("study", study);
    if (beta) entries.emplace_back("beta", detail::num(*beta));
    if (!eps.empty()) entries.emplace_back("eps_list", eps);
    if (T) entries.emplace_back("T", detail::num(*T));
    if (dt) entries.emplace_back("dt", detail::num(*dt));
    if (mu) entries.emplace_back("mu", detail::num(*mu));
    if (!output_dir.empty()) entries.emplace_back("output_dir", output_dir);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError(s, "--set expects key=value");
      entries.emplace_back(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    }
    if (!mode_table.empty()) {
      StudyConfig c;
      for (const auto& [k, v] : entries) set_config_value(c, k, v);
      const GridPtr g = make_study_grid(c);
      std::ofstream out(mode_table);
      if (!out) throw ConfigError("mode-table", "cannot write '" + mode_table + "'");
      write_mode_table(out, *g, c.M);
      return 0;
    }
    const StudyConfig c = make_config(entries);
    RunControl rc;
    rc.serial = serial;
    rc.threads = threads;
    const StudyResult r = run_study(c, rc);
    emit(r, c, c.output_dir);
    std::cout << to_csv(r);
    for (const auto& f : r.fits)
      std::cout << "fit " << f.metric << ": exponent " << detail::num(f.exponent) << " residual "
                << detail::num(f.residual) << " (" << f.points << " points)\n";
    for (const auto& n : r.notes) std::cout << "note: " << n << '\n';
    if (r.aborted()) {
      std::cerr << "error: numerical abort in at least one row\n";
      return 3;
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace geob
