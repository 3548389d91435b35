#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "geob/ac_solver.hpp"

namespace geob {

/// Invalid or missing configuration; key() names the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Declarative description of an eps sweep. Field names double as the
/// keys of the flat `key = value` configuration format.
struct StudyConfig {
  std::string study;  // convergence_beta_ge1 | convergence_beta_half | acoustic_decay | rage_decay
  double L_h = 8.0 * 3.14159265358979323846;
  int N_h = 64;
  int N_v = 16;
  double dealias_fraction = 2.0 / 3.0;
  std::vector<double> eps_list{0.2, 0.1, 0.05};
  double beta = 1.0;
  double mu = 1.0;
  bool nonlinear = true;
  double T = 0.5;
  double dt = 1e-3;
  long snap_every = 0;  // 0: at least 50 samples
  double cfl = 0.5;
  bool strict_cfl = false;
  double energy_tol = 1e-8;

  std::string ic_kind = "ill";  // well | ill | gaussian
  unsigned long ic_seed = 1;
  double ic_spectral_slope = 0.0;
  std::vector<double> ic_band{1, 4};           // horizontal mode radius range
  std::vector<double> ic_vertical_band{0, 1};  // vertical mode range
  double ic_amplitude = 1.0;
  double ic_width = 1.0;  // gaussian data: standard deviation

  double K = 0.25;  // side of the centered box K as a fraction of L_h
  double M = 10.0;  // truncation for rage_decay
  std::string chi = "bump";  // bump | one
  double chi_radius = 0.25;   // bump radius as a fraction of L_h
  int qg_jacobian_sign = -1;
  std::string recurrence_policy = "flag";  // flag | trim | enlarge

  std::string output_dir = "geob_out";

  /// Every key that was set explicitly, in file/flag order.
  std::vector<std::pair<std::string, std::string>> echo;
};

/// Parses `key = value` lines ('#' starts a comment).
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text);
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path);
/// Applies one key; throws ConfigError naming the key on a bad value.
void set_config_value(StudyConfig& c, const std::string& key, const std::string& value);
StudyConfig make_config(const std::vector<std::pair<std::string, std::string>>& entries);
/// Checks invariants (eps_list strictly decreasing and positive, K in (0, 1/2], ...).
void validate(const StudyConfig& c);

GridPtr make_study_grid(const StudyConfig& c);

/// Seeded initial data, independent of eps.
/// well: p0 = 0 and u0 solenoidal (beta >= 1) or kernel-projected (beta = 1/2).
/// ill: independent solenoidal part, gradient part and p0, each with RMS ic_amplitude.
/// gaussian: p0 = centered Gaussian times cos(2 pi k x3), k = ic_vertical_band[0], u0 = 0.
ACState gen_initial_data(const StudyConfig& c, const GridPtr& grid);

struct Fit {
  std::string metric;
  double exponent = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS of the log-log residuals
  int points = 0;
};

/// Least-squares fit of log y against log eps; nullopt with fewer than 3 points.
std::optional<Fit> fit_power_law(const std::string& metric, const std::vector<double>& eps,
                                 const std::vector<double>& y);

struct StudyRow {
  double eps = 0.0;
  std::vector<double> values;  // one per StudyResult::columns
  std::string status = "ok";   // ok | aborted | recurrence | trimmed | energy_fail
  std::string message;
  bool valid() const { return status == "ok"; }
};

struct StudyResult {
  std::string study;
  std::vector<std::string> columns;
  std::vector<StudyRow> rows;
  std::vector<Fit> fits;
  std::map<std::string, std::string> verdicts;
  std::vector<std::string> notes;
  std::map<std::string, std::string> provenance;
  /// Per-row series (e.g. ||p(t)||), keyed by name, one vector per row.
  std::map<std::string, std::vector<std::vector<double>>> series;
  bool aborted() const;
};

struct RunControl {
  bool serial = false;
  int threads = 0;  // 0: GEOB_THREADS or hardware concurrency
};

StudyResult study_convergence_beta_ge1(const StudyConfig& c, const RunControl& rc = {});
StudyResult study_convergence_beta_half(const StudyConfig& c, const RunControl& rc = {});
StudyResult study_acoustic_decay(const StudyConfig& c, const RunControl& rc = {});
StudyResult study_rage_decay(const StudyConfig& c, const RunControl& rc = {});
StudyResult run_study(const StudyConfig& c, const RunControl& rc = {});

/// Writes result.csv, result.json, plot.gp and run.meta into dir.
void emit(const StudyResult& r, const StudyConfig& c, const std::string& dir);
std::string to_csv(const StudyResult& r);

/// Command line entry point. Returns 0 on success, 2 on a configuration
/// error, 3 on a numerical abort.
int cli(int argc, const char* const* argv);
int cli(const std::vector<std::string>& args);

}  // namespace geob
