#pragma once

// Experiment runner: JSON configuration, the pathwise / call / density /
// scheme-check studies, and their CSV output.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "poolsim/model.hpp"
#include "poolsim/montecarlo.hpp"
#include "poolsim/pathwise.hpp"

namespace poolsim {

std::string_view library_version() noexcept;

enum class ExperimentKind { pathwise, call, density, scheme_check };

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view name);

// Call-study method names in output order.
inline constexpr std::string_view kCallMethods[] = {"expLoss", "firmsCall", "limCall", "appY",
                                                    "erg1Y",   "erg2Y",     "erg1YZ", "erg2YZ"};

struct PathwiseSettings {
  std::vector<double> epsilons{1.0, 1e-1, 1e-2, 1e-3, 1e-4};
  std::uint64_t n_paths = 3;
  std::uint64_t n_inner = 400000;
  std::vector<ApproxKind> approximations{std::begin(kAllApproximations),
                                         std::end(kAllApproximations)};
  std::string loglog_path;  // empty: no log-log dump
};

struct CallSettings {
  std::vector<double> strikes{0.0, 0.05, 0.10};
  std::vector<std::string> methods{"expLoss", "firmsCall", "appY", "erg1Y",
                                   "erg2Y",   "erg1YZ",    "erg2YZ"};
  std::uint64_t n_outer = 1200000;
  std::uint64_t n_inner = 10000;
  // One firm count per strike, or a single count for all strikes.
  std::vector<std::uint64_t> n_firms{5, 150, 100};
};

struct DensitySettings {
  double b_min = -0.3;
  double b_max = 0.1;
  std::uint64_t b_count = 41;
  std::uint64_t n_inner = 100000;
  std::uint64_t path_id = 0;
};

struct SchemeCheckSettings {
  std::vector<double> epsilons{1.0, 1e-1, 1e-2};
  std::uint64_t n_paths = 100000;
  std::string dump_path;  // empty: no path dump
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::pathwise;
  ModelParams model = reference_params(4e-3);
  double horizon = 1.0;
  double barrier = -0.1;
  std::optional<std::int64_t> steps;  // explicit N overrides the epsilon rule
  double steps_per_epsilon = 40.0;
  std::uint64_t seed = 20240101;
  std::uint64_t market_seed = 7;
  unsigned threads = 0;
  bool deterministic = true;
  std::string output;  // empty: standard output

  PathwiseSettings pathwise;
  CallSettings call;
  DensitySettings density;
  SchemeCheckSettings scheme_check;

  // Throws ConfigError on any invalid field.
  void validate() const;
  RunOptions run_options() const { return {threads, deterministic}; }
  GridSpec grid_for(double epsilon) const;
};

// Parses a JSON document; unknown fields and invalid values raise ConfigError.
// Fields absent from the document keep their defaults.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write(std::ostream& out) const;
  std::string str() const;
};

// Shortest round-trip decimal form; empty for NaN.
std::string format_number(double x);

// One row per (epsilon, path):
// epsilon, path_id, loss_true, loss_true_se, appY, erg1Y, erg2Y, erg1YZ,
// erg2YZ, re_appY, re_erg1Y, re_erg2Y, re_erg1YZ, re_erg2YZ.
// Relative errors are in percent; unselected approximations are left
// empty. When loglog is given, (epsilon, path_id, method, rel_err) rows
// are written to it.
CsvTable run_pathwise_study(const ExperimentConfig& cfg, std::ostream* loglog = nullptr);

// Rows: method, strike, price, std_err, rel_err_vs_reference. The
// reference is expLoss at strike 0 and firmsCall otherwise.
CsvTable run_call_study(const ExperimentConfig& cfg);

// Rows: B, loss_true, loss_true_se, density_true, density_true_se, then
// the five approximate CDF values, on one market path.
CsvTable run_density_study(const ExperimentConfig& cfg);

// Endpoint statistics of the exact-kernel and Euler OU schemes on coupled
// noise against their closed forms. When path_dump is given, one
// (t, y, z, x) firm path is written to it.
CsvTable run_scheme_check(const ExperimentConfig& cfg, std::ostream* path_dump = nullptr);

CsvTable run_experiment(const ExperimentConfig& cfg);

// Metadata sidecar: config echo, seeds, version, wall time.
std::string run_metadata_json(const ExperimentConfig& cfg, double wall_seconds);

}  // namespace poolsim
