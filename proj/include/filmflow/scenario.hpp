#pragma once

/// @file scenario.hpp
/// @brief Scenario configuration: INI parsing, the builtin catalog, and the
/// runners that turn a scenario into records, checks and artifacts.
///
/// A scenario file has four sections:
///
///   [model]       s, n, beta, kappa, delta, a, eps, gamma, g
///   [grid]        dim, n, ny, length, ly
///   [stepper]     dt_init, dt_min, dt_max, newton_tol, newton_max, scheme, ...
///   [experiment]  kind, t_final, initial, mean, ... (kind-specific keys)
///
/// `config_reference()` lists every key with its default.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "filmflow/diagnostics.hpp"
#include "filmflow/grid.hpp"
#include "filmflow/nonlinearities.hpp"
#include "filmflow/stepper.hpp"

namespace filmflow {

enum class ExperimentKind {
  single_run,
  eps_ladder,
  separation,
  absorbing,
  contraction,
  moser_schedule,
  elliptic_identity,
};

ExperimentKind parse_experiment_kind(const std::string& name);
std::string to_string(ExperimentKind kind);

struct GridSpec {
  int dim = 1;
  std::size_t nx = 128;
  std::size_t ny = 0;  ///< 0: same as nx
  double lx = 1.0;
  double ly = 0.0;     ///< 0: same as lx

  Grid make() const;
};

/// constant(mean) | cosine(amplitude[, modes]) | random(amplitude) | file(path)
struct InitialCondition {
  enum class Kind { constant, cosine, random, file };
  Kind kind = Kind::cosine;
  double mean = 1.0;
  double amplitude = 0.5;
  int modes = 1;
  std::string path;

  static InitialCondition parse(const std::string& text);
  std::string to_string() const;
};

enum class SeparationMode { automatic, assert_floor, report_only };

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::single_run;
  std::string property;          ///< plain-words description of what the run exercises
  double t_final = 1.0;
  std::size_t cadence = 1;       ///< keep every `cadence`-th record in the CSV
  InitialCondition initial;
  bool mollify = true;
  std::uint64_t seed = 20240601;

  // single_run
  bool refine = false;                        ///< repeat at dt/2 and compare residuals
  std::optional<bool> assert_energy_monotone;  ///< default: on for convex_concave
  double mass_tol = 1e-12;

  // separation
  SeparationMode separation_mode = SeparationMode::automatic;
  int moser_dim = 3;
  double t_min = -1.0;
  double growth_factor = 10.0;
  double floor_slack = 0.01;
  bool z_ladder = true;

  // eps_ladder
  std::vector<double> eps_values{1e-2, 1e-3, 1e-4, 1e-5};

  // absorbing
  std::vector<double> energies{10.0, 1000.0};
  double terminal_tol = 0.1;

  // contraction
  double distance = 1e-3;
  int perturbation_modes = 2;
  double fit_start = 0.1;
  double fit_end = 1.0;
  double envelope_factor = 2.0;
  double divergence_bound = 0.1;

  // moser_schedule
  int schedule_dim = 3;
  double iota = 0.5;
  double eps_time = 0.1;
  int main_steps = 12;

  // elliptic_identity
  int pairs = 100;
  double identity_tol = 1e-12;
};

struct Scenario {
  std::string name = "scenario";
  ModelParams model;
  GridSpec grid;
  StepperConfig stepper;
  ExperimentSpec experiment;

  /// Cross-field checks; throws ValidationError or ConfigError.
  void validate() const;
};

/// Parses INI text. Unknown keys and malformed values raise ConfigError,
/// model hypotheses raise ValidationError.
Scenario parse_scenario(std::istream& in, const std::string& name);
Scenario load_scenario(const std::filesystem::path& path);
/// Resolved configuration as INI text; parses back to the same scenario.
std::string to_ini(const Scenario& scenario);

/// Markdown page listing every key, its default and meaning.
std::string config_reference();

std::vector<Scenario> builtin_scenarios();
std::optional<Scenario> find_builtin(const std::string& name);

/// Initial datum on `grid` (before mollification).
GridFunction initial_field(const Scenario& scenario, const Grid& grid);

struct ScenarioOutcome {
  std::string name;
  int exit_code = 0;  ///< 0 pass, 1 a gated check failed
  std::vector<CheckReport> checks;
  std::vector<DiagnosticsRecord> records;
  nlohmann::json summary = nlohmann::json::object();
  std::optional<nlohmann::json> schedule;
  std::map<std::string, std::string> tables;  ///< extra CSV artifacts, file name -> content
  std::filesystem::path directory;
  std::vector<std::string> artifacts;
};

/// Runs the experiment without touching the filesystem.
ScenarioOutcome execute(const Scenario& scenario);
/// Runs the experiment and writes its artifacts under `output_root/<name>`.
ScenarioOutcome run_scenario(const Scenario& scenario, const std::filesystem::path& output_root);

/// Writes records.csv, report.json, schedule.json (when present) and manifest.json.
void write_artifacts(const Scenario& scenario, ScenarioOutcome& outcome,
                     const std::filesystem::path& dir);

nlohmann::json report_json(const Scenario& scenario, const ScenarioOutcome& outcome);
nlohmann::json manifest_json(const Scenario& scenario, const ScenarioOutcome& outcome);

/// Fixed step size: dt_init = dt_min = dt_max = dt.
StepperConfig fixed_step(StepperConfig cfg, double dt);

/// Mollified initial energy of mean + amp * cos(2 pi x / L); the amplitude is
/// found by bisection on (0, mean) so that it reaches `target`.
double amplitude_for_energy(const ModelParams& p, const Grid& grid, double mean, double target,
                            bool mollify = true);

}  // namespace filmflow
