#pragma once

/// @file diagnostics.hpp
/// @brief Per-step records of a run and the checks evaluated on them.
///
/// Each check turns a qualitative law into something computable: an identity
/// residual, a sign, or a fitted envelope. Checks are pure functions of the
/// record stream.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "filmflow/functionals.hpp"
#include "filmflow/moser.hpp"
#include "filmflow/stepper.hpp"

namespace filmflow {

struct DiagnosticsRecord {
  double t = 0.0;
  double dt = 0.0;                   ///< step that produced this record (0 for the first)
  double mass = 0.0;                 ///< int u
  EnergyBreakdown energy;
  double entropy = 0.0;              ///< int M_eps(u)
  double lyapunov = 0.0;             ///< int M_eps(u) + delta/2 |grad u|^2
  double min_u = 0.0;
  double max_u = 0.0;
  double dissipation = 0.0;          ///< sum b |grad w|^2 vol
  double viscous_dissipation = 0.0;  ///< delta |u_t|^2 (discrete)
  double energy_residual = 0.0;      ///< E_new - E_old + dt (viscous + dissipation)
  double entropy_residual = 0.0;     ///< L_new - L_old + dt * (entropy production)
  int newton_iters = 0;
  std::map<double, double> z_norms;  ///< nu -> ||1/u||_{L^nu}, when requested
};

/// Collects records while a run is in progress.
class Recorder {
 public:
  Recorder(const ModelParams& p, const StepperConfig& cfg, bool track_entropy = true);

  /// Also keep every `every`-th state for z-norm ladders (0 disables).
  void keep_snapshots(std::size_t every) { snapshot_every_ = every; }
  /// Exponents at which ||1/u||_{L^nu} is stored in each record.
  void track_z_norms(std::vector<double> nus) { z_nus_ = std::move(nus); }

  StepObserver observer();

  const std::vector<DiagnosticsRecord>& records() const noexcept { return records_; }
  const std::vector<Snapshot>& snapshots() const noexcept { return snapshots_; }

  /// Record for a state with no predecessor.
  DiagnosticsRecord make_record(const SolverState& state) const;
  /// Record for `after`, with residuals measured against `before`.
  DiagnosticsRecord make_record(const SolverState& before, const SolverState& after) const;

 private:
  double lyapunov(const GridFunction& u) const;
  void push(DiagnosticsRecord rec, const SolverState& state);

  ModelParams p_;
  StepperConfig cfg_;
  bool track_entropy_;
  std::size_t snapshot_every_ = 0;
  std::vector<double> z_nus_;
  std::vector<DiagnosticsRecord> records_;
  std::vector<Snapshot> snapshots_;
};

/// Result of one check. `asserted` is false for report-only checks, which
/// always count as passed.
struct CheckReport {
  std::string name;
  bool asserted = true;
  bool passed = true;
  std::string message;
  nlohmann::json details = nlohmann::json::object();
};

nlohmann::json to_json(const CheckReport& report);

/// Largest |mass - mass_0| / |mass_0| along the records.
double max_mass_drift(const std::vector<DiagnosticsRecord>& records);

struct MassOptions {
  double tol = 1e-12;
};
CheckReport check_mass(const std::vector<DiagnosticsRecord>& records, const MassOptions& opts = {});

struct EnergyLawOptions {
  bool assert_monotone = false;  ///< assert E_{k+1} <= E_k + tol
  double tol = 1e-10;            ///< relative to 1 + |E|
};
CheckReport check_energy_law(const std::vector<DiagnosticsRecord>& records,
                             const EnergyLawOptions& opts = {});

/// Ratio max|residual|(coarse) / max|residual|(fine) for two runs with dt and dt/2.
double energy_refinement_ratio(const std::vector<DiagnosticsRecord>& coarse,
                               const std::vector<DiagnosticsRecord>& fine);
CheckReport check_energy_refinement(const std::vector<DiagnosticsRecord>& coarse,
                                    const std::vector<DiagnosticsRecord>& fine,
                                    double min_ratio = 2.0);

struct EntropyLawOptions {
  double tol = 1e-9;  ///< allowed per-step increase, relative to 1 + |L|
};
/// Monotonicity of the Lyapunov quantity is asserted only when g = 0 and gamma = 0.
CheckReport check_entropy_law(const std::vector<DiagnosticsRecord>& records, const ModelParams& p,
                              const EntropyLawOptions& opts = {});

/// Kendall rank correlation; pairs closer than `tie_tol` (relative) are ties.
double kendall_tau(const std::vector<double>& values, double tie_tol = 1e-12);

/// Floor checks on min_x u after the transient: the floor stays positive, once
/// it reaches the percentile target it never dips more than `slack` below it
/// nor below its running peak, it exceeds `growth_factor` times the initial
/// minimum, and window minima show no downward trend.
struct SeparationOptions {
  double t_min = -1.0;          ///< start of the post-transient window; < 0 selects 0.1 T
  double percentile = 0.10;     ///< quantile of post-transient floors taken as the target
  double slack = 0.01;          ///< allowed relative dip below the target or the running peak
  double growth_factor = 10.0;  ///< post-transient floor vs initial minimum; 0 disables
  std::size_t windows = 10;     ///< windows for the trend test
  bool assert_floor = true;     ///< false: report only
};
CheckReport check_separation(const std::vector<DiagnosticsRecord>& records,
                             const SeparationOptions& opts = {});

struct DecayFit {
  double theta = 0.0;
  double alpha = 0.0;
  double c = 0.0;
  double r_squared = 0.0;
  bool fitted = false;  ///< false when kappa = s + 1 or too few points
};
/// Fits dE/dt + alpha E^theta <= c with theta = (kappa-1-s)/(kappa-1).
DecayFit fit_dissipative_decay(const std::vector<DiagnosticsRecord>& records, const ModelParams& p);
CheckReport check_dissipative_decay(const std::vector<DiagnosticsRecord>& records,
                                    const ModelParams& p);

/// Terminal energies of two runs agree within `rel_tol`.
CheckReport check_absorbing(const std::vector<DiagnosticsRecord>& a,
                            const std::vector<DiagnosticsRecord>& b, double rel_tol = 0.1);

struct ContractionOptions {
  double fit_start = 0.1;
  double fit_end = 1.0;
  double envelope_factor = 2.0;
  double divergence_bound = 0.1;
};
/// Fits log d(t) = a + lambda t over the window; d must stay under
/// factor * exp(a + lambda t) there and under the divergence bound always.
CheckReport check_contraction(const std::vector<double>& times, const std::vector<double>& distances,
                              const ContractionOptions& opts = {});

/// ||u_i - u_{i+1}||_{L^2} for consecutive members of a ladder.
std::vector<double> cauchy_increments(const std::vector<GridFunction>& ladder);
CheckReport check_eps_ladder(const std::vector<double>& eps, const std::vector<GridFunction>& finals);

/// CSV with one row per record.
void write_records_csv(std::ostream& os, const std::vector<DiagnosticsRecord>& records);
nlohmann::json to_json(const std::vector<ZNormEntry>& ladder);

}  // namespace filmflow
