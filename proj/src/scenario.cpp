#include "filmflow/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "filmflow/errors.hpp"
#include "filmflow/moser.hpp"

namespace filmflow {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Shortest text that parses back to the same double.
std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double to_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(trim(text), &used);
    if (used != trim(text).size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
}

long long to_integer(const std::string& key, const std::string& text) {
  const double v = to_double(key, text);
  if (v != std::floor(v)) throw ConfigError(key + ": expected an integer, got '" + text + "'");
  return static_cast<long long>(v);
}

std::size_t to_count(const std::string& key, const std::string& text) {
  const long long v = to_integer(key, text);
  if (v < 0) throw ConfigError(key + ": expected a nonnegative integer, got '" + text + "'");
  return static_cast<std::size_t>(v);
}

bool to_bool(const std::string& key, const std::string& text) {
  std::string t = trim(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!trim(item).empty()) out.push_back(to_double(key, item));
  }
  return out;
}

std::string list_str(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + num(v[i]);
  return out;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

// Arguments of "name(a, b, ...)" as raw strings.
std::vector<std::string> call_args(const std::string& text, const std::string& name) {
  const std::string t = trim(text);
  if (t.rfind(name, 0) != 0) return {};
  const auto open = t.find('(');
  const auto close = t.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open ||
      trim(t.substr(name.size(), open - name.size())) != "") {
    throw ConfigError("experiment.initial: malformed '" + text + "'");
  }
  std::vector<std::string> args;
  std::stringstream ss(t.substr(open + 1, close - open - 1));
  std::string item;
  while (std::getline(ss, item, ',')) args.push_back(trim(item));
  if (args.size() == 1 && args[0].empty()) args.clear();
  return args;
}

std::string mean_str(FaceMean m) { return m == FaceMean::arithmetic ? "arithmetic" : "harmonic"; }

FaceMean parse_mean(const std::string& text) {
  const std::string t = trim(text);
  if (t == "arithmetic") return FaceMean::arithmetic;
  if (t == "harmonic") return FaceMean::harmonic;
  throw ConfigError("stepper.mobility_mean: expected arithmetic or harmonic, got '" + text + "'");
}

std::string mode_str(SeparationMode m) {
  switch (m) {
    case SeparationMode::automatic:
      return "auto";
    case SeparationMode::assert_floor:
      return "assert";
    case SeparationMode::report_only:
      return "report";
  }
  return "auto";
}

SeparationMode parse_mode(const std::string& text) {
  const std::string t = trim(text);
  if (t == "auto") return SeparationMode::automatic;
  if (t == "assert") return SeparationMode::assert_floor;
  if (t == "report") return SeparationMode::report_only;
  throw ConfigError("experiment.separation_mode: expected auto, assert or report, got '" + text + "'");
}

// One configurable key: where it lives, what it means, how to read and write it.
struct KeySpec {
  std::string section;
  std::string key;
  std::string meaning;
  std::function<std::string(const Scenario&)> get;
  std::function<void(Scenario&, const std::string&)> set;
};

#define FF_DOUBLE(SEC, KEY, FIELD, MEANING)                                              \
  KeySpec {                                                                              \
    SEC, KEY, MEANING, [](const Scenario& s) { return num(s.FIELD); },                   \
        [](Scenario& s, const std::string& v) { s.FIELD = to_double(SEC "." KEY, v); } \
  }

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      FF_DOUBLE("model", "s", model.s, "mobility exponent, b(r) = r^s + beta r^n"),
      FF_DOUBLE("model", "n", model.n, "secondary mobility exponent, 0 <= n <= s"),
      FF_DOUBLE("model", "beta", model.beta, "weight of the secondary mobility term"),
      FF_DOUBLE("model", "kappa", model.kappa, "singular potential exponent, f(r) = -r^-kappa"),
      FF_DOUBLE("model", "delta", model.delta, "viscosity coefficient"),
      FF_DOUBLE("model", "a", model.a, "mobility regularization exponent, b(sqrt(r^2 + eps^a))"),
      FF_DOUBLE("model", "eps", model.eps, "regularization parameter in (0, 1]"),
      {"model", "gamma", "non-convex force: zero | physical(A,B,k[,r0])",
       [](const Scenario& s) { return s.model.gamma.to_string(); },
       [](Scenario& s, const std::string& v) { s.model.gamma = GammaSpec::parse(v); }},
      {"model", "g", "external forcing: number | cosine(mean,amplitude)",
       [](const Scenario& s) { return s.model.g.to_string(); },
       [](Scenario& s, const std::string& v) { s.model.g = ForcingSpec::parse(v); }},

      {"grid", "dim", "spatial dimension, 1 or 2",
       [](const Scenario& s) { return std::to_string(s.grid.dim); },
       [](Scenario& s, const std::string& v) { s.grid.dim = static_cast<int>(to_integer("grid.dim", v)); }},
      {"grid", "n", "cells along x",
       [](const Scenario& s) { return std::to_string(s.grid.nx); },
       [](Scenario& s, const std::string& v) { s.grid.nx = to_count("grid.n", v); }},
      {"grid", "ny", "cells along y in 2D (0: same as n)",
       [](const Scenario& s) { return std::to_string(s.grid.ny); },
       [](Scenario& s, const std::string& v) { s.grid.ny = to_count("grid.ny", v); }},
      FF_DOUBLE("grid", "length", grid.lx, "domain length along x"),
      FF_DOUBLE("grid", "ly", grid.ly, "domain length along y in 2D (0: same as length)"),

      FF_DOUBLE("stepper", "dt_init", stepper.dt_init,
                "first step size; the fixed step of eps_ladder, contraction and refine runs"),
      FF_DOUBLE("stepper", "dt_min", stepper.dt_min, "smallest step before giving up"),
      FF_DOUBLE("stepper", "dt_max", stepper.dt_max, "largest step"),
      FF_DOUBLE("stepper", "newton_tol", stepper.newton_tol, "Newton tolerance (scaled max norm)"),
      {"stepper", "newton_max", "Newton iteration limit per attempt",
       [](const Scenario& s) { return std::to_string(s.stepper.newton_max); },
       [](Scenario& s, const std::string& v) {
         s.stepper.newton_max = static_cast<int>(to_integer("stepper.newton_max", v));
       }},
      {"stepper", "scheme", "fully_implicit | convex_concave",
       [](const Scenario& s) { return to_string(s.stepper.scheme); },
       [](Scenario& s, const std::string& v) {
         try {
           s.stepper.scheme = parse_scheme(trim(v));
         } catch (const std::exception&) {
           throw ConfigError("stepper.scheme: expected fully_implicit or convex_concave, got '" + v + "'");
         }
       }},
      {"stepper", "mobility_mean", "face average of the mobility: arithmetic | harmonic",
       [](const Scenario& s) { return mean_str(s.stepper.mobility_mean); },
       [](Scenario& s, const std::string& v) { s.stepper.mobility_mean = parse_mean(v); }},
      {"stepper", "grow_after", "accepted steps before dt grows",
       [](const Scenario& s) { return std::to_string(s.stepper.grow_after); },
       [](Scenario& s, const std::string& v) {
         s.stepper.grow_after = static_cast<int>(to_integer("stepper.grow_after", v));
       }},
      FF_DOUBLE("stepper", "grow_factor", stepper.grow_factor, "dt growth factor"),

      {"experiment", "kind",
       "single_run | eps_ladder | separation | absorbing | contraction | moser_schedule | "
       "elliptic_identity",
       [](const Scenario& s) { return to_string(s.experiment.kind); },
       [](Scenario& s, const std::string& v) { s.experiment.kind = parse_experiment_kind(trim(v)); }},
      {"experiment", "property", "plain-words description recorded in the manifest",
       [](const Scenario& s) { return s.experiment.property; },
       [](Scenario& s, const std::string& v) { s.experiment.property = trim(v); }},
      FF_DOUBLE("experiment", "t_final", experiment.t_final, "final time"),
      {"experiment", "cadence", "keep every n-th record in records.csv",
       [](const Scenario& s) { return std::to_string(s.experiment.cadence); },
       [](Scenario& s, const std::string& v) { s.experiment.cadence = to_count("experiment.cadence", v); }},
      {"experiment", "initial",
       "constant | cosine(amplitude[, modes]) | random(amplitude) | file(path)",
       [](const Scenario& s) { return s.experiment.initial.to_string(); },
       [](Scenario& s, const std::string& v) {
         const double mean = s.experiment.initial.mean;
         s.experiment.initial = InitialCondition::parse(v);
         s.experiment.initial.mean = mean;
       }},
      FF_DOUBLE("experiment", "mean", experiment.initial.mean, "mean of the initial datum"),
      {"experiment", "mollify", "smooth the datum by (I - eps^2 Lap)^-1 before the run",
       [](const Scenario& s) { return bool_str(s.experiment.mollify); },
       [](Scenario& s, const std::string& v) { s.experiment.mollify = to_bool("experiment.mollify", v); }},
      {"experiment", "seed", "seed of random data (recorded in the manifest)",
       [](const Scenario& s) { return std::to_string(s.experiment.seed); },
       [](Scenario& s, const std::string& v) {
         s.experiment.seed = static_cast<std::uint64_t>(to_count("experiment.seed", v));
       }},
      {"experiment", "refine", "single_run: repeat at dt/2 (fixed steps) and compare energy residuals",
       [](const Scenario& s) { return bool_str(s.experiment.refine); },
       [](Scenario& s, const std::string& v) { s.experiment.refine = to_bool("experiment.refine", v); }},
      {"experiment", "assert_energy_monotone",
       "auto | true | false; auto asserts for the convex_concave scheme",
       [](const Scenario& s) {
         return s.experiment.assert_energy_monotone ? bool_str(*s.experiment.assert_energy_monotone)
                                                    : std::string("auto");
       },
       [](Scenario& s, const std::string& v) {
         if (trim(v) == "auto") {
           s.experiment.assert_energy_monotone.reset();
         } else {
           s.experiment.assert_energy_monotone = to_bool("experiment.assert_energy_monotone", v);
         }
       }},
      FF_DOUBLE("experiment", "mass_tol", experiment.mass_tol, "allowed relative mass drift"),
      {"experiment", "separation_mode",
       "auto | assert | report; auto asserts only inside the feasible (kappa, s) regime",
       [](const Scenario& s) { return mode_str(s.experiment.separation_mode); },
       [](Scenario& s, const std::string& v) { s.experiment.separation_mode = parse_mode(v); }},
      {"experiment", "moser_dim", "dimension whose feasibility condition gates the separation assertion",
       [](const Scenario& s) { return std::to_string(s.experiment.moser_dim); },
       [](Scenario& s, const std::string& v) {
         s.experiment.moser_dim = static_cast<int>(to_integer("experiment.moser_dim", v));
       }},
      FF_DOUBLE("experiment", "t_min", experiment.t_min, "end of the transient (< 0: 0.1 t_final)"),
      FF_DOUBLE("experiment", "growth_factor", experiment.growth_factor,
                "required post-transient floor relative to the initial minimum (0 disables)"),
      FF_DOUBLE("experiment", "floor_slack", experiment.floor_slack,
                "allowed relative dip of the floor"),
      {"experiment", "z_ladder", "separation: tabulate ||1/u|| along the exponent ladder",
       [](const Scenario& s) { return bool_str(s.experiment.z_ladder); },
       [](Scenario& s, const std::string& v) { s.experiment.z_ladder = to_bool("experiment.z_ladder", v); }},
      {"experiment", "eps_values", "eps_ladder: regularization values, comma separated",
       [](const Scenario& s) { return list_str(s.experiment.eps_values); },
       [](Scenario& s, const std::string& v) { s.experiment.eps_values = to_list("experiment.eps_values", v); }},
      {"experiment", "energies", "absorbing: the two initial energies",
       [](const Scenario& s) { return list_str(s.experiment.energies); },
       [](Scenario& s, const std::string& v) { s.experiment.energies = to_list("experiment.energies", v); }},
      FF_DOUBLE("experiment", "terminal_tol", experiment.terminal_tol,
                "absorbing: relative gap allowed between terminal energies"),
      FF_DOUBLE("experiment", "distance", experiment.distance, "contraction: initial phase distance"),
      {"experiment", "perturbation_modes", "contraction: cosine mode of the perturbation",
       [](const Scenario& s) { return std::to_string(s.experiment.perturbation_modes); },
       [](Scenario& s, const std::string& v) {
         s.experiment.perturbation_modes = static_cast<int>(to_integer("experiment.perturbation_modes", v));
       }},
      FF_DOUBLE("experiment", "fit_start", experiment.fit_start, "contraction: start of the fit window"),
      FF_DOUBLE("experiment", "fit_end", experiment.fit_end, "contraction: end of the fit window"),
      FF_DOUBLE("experiment", "envelope_factor", experiment.envelope_factor,
                "contraction: allowed excess over the fitted exponential"),
      FF_DOUBLE("experiment", "divergence_bound", experiment.divergence_bound,
                "contraction: distance that must never be crossed"),
      {"experiment", "schedule_dim", "moser_schedule: dimension, 2 or 3",
       [](const Scenario& s) { return std::to_string(s.experiment.schedule_dim); },
       [](Scenario& s, const std::string& v) {
         s.experiment.schedule_dim = static_cast<int>(to_integer("experiment.schedule_dim", v));
       }},
      FF_DOUBLE("experiment", "iota", experiment.iota, "starting exponent offset, nu0 = 1 + iota (d = 3)"),
      FF_DOUBLE("experiment", "eps_time", experiment.eps_time, "total length scale of the time ladder"),
      {"experiment", "main_steps", "steps recorded after the handover exponent",
       [](const Scenario& s) { return std::to_string(s.experiment.main_steps); },
       [](Scenario& s, const std::string& v) {
         s.experiment.main_steps = static_cast<int>(to_integer("experiment.main_steps", v));
       }},
      {"experiment", "pairs", "elliptic_identity: random (b, w) pairs",
       [](const Scenario& s) { return std::to_string(s.experiment.pairs); },
       [](Scenario& s, const std::string& v) {
         s.experiment.pairs = static_cast<int>(to_integer("experiment.pairs", v));
       }},
      FF_DOUBLE("experiment", "identity_tol", experiment.identity_tol,
                "elliptic_identity: relative residual allowed"),
  };
  return table;
}

#undef FF_DOUBLE

}  // namespace

ExperimentKind parse_experiment_kind(const std::string& name) {
  static const std::pair<const char*, ExperimentKind> kinds[] = {
      {"single_run", ExperimentKind::single_run},
      {"eps_ladder", ExperimentKind::eps_ladder},
      {"separation", ExperimentKind::separation},
      {"absorbing", ExperimentKind::absorbing},
      {"contraction", ExperimentKind::contraction},
      {"moser_schedule", ExperimentKind::moser_schedule},
      {"elliptic_identity", ExperimentKind::elliptic_identity},
  };
  for (const auto& [n, k] : kinds) {
    if (name == n) return k;
  }
  throw ConfigError("experiment.kind: unknown kind '" + name + "'");
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::single_run:
      return "single_run";
    case ExperimentKind::eps_ladder:
      return "eps_ladder";
    case ExperimentKind::separation:
      return "separation";
    case ExperimentKind::absorbing:
      return "absorbing";
    case ExperimentKind::contraction:
      return "contraction";
    case ExperimentKind::moser_schedule:
      return "moser_schedule";
    case ExperimentKind::elliptic_identity:
      return "elliptic_identity";
  }
  return "single_run";
}

Grid GridSpec::make() const {
  if (dim == 1) return Grid(nx, lx);
  return Grid(nx, ny ? ny : nx, lx, ly > 0.0 ? ly : lx);
}

InitialCondition InitialCondition::parse(const std::string& text) {
  const std::string t = trim(text);
  InitialCondition ic;
  if (t == "constant") {
    ic.kind = Kind::constant;
    ic.amplitude = 0.0;
    return ic;
  }
  if (t.rfind("cosine", 0) == 0) {
    const auto args = call_args(t, "cosine");
    if (args.empty() || args.size() > 2) {
      throw ConfigError("experiment.initial: cosine(amplitude[, modes]) takes 1 or 2 arguments");
    }
    ic.kind = Kind::cosine;
    ic.amplitude = to_double("experiment.initial", args[0]);
    ic.modes = args.size() == 2 ? static_cast<int>(to_integer("experiment.initial", args[1])) : 1;
    return ic;
  }
  if (t.rfind("random", 0) == 0) {
    const auto args = call_args(t, "random");
    if (args.size() != 1) throw ConfigError("experiment.initial: random(amplitude) takes 1 argument");
    ic.kind = Kind::random;
    ic.amplitude = to_double("experiment.initial", args[0]);
    return ic;
  }
  if (t.rfind("file", 0) == 0) {
    const auto args = call_args(t, "file");
    if (args.size() != 1 || args[0].empty()) throw ConfigError("experiment.initial: file(path) takes a path");
    ic.kind = Kind::file;
    ic.path = args[0];
    return ic;
  }
  throw ConfigError("experiment.initial: expected constant, cosine(..), random(..) or file(..), got '" +
                    text + "'");
}

std::string InitialCondition::to_string() const {
  switch (kind) {
    case Kind::constant:
      return "constant";
    case Kind::cosine:
      return "cosine(" + num(amplitude) + ", " + std::to_string(modes) + ")";
    case Kind::random:
      return "random(" + num(amplitude) + ")";
    case Kind::file:
      return "file(" + path + ")";
  }
  return "constant";
}

void Scenario::validate() const {
  if (grid.dim != 1 && grid.dim != 2) throw ValidationError("grid.dim", "must be 1 or 2");
  if (grid.nx < 2) throw ValidationError("grid.n", "at least 2 cells required");
  if (grid.dim == 2 && grid.ny == 1) throw ValidationError("grid.ny", "at least 2 cells required");
  if (!(grid.lx > 0.0)) throw ValidationError("grid.length", "must be positive");
  if (grid.ly < 0.0) throw ValidationError("grid.ly", "must be nonnegative");
  model.validate(grid.dim);
  stepper.validate();

  const ExperimentSpec& e = experiment;
  if (!(e.t_final >= 0.0)) throw ValidationError("experiment.t_final", "must be >= 0");
  if (e.cadence == 0) throw ValidationError("experiment.cadence", "must be >= 1");
  const InitialCondition& ic = e.initial;
  if (e.kind != ExperimentKind::moser_schedule && e.kind != ExperimentKind::elliptic_identity) {
    if (ic.kind != InitialCondition::Kind::file) {
      if (!(ic.mean > 0.0)) throw ValidationError("experiment.mean", "the initial mean must be positive");
      if (ic.amplitude < 0.0) throw ValidationError("experiment.initial", "amplitude must be >= 0");
      if (ic.kind != InitialCondition::Kind::random && ic.amplitude >= ic.mean) {
        throw ValidationError("experiment.initial", "amplitude must be below the mean to keep u > 0");
      }
      if (ic.kind == InitialCondition::Kind::random && 2.0 * ic.amplitude >= ic.mean) {
        throw ValidationError("experiment.initial", "random amplitude must be below mean/2 to keep u > 0");
      }
      if (ic.modes < 1) throw ValidationError("experiment.initial", "modes must be >= 1");
    }
  }

  switch (e.kind) {
    case ExperimentKind::separation: {
      if (e.moser_dim != 2 && e.moser_dim != 3) throw ValidationError("experiment.moser_dim", "must be 2 or 3");
      if (e.separation_mode == SeparationMode::assert_floor) {
        if (!moser_feasible(e.moser_dim, model.s, model.kappa)) {
          throw ValidationError(
              "kappa", e.moser_dim == 3 ? "asserting separation needs kappa > 2s + 3 in three dimensions"
                                        : "asserting separation needs kappa > s + 1 >= 2 in two dimensions");
        }
        if (!(model.delta > 0.0)) throw ValidationError("delta", "asserting separation needs delta > 0");
        if (model.beta != 0.0) throw ValidationError("beta", "asserting separation needs beta = 0");
      }
      break;
    }
    case ExperimentKind::eps_ladder: {
      if (e.eps_values.size() < 3) throw ValidationError("experiment.eps_values", "at least three values");
      for (double v : e.eps_values) {
        if (!(v > 0.0 && v <= 1.0)) throw ValidationError("experiment.eps_values", "each value in (0, 1]");
        ModelParams q = model;
        q.eps = v;
        q.validate(grid.dim);
      }
      break;
    }
    case ExperimentKind::absorbing:
      if (e.energies.size() != 2) throw ValidationError("experiment.energies", "exactly two energies");
      if (!(e.terminal_tol > 0.0)) throw ValidationError("experiment.terminal_tol", "must be positive");
      break;
    case ExperimentKind::contraction:
      if (!(e.distance > 0.0)) throw ValidationError("experiment.distance", "must be positive");
      if (!(e.fit_end > e.fit_start)) throw ValidationError("experiment.fit_end", "must exceed fit_start");
      if (e.perturbation_modes < 1) throw ValidationError("experiment.perturbation_modes", "must be >= 1");
      break;
    case ExperimentKind::moser_schedule:
      if (e.schedule_dim != 2 && e.schedule_dim != 3) {
        throw ValidationError("experiment.schedule_dim", "must be 2 or 3");
      }
      if (e.schedule_dim == 3 && !(e.iota > 0.0 && e.iota < 1.0)) {
        throw ValidationError("experiment.iota", "must lie in (0, 1)");
      }
      if (!(e.eps_time > 0.0)) throw ValidationError("experiment.eps_time", "must be positive");
      if (e.main_steps < 0) throw ValidationError("experiment.main_steps", "must be >= 0");
      break;
    case ExperimentKind::elliptic_identity:
      if (e.pairs < 1) throw ValidationError("experiment.pairs", "must be >= 1");
      break;
    case ExperimentKind::single_run:
      break;
  }
}

Scenario parse_scenario(std::istream& in, const std::string& name) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& err) {
    throw ConfigError(std::string("malformed INI: ") + err.message() + " (line " +
                      std::to_string(err.line()) + ")");
  }
  const auto& table = key_table();
  Scenario sc;
  sc.name = name;
  static const std::set<std::string> sections = {"model", "grid", "stepper", "experiment"};
  for (const auto& [section, body] : tree) {
    if (!sections.count(section)) {
      if (body.empty() && section == "name") {
        sc.name = trim(body.data());
        continue;
      }
      throw ConfigError("unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      if (section == "experiment" && key == "name") {
        sc.name = trim(value.data());
        continue;
      }
      const auto it = std::find_if(table.begin(), table.end(), [&](const KeySpec& k) {
        return k.section == section && k.key == key;
      });
      if (it == table.end()) throw ConfigError("unknown key " + section + "." + key);
      it->set(sc, value.data());
    }
  }
  sc.validate();
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  return parse_scenario(in, path.stem().string());
}

std::string to_ini(const Scenario& scenario) {
  std::ostringstream os;
  std::string section;
  for (const KeySpec& k : key_table()) {
    if (k.section != section) {
      if (!section.empty()) os << '\n';
      section = k.section;
      os << '[' << section << "]\n";
      if (section == "experiment") os << "name = " << scenario.name << '\n';
    }
    os << k.key << " = " << k.get(scenario) << '\n';
  }
  return os.str();
}

std::string config_reference() {
  const Scenario defaults;
  std::ostringstream os;
  os << "# Scenario configuration reference\n\n"
     << "Scenario files are INI text with the sections below. Every key is optional;\n"
     << "omitted keys take the listed default. Unknown keys are rejected.\n";
  std::string section;
  for (const KeySpec& k : key_table()) {
    if (k.section != section) {
      section = k.section;
      os << "\n## [" << section << "]\n\n| key | default | meaning |\n|---|---|---|\n";
      if (section == "experiment") os << "| name | file stem | scenario name, used for the output directory |\n";
    }
    os << "| " << k.key << " | `" << k.get(defaults) << "` | " << k.meaning << " |\n";
  }
  return os.str();
}

GridFunction initial_field(const Scenario& scenario, const Grid& grid) {
  const InitialCondition& ic = scenario.experiment.initial;
  const double two_pi = 2.0 * std::numbers::pi;
  switch (ic.kind) {
    case InitialCondition::Kind::constant:
      return GridFunction(grid, ic.mean);
    case InitialCondition::Kind::cosine: {
      const double kx = two_pi * ic.modes / grid.length(0);
      if (grid.dim() == 1) {
        return GridFunction::sample(grid, [&](double x, double) { return ic.mean + ic.amplitude * std::cos(kx * x); });
      }
      const double ky = two_pi * ic.modes / grid.length(1);
      return GridFunction::sample(grid, [&](double x, double y) {
        return ic.mean + 0.5 * ic.amplitude * (std::cos(kx * x) + std::cos(ky * y));
      });
    }
    case InitialCondition::Kind::random: {
      std::mt19937_64 rng(scenario.experiment.seed);
      std::uniform_real_distribution<double> dist(-1.0, 1.0);
      GridFunction u(grid);
      for (std::size_t c = 0; c < u.size(); ++c) u[c] = dist(rng);
      const double m = mean(u);
      for (std::size_t c = 0; c < u.size(); ++c) u[c] = ic.mean + ic.amplitude * (u[c] - m);
      return u;
    }
    case InitialCondition::Kind::file: {
      std::ifstream in(ic.path);
      if (!in) throw ConfigError("experiment.initial: cannot open '" + ic.path + "'");
      std::vector<double> values;
      std::string line;
      while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.rfind(',');
        const std::string last = comma == std::string::npos ? line : line.substr(comma + 1);
        try {
          values.push_back(std::stod(last));
        } catch (const std::exception&) {
          if (values.empty()) continue;  // header row
          throw ConfigError("experiment.initial: bad value '" + last + "' in " + ic.path);
        }
      }
      if (values.size() != grid.size()) {
        throw ConfigError("experiment.initial: " + ic.path + " holds " + std::to_string(values.size()) +
                          " values for " + std::to_string(grid.size()) + " cells");
      }
      return GridFunction(grid, std::move(values));
    }
  }
  return GridFunction(grid, ic.mean);
}

std::vector<Scenario> builtin_scenarios() {
  std::vector<Scenario> out;

  // Slow cosine datum: mode 1 on [0, 4] decays at a rate of order one.
  Scenario cosine;
  cosine.model.s = 1.0;
  cosine.model.kappa = 3.0;
  cosine.model.delta = 1.0;
  cosine.model.eps = 1e-3;
  cosine.grid.nx = 128;
  cosine.grid.lx = 4.0;
  cosine.stepper.dt_init = 1e-3;
  cosine.stepper.dt_max = 1e-2;
  cosine.experiment.initial = InitialCondition::parse("cosine(0.5, 1)");
  cosine.experiment.initial.mean = 1.0;
  cosine.experiment.t_final = 1.0;

  {
    Scenario s;
    s.name = "constant_steady";
    s.experiment.property = "constant data are steady: flat energy, mass and floor";
    s.grid.nx = 64;
    s.model.kappa = 3.0;
    s.experiment.initial = InitialCondition::parse("constant");
    s.experiment.initial.mean = 0.5;
    s.experiment.t_final = 0.1;
    out.push_back(s);
  }
  {
    Scenario s;
    s.name = "mass_conservation_long_run";
    s.experiment.property = "exact conservation of the mean over ten thousand steps";
    s.model.s = 1.0;
    s.model.kappa = 6.0;
    s.grid.nx = 256;
    s.grid.lx = 4.0;
    s.stepper = fixed_step(s.stepper, 1e-4);
    s.experiment.initial = InitialCondition::parse("random(0.2)");
    s.experiment.initial.mean = 1.0;
    s.experiment.t_final = 1.0;
    s.experiment.cadence = 100;
    out.push_back(s);
  }
  {
    Scenario s = cosine;
    s.name = "energy_law_cosine";
    s.experiment.property = "energy dissipation law: energy never increases under the convex-concave scheme";
    s.stepper.scheme = Scheme::convex_concave;
    out.push_back(s);
  }
  {
    Scenario s = cosine;
    s.name = "energy_refinement_cosine";
    s.experiment.property = "energy identity residual shrinks under time-step refinement";
    s.stepper = fixed_step(s.stepper, 4e-3);
    s.experiment.t_final = 0.4;
    s.experiment.refine = true;
    out.push_back(s);
  }
  {
    Scenario s = cosine;
    s.name = "entropy_law_cosine";
    s.experiment.property = "entropy law: the entropy plus viscous gradient energy never increases";
    out.push_back(s);
  }
  {
    Scenario s = cosine;
    s.name = "eps_ladder_existence";
    s.experiment.kind = ExperimentKind::eps_ladder;
    s.experiment.property = "existence by regularization: solutions form a Cauchy sequence as eps -> 0";
    s.stepper = fixed_step(s.stepper, 2e-3);
    s.experiment.t_final = 0.5;
    s.experiment.eps_values = {1e-2, 1e-3, 1e-4, 1e-5};
    out.push_back(s);
  }
  {
    Scenario s;
    s.name = "separation_1d_canonical";
    s.experiment.kind = ExperimentKind::separation;
    s.experiment.property = "separation from zero: a film starting near rupture lifts off and stays above a positive floor";
    s.model.s = 1.0;
    s.model.kappa = 6.0;
    s.model.delta = 1.0;
    s.model.eps = 1e-3;
    s.grid.nx = 256;
    s.stepper.dt_init = 1e-6;
    s.stepper.dt_max = 1e-3;
    s.experiment.initial = InitialCondition::parse("cosine(0.495, 1)");
    s.experiment.initial.mean = 0.505;
    s.experiment.t_final = 1.0;
    s.experiment.separation_mode = SeparationMode::assert_floor;
    out.push_back(s);
  }
  {
    Scenario s = out.back();
    s.name = "separation_control_kappa_s1";
    s.experiment.property = "separation control outside the feasible exponent range: floor reported, not asserted";
    s.model.kappa = 2.0;
    s.experiment.separation_mode = SeparationMode::automatic;
    out.push_back(s);
  }
  {
    Scenario s;
    s.name = "absorbing_two_energies";
    s.experiment.kind = ExperimentKind::absorbing;
    s.experiment.property = "dissipativity: runs from very different energies enter the same absorbing set";
    s.model.s = 1.0;
    s.model.kappa = 6.0;
    s.model.eps = 1e-3;
    s.grid.nx = 128;
    s.stepper.dt_init = 1e-7;
    s.stepper.dt_min = 1e-14;
    s.stepper.dt_max = 0.05;
    // Only the mean is used; the cosine amplitudes come from the target energies.
    s.experiment.initial = InitialCondition::parse("constant");
    s.experiment.initial.mean = 0.5;
    s.experiment.t_final = 10.0;
    s.experiment.cadence = 5;
    out.push_back(s);
  }
  {
    Scenario s;
    s.name = "contraction_after_separation";
    s.experiment.kind = ExperimentKind::contraction;
    s.experiment.property = "uniqueness after separation: nearby solutions stay exponentially close";
    s.model.s = 1.0;
    s.model.kappa = 6.0;
    s.model.eps = 1e-3;
    s.grid.nx = 128;
    s.grid.lx = 4.0;
    s.stepper = fixed_step(s.stepper, 2e-3);
    s.experiment.initial = InitialCondition::parse("cosine(0.5, 1)");
    s.experiment.initial.mean = 1.0;
    s.experiment.t_final = 1.0;
    out.push_back(s);
  }
  {
    Scenario s;
    s.name = "moser_schedule_3d";
    s.experiment.kind = ExperimentKind::moser_schedule;
    s.experiment.property = "exponent ladder of the Moser iteration in three dimensions";
    s.model.s = 0.0;
    s.model.kappa = 4.0;
    s.experiment.schedule_dim = 3;
    s.experiment.iota = 0.5;
    out.push_back(s);
  }
  {
    Scenario s;
    s.name = "moser_schedule_2d";
    s.experiment.kind = ExperimentKind::moser_schedule;
    s.experiment.property = "exponent ladder of the Moser iteration in two dimensions";
    s.model.s = 1.0;
    s.model.kappa = 2.5;
    s.experiment.schedule_dim = 2;
    out.push_back(s);
  }
  {
    Scenario s;
    s.name = "ipepa_identity";
    s.experiment.kind = ExperimentKind::elliptic_identity;
    s.experiment.property = "integration by parts for the degenerate operator and its floor-ladder solve";
    s.grid.nx = 64;
    s.experiment.pairs = 100;
    out.push_back(s);
  }
  {
    Scenario s;
    s.name = "dewetting_plateau_2d";
    s.experiment.property = "long-time energy plateau of a forced two-dimensional film";
    s.model.s = 1.0;
    s.model.kappa = 4.0;
    s.model.eps = 1e-2;
    s.model.g = ForcingSpec::parse("cosine(0, 0.5)");
    s.grid.dim = 2;
    s.grid.nx = 24;
    s.grid.lx = 2.0;
    s.stepper.dt_init = 1e-4;
    s.stepper.dt_max = 0.05;
    s.experiment.initial = InitialCondition::parse("random(0.1)");
    s.experiment.initial.mean = 1.0;
    s.experiment.t_final = 5.0;
    s.experiment.cadence = 5;
    out.push_back(s);
  }
  return out;
}

std::optional<Scenario> find_builtin(const std::string& name) {
  for (Scenario& s : builtin_scenarios()) {
    if (s.name == name) return s;
  }
  return std::nullopt;
}

}  // namespace filmflow
