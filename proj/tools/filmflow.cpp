// Command-line front end: runs scenarios and summarizes their artifacts.
//
//   filmflow run <config.ini | builtin-name> [-o DIR]
//   filmflow run-all [-j N] [-o DIR]
//   filmflow list
//   filmflow report <run-dir>
//   filmflow config-reference
//
// Exit status: 0 pass, 1 a gated check failed, 2 configuration error.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "filmflow/errors.hpp"
#include "filmflow/scenario.hpp"

namespace fs = std::filesystem;
using namespace filmflow;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kConfig = 2;

fs::path output_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("FILMFLOW_OUTPUT_ROOT"); env && *env) return env;
  return "filmflow_runs";
}

Scenario resolve(const std::string& target) {
  if (fs::exists(target)) return load_scenario(target);
  if (auto s = find_builtin(target)) return *s;
  throw ConfigError("'" + target + "' is neither a config file nor a builtin scenario");
}

void print_checks(std::ostream& os, const std::string& name, const std::vector<CheckReport>& checks) {
  for (const auto& c : checks) {
    const char* tag = !c.asserted ? "INFO" : c.passed ? "PASS" : "FAIL";
    os << tag << ' ' << name << '/' << c.name << ": " << c.message << '\n';
  }
}

int cmd_run(const std::string& target, const std::string& out_flag) {
  const Scenario sc = resolve(target);
  const ScenarioOutcome out = run_scenario(sc, output_root(out_flag));
  print_checks(std::cout, sc.name, out.checks);
  std::cout << (out.exit_code == kPass ? "pass" : "fail") << ": artifacts in " << out.directory.string()
            << '\n';
  return out.exit_code;
}

int cmd_run_all(unsigned jobs, const std::string& out_flag) {
  const std::vector<Scenario> all = builtin_scenarios();
  const fs::path root = output_root(out_flag);
  std::vector<int> codes(all.size(), kPass);
  std::atomic<std::size_t> next{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t i = next++; i < all.size(); i = next++) {
      int code = kPass;
      std::vector<CheckReport> checks;
      try {
        ScenarioOutcome out = run_scenario(all[i], root);
        code = out.exit_code;
        checks = std::move(out.checks);
      } catch (const std::invalid_argument& err) {
        code = kConfig;
        checks.push_back({"config", true, false, err.what(), {}});
      } catch (const std::exception& err) {
        code = kFail;
        checks.push_back({"error", true, false, err.what(), {}});
      }
      codes[i] = code;
      std::lock_guard lock(io);
      print_checks(std::cout, all[i].name, checks);
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(all.size())));
  std::vector<std::thread> pool;
  for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  int worst = kPass;
  for (std::size_t i = 0; i < all.size(); ++i) {
    std::cout << (codes[i] == kPass ? "pass " : "FAIL ") << all[i].name << '\n';
    worst = std::max(worst, codes[i]);
  }
  return worst;
}

int cmd_list() {
  for (const Scenario& s : builtin_scenarios()) {
    std::cout << s.name << "  [" << to_string(s.experiment.kind) << "]  " << s.experiment.property << '\n';
  }
  return kPass;
}

int cmd_report(const fs::path& dir) {
  std::ifstream in(dir / "report.json");
  if (!in) {
    std::cerr << "error: no report.json in " << dir.string() << '\n';
    return kConfig;
  }
  nlohmann::json rep;
  try {
    rep = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& err) {
    std::cerr << "error: corrupt report.json: " << err.what() << '\n';
    return kConfig;
  }
  const std::string name = rep.value("scenario", dir.filename().string());
  std::cout << name << " (" << rep.value("kind", "?") << "): " << rep.value("property", "") << '\n';
  for (const auto& c : rep.value("checks", nlohmann::json::array())) {
    const bool asserted = c.value("asserted", true);
    const bool passed = c.value("passed", false);
    std::cout << "  " << (!asserted ? "INFO" : passed ? "PASS" : "FAIL") << ' ' << c.value("name", "?") << ": "
              << c.value("message", "") << '\n';
  }
  const std::string status = rep.value("status", "fail");
  std::cout << status << '\n';
  return status == "pass" ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and verification runner for degenerate thin-film equations"};
  app.require_subcommand(1);
  std::string out_flag;

  std::string target;
  auto* run = app.add_subcommand("run", "Run a scenario from a config file or the builtin catalog");
  run->add_option("target", target, "config path or builtin scenario name")->required();
  run->add_option("-o,--output", out_flag, "output root (default $FILMFLOW_OUTPUT_ROOT or ./filmflow_runs)");

  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* run_all = app.add_subcommand("run-all", "Run every builtin scenario in a worker pool");
  run_all->add_option("-j,--jobs", jobs, "worker threads");
  run_all->add_option("-o,--output", out_flag, "output root");

  auto* list = app.add_subcommand("list", "List builtin scenarios");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Summarize the artifacts of a finished run");
  report->add_option("dir", report_dir, "run directory")->required();

  auto* reference = app.add_subcommand("config-reference", "Print the configuration reference");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kPass : kConfig;
  }

  try {
    if (*run) return cmd_run(target, out_flag);
    if (*run_all) return cmd_run_all(jobs, out_flag);
    if (*list) return cmd_list();
    if (*report) return cmd_report(report_dir);
    if (*reference) {
      std::cout << config_reference();
      return kPass;
    }
  } catch (const std::invalid_argument& err) {
    // ConfigError and ValidationError both derive from invalid_argument.
    std::cerr << "configuration error: " << err.what() << '\n';
    return kConfig;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kFail;
  }
  return kConfig;
}
