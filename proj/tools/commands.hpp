// SPDX-License-Identifier: Apache-2.0
//
// spadct - spatial DCT channel estimation for multi-cell multi-antenna uplinks
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef SPADCT_TOOLS_COMMANDS_HPP
#define SPADCT_TOOLS_COMMANDS_HPP

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <spadct/config.hpp>
#include <spadct/report.hpp>

#include "validation.hpp"

#ifndef SPADCT_PRESET_DIR
#define SPADCT_PRESET_DIR "presets"
#endif

namespace spadct::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kMissingFile = 2, kBadConfig = 3 };

struct CommonOptions {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> workers;
  std::string out;
  std::string eta;
  std::string estimators;
};

inline std::string preset_dir() {
  if (const char* env = std::getenv("SPADCT_PRESET_DIR"); env && *env) return env;
  return SPADCT_PRESET_DIR;
}

inline std::string resolve_config_path(const CommonOptions& o) {
  if (!o.config.empty() && !o.preset.empty()) throw ConfigError("--preset", "use either --config or --preset");
  if (!o.config.empty()) return o.config;
  if (!o.preset.empty()) return (std::filesystem::path(preset_dir()) / (o.preset + ".json")).string();
  throw ConfigError("--config", "a configuration file or preset is required");
}

inline std::vector<double> parse_number_list(const std::string& text, const std::string& field) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    const char* b = item.data();
    const char* e = item.data() + item.size();
    while (b < e && *b == ' ') ++b;
    const auto r = std::from_chars(b, e, v);
    if (r.ec != std::errc{} || r.ptr != e) throw ConfigError(field, "not a number: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(field, "empty list");
  return out;
}

inline ExperimentConfig load_with_overrides(const CommonOptions& o, std::string& path) {
  path = resolve_config_path(o);
  ExperimentConfig e = load_experiment(path);
  if (o.seed) e.scenario.seed = *o.seed;
  if (o.trials) e.scenario.trials = *o.trials;
  if (o.workers) e.scenario.workers = *o.workers;
  if (!o.eta.empty()) e.scenario.eta_grid = parse_number_list(o.eta, "--eta");
  if (!o.estimators.empty()) e.scenario.estimators = parse_estimator_list(o.estimators);
  return e;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Writes the CSV and its manifest. `out` "-" prints the CSV and skips the manifest.
inline void emit(const ExperimentConfig& e, const std::string& command, const std::string& config_path,
                 const CsvTable& table, const std::string& out, std::ostream& stdout_stream) {
  const std::string hash = manifest_hash(e, command);
  const std::string csv = render_csv(table, e.scenario.name, hash);
  if (out == "-") {
    stdout_stream << csv;
    return;
  }
  const std::string csv_path = out.empty() ? e.scenario.name + (command == "allocate" ? "_groups" : "") + ".csv" : out;
  const std::string manifest_path = csv_path + ".manifest.json";
  {
    std::ofstream f(csv_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + csv_path);
    f << csv;
  }
  Json m;
  m["artifact"] = "spadct";
  m["version"] = std::string(kVersion);
  m["command"] = command;
  m["config_path"] = config_path;
  m["config"] = experiment_to_json(e);
  m["seed"] = e.scenario.seed;
  m["timestamp"] = utc_timestamp();
  m["outputs"] = {csv_path, manifest_path};
  m["hash"] = hash;
  std::ofstream f(manifest_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + manifest_path);
  f << m.dump(2) << '\n';
  stdout_stream << "wrote " << csv_path << " and " << manifest_path << '\n';
}

inline void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config, "Scenario file (JSON)");
  app->add_option("--preset", o.preset, "Bundled preset name, e.g. fig4");
  app->add_option("--seed", o.seed, "Master seed");
  app->add_option("--trials", o.trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
  app->add_option("--out", o.out, "Output CSV path, '-' for stdout");
  app->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
  app->add_option("--eta", o.eta, "Compression ratio, or comma list searched as a grid");
  app->add_option("--estimators", o.estimators, "Comma list of estimators, e.g. LS,BE,ABE-MBE");
}

// Entry point shared by the binary and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatial DCT channel estimation simulator"};
  app.require_subcommand(1);
  CommonOptions run_o, sweep_o, alloc_o;
  std::string axis, values;
  std::vector<std::string> forced;

  auto* run_cmd = app.add_subcommand("run", "Run the experiment described by a configuration");
  add_common(run_cmd, run_o);
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a sweep, optionally overriding its axis");
  add_common(sweep_cmd, sweep_o);
  sweep_cmd->add_option("--axis", axis, "M, eta, K, overlap (degrees), uncertainty or power_index");
  sweep_cmd->add_option("--values", values, "Comma list of axis values");
  auto* alloc_cmd = app.add_subcommand("allocate", "Greedy training sequence allocation");
  add_common(alloc_cmd, alloc_o);
  auto* val_cmd = app.add_subcommand("validate", "Run the analytic oracle checks");
  val_cmd->add_option("--force-fail", forced, "Report the named check as failed (test hook)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*val_cmd) {
      const auto rep = validation::run_checks(forced);
      int failed = 0;
      for (const auto& [name, r] : rep.results) {
        out << (r.ok ? "PASS " : "FAIL ") << name << ": " << r.detail << '\n';
        failed += !r.ok;
      }
      out << rep.results.size() - failed << "/" << rep.results.size() << " checks passed\n";
      if (failed) {
        err << "failed checks:";
        for (const auto& [name, r] : rep.results)
          if (!r.ok) err << ' ' << name;
        err << '\n';
        return kFailure;
      }
      return kOk;
    }

    std::string path;
    if (*run_cmd) {
      const ExperimentConfig e = load_with_overrides(run_o, path);
      emit(e, "run", path, run_experiment(e), run_o.out, out);
    } else if (*sweep_cmd) {
      ExperimentConfig e = load_with_overrides(sweep_o, path);
      if (e.kind != ExperimentKind::sweep) throw ConfigError("experiment", "sweep needs a sweep experiment");
      if (!axis.empty()) {
        e.axis = parse_axis(axis);
        if (!e.axis) throw ConfigError("--axis", "unknown axis '" + axis + "'");
        if (values.empty()) throw ConfigError("--values", "required with --axis");
      }
      if (!values.empty()) {
        if (!e.axis) throw ConfigError("--axis", "required with --values");
        e.axis_values = parse_number_list(values, "--values");
        if (*e.axis == SweepAxis::overlap)
          for (double& v : e.axis_values) v *= kDegree;
      }
      emit(e, "sweep", path, run_experiment(e), sweep_o.out, out);
    } else if (*alloc_cmd) {
      const ExperimentConfig e = load_with_overrides(alloc_o, path);
      emit(e, "allocate", path, run_allocation(e), alloc_o.out, out);
    }
    return kOk;
  } catch (const MissingFile& e) {
    err << "error: " << e.what() << '\n';
    return kMissingFile;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kBadConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace spadct::cli

#endif
