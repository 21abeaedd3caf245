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

#ifndef SPADCT_CONFIG_HPP
#define SPADCT_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "estimators.hpp"
#include "sim.hpp"

namespace spadct {

using Json = nlohmann::ordered_json;

enum class ExperimentKind { sweep, compaction, profile, allocation, adaptive };

inline std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::sweep: return "sweep";
    case ExperimentKind::compaction: return "compaction";
    case ExperimentKind::profile: return "profile";
    case ExperimentKind::allocation: return "allocation";
    case ExperimentKind::adaptive: return "adaptive";
  }
  return "?";
}

inline std::string_view to_string(CorrelationKind k) {
  switch (k) {
    case CorrelationKind::uniform: return "uniform";
    case CorrelationKind::gaussian: return "gaussian";
    case CorrelationKind::exponential: return "exponential";
  }
  return "?";
}

// A scenario plus what to do with it. Angles are stored in radians.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::sweep;
  ScenarioConfig scenario;
  std::optional<SweepAxis> axis;
  std::vector<double> axis_values;
  // compaction
  std::vector<int> compaction_sizes{4, 8, 16, 32, 64, 128, 256};
  // profile
  int profile_user = 0;
  // allocation
  int sequences = 0;  // 0: ceil(users / reuse)
  int random_allocations = 100;
  bool random_seed_user = false;
  // adaptive
  int layouts = 200;
  double max_start = 50.0 * kDegree;
};

// Parses a comma separated list of estimator acronyms.
inline std::vector<EstimatorKind> parse_estimator_list(const std::string& text) {
  std::vector<EstimatorKind> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    const std::string name = item.substr(b, e - b + 1);
    const auto k = parse_kind(name);
    if (!k) throw ConfigError("estimators", "unknown estimator '" + name + "'");
    out.push_back(*k);
  }
  if (out.empty()) throw ConfigError("estimators", "empty list");
  return out;
}

namespace detail {

class JsonReader {
 public:
  JsonReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }
  const Json& raw(const std::string& key) const {
    used_.insert(key);
    return j_.at(key);
  }

  template <class T>
  void get(const std::string& key, T& out) const {
    if (!has(key)) return;
    out = convert<T>(raw(key), at(key));
  }

  template <class T>
  static T convert(const Json& v, const std::string& field) {
    try {
      if constexpr (std::is_same_v<T, int>) {
        if (!v.is_number_integer()) throw ConfigError(field, "expected an integer");
        return v.get<int>();
      } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
          throw ConfigError(field, "expected a non-negative integer");
        return v.get<std::uint64_t>();
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(field, "expected a number");
        return v.get<double>();
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(field, "expected true or false");
        return v.get<bool>();
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(field, "expected a string");
        return v.get<std::string>();
      } else {
        if (!v.is_array()) throw ConfigError(field, "expected an array");
        T out;
        for (std::size_t i = 0; i < v.size(); ++i)
          out.push_back(convert<typename T::value_type>(v[i], field + "[" + std::to_string(i) + "]"));
        return out;
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(field, e.what());
    }
  }

  // Unknown keys are almost always typos.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
  }

 private:
  const Json& j_;
  std::string path_;
  mutable std::set<std::string> used_;
};

inline std::vector<double> degrees(std::vector<double> v) {
  for (double& x : v) x *= kDegree;
  return v;
}

}  // namespace detail

inline ExperimentConfig experiment_from_json(const Json& j) {
  detail::JsonReader r(j, "");
  ExperimentConfig e;
  ScenarioConfig& s = e.scenario;

  std::string kind = "sweep";
  r.get("experiment", kind);
  if (kind == "sweep") e.kind = ExperimentKind::sweep;
  else if (kind == "compaction") e.kind = ExperimentKind::compaction;
  else if (kind == "profile") e.kind = ExperimentKind::profile;
  else if (kind == "allocation") e.kind = ExperimentKind::allocation;
  else if (kind == "adaptive") e.kind = ExperimentKind::adaptive;
  else throw ConfigError("experiment", "unknown experiment '" + kind + "'");

  r.get("name", s.name);
  r.get("antennas", s.antennas);
  r.get("cells", s.cells);
  r.get("reuse", s.reuse);
  r.get("tau", s.tau);
  r.get("power_db", s.power_db);
  r.get("sigma2", s.sigma2);
  r.get("beta", s.beta);
  r.get("spacing", s.spacing);
  std::string corr = "uniform";
  r.get("correlation", corr);
  if (corr == "uniform") s.correlation = CorrelationKind::uniform;
  else if (corr == "gaussian") s.correlation = CorrelationKind::gaussian;
  else if (corr == "exponential") s.correlation = CorrelationKind::exponential;
  else throw ConfigError("correlation", "expected uniform, gaussian or exponential");
  r.get("rho", s.rho);

  std::vector<std::vector<double>> theta;
  r.get("theta_start_deg", theta);
  s.theta_start.clear();
  for (auto& row : theta) s.theta_start.push_back(detail::degrees(row));
  double span = 20.0, overlap = 0.0;
  r.get("span_deg", span);
  r.get("overlap_deg", overlap);
  s.span = span * kDegree;
  s.overlap = overlap * kDegree;
  r.get("place_by_overlap", s.place_by_overlap);
  r.get("home", s.home);
  r.get("groups", s.groups);

  if (r.has("eta")) {
    const Json& eta = r.raw("eta");
    if (eta.is_number()) s.eta_grid = {eta.get<double>()};
    else s.eta_grid = detail::JsonReader::convert<std::vector<double>>(eta, "eta");
  }
  r.get("power_index", s.power_index);
  r.get("trials", s.trials);
  r.get("seed", s.seed);
  r.get("uncertainty", s.uncertainty);
  r.get("gamma_draws", s.gamma_draws);
  r.get("probe_trials", s.probe_trials);
  if (r.has("estimators")) {
    const auto names = detail::JsonReader::convert<std::vector<std::string>>(r.raw("estimators"), "estimators");
    s.estimators.clear();
    for (std::size_t i = 0; i < names.size(); ++i) {
      const auto k = parse_kind(names[i]);
      if (!k) throw ConfigError("estimators[" + std::to_string(i) + "]", "unknown estimator '" + names[i] + "'");
      s.estimators.push_back(*k);
    }
  }
  r.get("workers", s.workers);

  if (r.has("axis")) {
    detail::JsonReader a(r.raw("axis"), "axis");
    std::string name;
    a.get("name", name);
    e.axis = parse_axis(name);
    if (!e.axis) throw ConfigError("axis.name", "unknown axis '" + name + "'");
    a.get("values", e.axis_values);
    if (*e.axis == SweepAxis::overlap) e.axis_values = detail::degrees(e.axis_values);
    a.finish();
  }
  if (r.has("compaction")) {
    detail::JsonReader c(r.raw("compaction"), "compaction");
    c.get("sizes", e.compaction_sizes);
    c.finish();
  }
  if (r.has("profile")) {
    detail::JsonReader c(r.raw("profile"), "profile");
    c.get("user", e.profile_user);
    c.finish();
  }
  if (r.has("allocation")) {
    detail::JsonReader c(r.raw("allocation"), "allocation");
    c.get("sequences", e.sequences);
    c.get("random_allocations", e.random_allocations);
    c.get("random_seed_user", e.random_seed_user);
    c.finish();
  }
  if (r.has("adaptive")) {
    detail::JsonReader c(r.raw("adaptive"), "adaptive");
    c.get("layouts", e.layouts);
    double deg = e.max_start / kDegree;
    c.get("max_start_deg", deg);
    e.max_start = deg * kDegree;
    c.finish();
  }
  r.finish();

  if (e.kind == ExperimentKind::sweep && e.axis && e.axis_values.empty())
    throw ConfigError("axis.values", "must not be empty");
  return e;
}

// Canonical JSON of the resolved configuration (degrees, every field present).
inline Json experiment_to_json(const ExperimentConfig& e) {
  const ScenarioConfig& s = e.scenario;
  Json j;
  j["experiment"] = std::string(to_string(e.kind));
  j["name"] = s.name;
  j["antennas"] = s.antennas;
  j["cells"] = s.cells;
  j["reuse"] = s.reuse;
  j["tau"] = s.tau;
  j["power_db"] = s.power_db;
  j["sigma2"] = s.sigma2;
  j["beta"] = s.beta;
  j["spacing"] = s.spacing;
  j["correlation"] = std::string(to_string(s.correlation));
  j["rho"] = s.rho;
  Json theta = Json::array();
  for (const auto& row : s.theta_start) {
    Json jr = Json::array();
    for (double t : row) jr.push_back(t / kDegree);
    theta.push_back(jr);
  }
  j["theta_start_deg"] = theta;
  j["span_deg"] = s.span / kDegree;
  j["overlap_deg"] = s.overlap / kDegree;
  j["place_by_overlap"] = s.place_by_overlap;
  j["home"] = s.home;
  j["groups"] = s.groups;
  j["eta"] = s.eta_grid;
  j["power_index"] = s.power_index;
  j["trials"] = s.trials;
  j["seed"] = s.seed;
  j["uncertainty"] = s.uncertainty;
  j["gamma_draws"] = s.gamma_draws;
  j["probe_trials"] = s.probe_trials;
  Json est = Json::array();
  for (auto k : s.estimators) est.push_back(std::string(to_string(k)));
  j["estimators"] = est;
  j["workers"] = s.workers;
  if (e.axis) {
    std::vector<double> v = e.axis_values;
    if (*e.axis == SweepAxis::overlap)
      for (double& x : v) x /= kDegree;
    j["axis"] = Json{{"name", std::string(to_string(*e.axis))}, {"values", v}};
  }
  switch (e.kind) {
    case ExperimentKind::compaction: j["compaction"] = Json{{"sizes", e.compaction_sizes}}; break;
    case ExperimentKind::profile: j["profile"] = Json{{"user", e.profile_user}}; break;
    case ExperimentKind::allocation:
      j["allocation"] = Json{{"sequences", e.sequences},
                             {"random_allocations", e.random_allocations},
                             {"random_seed_user", e.random_seed_user}};
      break;
    case ExperimentKind::adaptive:
      j["adaptive"] = Json{{"layouts", e.layouts}, {"max_start_deg", e.max_start / kDegree}};
      break;
    case ExperimentKind::sweep: break;
  }
  return j;
}

// Line and column of a byte offset, both 1-based.
inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline ExperimentConfig parse_experiment(const std::string& text, const std::string& origin = "<string>") {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col), "JSON syntax error");
  }
  return experiment_from_json(j);
}

class MissingFile : public std::runtime_error {
 public:
  explicit MissingFile(const std::string& path) : std::runtime_error("cannot read file: " + path), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ExperimentConfig load_experiment(const std::string& path) { return parse_experiment(read_text_file(path), path); }

}  // namespace spadct

#endif
