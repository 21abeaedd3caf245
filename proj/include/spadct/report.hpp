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

#ifndef SPADCT_REPORT_HPP
#define SPADCT_REPORT_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "allocation.hpp"
#include "config.hpp"
#include "sim.hpp"

namespace spadct {

inline constexpr std::string_view kVersion = "0.1.0";

// ------------------------------------------------------------------------
// Locale independent number formatting

inline std::string format_fixed(double v, int decimals) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
  if (r.ec != std::errc{}) throw InvalidParameter("format_fixed: value out of range");
  std::string s(buf, r.ptr);
  if (s.find_first_not_of("-0.") == std::string::npos) s = s.substr(s[0] == '-' ? 1 : 0);  // no "-0.0000"
  return s;
}

inline std::string format_scientific(double v, int digits = 6) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, digits);
  return std::string(buf, r.ptr);
}

// Shortest round-trip text, after rounding away binary noise below 1e-9.
inline std::string format_plain(double v) {
  const double rounded = std::round(v * 1e9) / 1e9;
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, rounded == 0.0 ? 0.0 : rounded);
  return std::string(buf, r.ptr);
}

inline std::string format_db(double v) { return format_fixed(v, 4); }

inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xF];
  return s;
}

// ------------------------------------------------------------------------
// Tables

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string body() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
      }
      out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }
};

inline std::string axis_text(SweepAxis axis, double value) {
  return format_plain(axis == SweepAxis::overlap ? value / kDegree : value);
}

inline std::string axis_column(SweepAxis axis) {
  return axis == SweepAxis::overlap ? "overlap_deg" : std::string(to_string(axis));
}

inline CsvTable sweep_table(const SweepResult& r) {
  CsvTable t;
  t.header.push_back(axis_column(r.axis));
  for (auto k : r.kinds) {
    const std::string n(to_string(k));
    t.header.push_back(n + "_nmse_db");
    t.header.push_back(n + "_se_db");
    if (uses_mask(k)) t.header.push_back(n + "_eta");
    if (k == EstimatorKind::ABE_MBE || k == EstimatorKind::ADBE_MDBE) t.header.push_back(n + "_modified_share");
  }
  t.header.push_back("trials");
  for (const auto& row : r.rows) {
    std::vector<std::string> cells{axis_text(r.axis, row.value)};
    for (auto k : r.kinds) {
      const auto& s = row.result.of(k).best;
      cells.push_back(format_db(s.db()));
      cells.push_back(format_db(s.db_se()));
      if (uses_mask(k)) cells.push_back(format_plain(s.variant.eta));
      if (k == EstimatorKind::ABE_MBE || k == EstimatorKind::ADBE_MDBE)
        cells.push_back(format_fixed(s.modified_share, 4));
    }
    cells.push_back(std::to_string(row.result.trials));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

inline CsvTable compaction_csv(const std::vector<CompactionRow>& rows) {
  CsvTable t;
  t.header = {"M", "scn", "diagonal_scn", "first4_fraction"};
  for (const auto& r : rows)
    t.rows.push_back({std::to_string(r.antennas), format_scientific(r.scn), format_scientific(r.diagonal_scn),
                      format_fixed(r.first4_fraction, 6)});
  return t;
}

inline CsvTable profile_csv(const ContaminationProfiles& p) {
  CsvTable t;
  t.header = {"k", "target_before", "contamination_before", "target_after", "contamination_after"};
  for (Eigen::Index k = 0; k < p.target_before.size(); ++k)
    t.rows.push_back({std::to_string(k), format_scientific(p.target_before(k)), format_scientific(p.cont_before(k)),
                      format_scientific(p.target_after(k)), format_scientific(p.cont_after(k))});
  return t;
}

inline CsvTable allocation_comparison_csv(const AllocationComparison& a) {
  CsvTable t;
  t.header = {"estimator", "greedy_nmse_db", "greedy_se_db", "random_nmse_db", "random_se_db", "random_allocations"};
  for (std::size_t k = 0; k < a.greedy.kinds.size(); ++k) {
    const auto& g = a.greedy.kinds[k].best;
    const auto& r = a.random_mean[k].best;
    t.rows.push_back({std::string(to_string(a.greedy.kinds[k].kind)), format_db(g.db()), format_db(g.db_se()),
                      format_db(r.db()), format_db(r.db_se()), std::to_string(a.random_allocations)});
  }
  return t;
}

// One row per user and allocator: sequence, role and the metric of the user's group.
inline CsvTable allocation_groups_csv(const AllocationProblem& p, const AllocationState& be,
                                      const AllocationState& dls) {
  CsvTable t;
  t.header = {"allocator", "sequence", "user", "home", "estimator", "group_metric"};
  for (std::size_t l = 0; l < be.groups.size(); ++l)
    for (int u : be.groups[l])
      t.rows.push_back({"BE-MBE", std::to_string(l), std::to_string(u), std::to_string(p.home[u]),
                        be.roles[u] == AllocationRole::modified ? "MBE" : "BE",
                        format_scientific(allocation_error_metric(p, be.groups[l], be.roles))});
  for (std::size_t l = 0; l < dls.groups.size(); ++l)
    for (int u : dls.groups[l])
      t.rows.push_back({"DLS", std::to_string(l), std::to_string(u), std::to_string(p.home[u]), "DLS",
                        format_scientific(group_separation_metric(p, dls.groups[l]))});
  return t;
}

inline CsvTable adaptive_csv(int layouts, double share) {
  CsvTable t;
  t.header = {"layouts", "mbe_share"};
  t.rows.push_back({std::to_string(layouts), format_fixed(share, 4)});
  return t;
}

// ------------------------------------------------------------------------
// Execution

inline int sequences_for(const ExperimentConfig& e) {
  if (e.sequences > 0) return e.sequences;
  const int users = e.scenario.users();
  return (users + e.scenario.reuse - 1) / e.scenario.reuse;
}

inline SweepResult run_sweep(const ExperimentConfig& e) {
  ScenarioConfig s = e.scenario;
  std::sort(s.eta_grid.begin(), s.eta_grid.end());
  s.eta_grid.erase(std::unique(s.eta_grid.begin(), s.eta_grid.end()), s.eta_grid.end());
  if (e.axis) return sweep(s, *e.axis, e.axis_values);
  return sweep(s, SweepAxis::antennas, {static_cast<double>(s.antennas)});
}

inline CsvTable run_experiment(const ExperimentConfig& e) {
  switch (e.kind) {
    case ExperimentKind::sweep: return sweep_table(run_sweep(e));
    case ExperimentKind::compaction: return compaction_csv(compaction_table(e.compaction_sizes, e.scenario.rho));
    case ExperimentKind::profile: {
      const Scenario sc = build_scenario(e.scenario);
      if (e.profile_user < 0 || e.profile_user >= sc.users()) throw ConfigError("profile.user", "out of range");
      return profile_csv(contamination_profiles(sc, e.profile_user));
    }
    case ExperimentKind::allocation: {
      ScenarioConfig s = e.scenario;
      std::sort(s.eta_grid.begin(), s.eta_grid.end());
      return allocation_comparison_csv(allocation_experiment(s, sequences_for(e), e.random_allocations));
    }
    case ExperimentKind::adaptive:
      return adaptive_csv(e.layouts, adaptive_modified_share(e.scenario, e.layouts, e.max_start));
  }
  throw ConfigError("experiment", "unsupported");
}

// Greedy BE/MBE and DLS allocations of the configured users.
inline CsvTable run_allocation(const ExperimentConfig& e) {
  ScenarioConfig flat = e.scenario;
  flat.groups.clear();
  const Scenario sc = build_scenario(flat);
  const AllocationProblem p = allocation_problem(sc);
  const GreedyOptions opt{sequences_for(e), e.scenario.reuse, e.random_seed_user, e.scenario.seed};
  return allocation_groups_csv(p, greedy_allocate_be(p, opt), greedy_allocate_dls(p, opt));
}

// Hash of the resolved configuration and command. The worker count is excluded: it never
// changes results.
inline std::string manifest_hash(const ExperimentConfig& e, std::string_view command) {
  Json j = experiment_to_json(e);
  j.erase("workers");
  return hex64(fnv1a64(std::string(command) + "\n" + j.dump()));
}

inline std::string render_csv(const CsvTable& t, const std::string& name, const std::string& hash) {
  std::string out = "# spadct " + std::string(kVersion) + " " + name + "\n";
  out += "# manifest " + hash + "\n";
  return out + t.body();
}

// Drops '#' comment lines.
inline std::string csv_body(const std::string& csv) {
  std::string out;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    std::size_t end = csv.find('\n', pos);
    if (end == std::string::npos) end = csv.size();
    if (csv[pos] != '#') out.append(csv, pos, end - pos + 1);
    pos = end + 1;
  }
  return out;
}

}  // namespace spadct

#endif
