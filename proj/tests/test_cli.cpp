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

#include <gtest/gtest.h>

#include <clocale>
#include <filesystem>
#include <fstream>
#include <locale>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <spadct/config.hpp>
#include <spadct/report.hpp>

#include "commands.hpp"

namespace spadct {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "spadct");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string l;
  while (std::getline(ss, l)) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string c;
  while (std::getline(ss, c, ',')) out.push_back(c);
  return out;
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("spadct_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                         "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name, const std::string& content = "") const {
    const auto p = (path_ / name).string();
    if (!content.empty()) std::ofstream(p) << content;
    return p;
  }

 private:
  fs::path path_;
};

const char* kSmallSweep = R"({
  "name": "small",
  "antennas": 6,
  "theta_start_deg": [[10, 25], [20, 35]],
  "span_deg": 20,
  "trials": 20,
  "gamma_draws": 50,
  "probe_trials": 10,
  "eta": [0.5, 1.0],
  "axis": {"name": "M", "values": [4, 6]}
})";

// ------------------------------------------------------------------------
// Configuration

TEST(Config, DegreesBecomeRadians) {
  const auto e = parse_experiment(kSmallSweep);
  EXPECT_NEAR(e.scenario.theta_start[1][1], 35 * kDegree, 1e-15);
  EXPECT_NEAR(e.scenario.span, 20 * kDegree, 1e-15);
  EXPECT_EQ(*e.axis, SweepAxis::antennas);
  EXPECT_EQ(e.axis_values, (std::vector<double>{4, 6}));
}

TEST(Config, OverlapAxisValuesInDegrees) {
  const auto e = parse_experiment(R"({"theta_start_deg": [[10, 30], [70, 85]], "span_deg": 8,
                                      "axis": {"name": "overlap", "values": [0, 8]}})");
  EXPECT_NEAR(e.axis_values[1], 8 * kDegree, 1e-15);
}

TEST(Config, SyntaxErrorReportsLineAndColumn) {
  try {
    parse_experiment("{\n  \"antennas\": 4,\n  \"cells\": x\n}", "f.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "f.json:3:12");
  }
}

TEST(Config, FieldErrorsCarryPaths) {
  auto field = [](const std::string& text) {
    try {
      parse_experiment(text);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string();
  };
  EXPECT_EQ(field(R"({"antenas": 4})"), "antenas");
  EXPECT_EQ(field(R"({"antennas": "4"})"), "antennas");
  EXPECT_EQ(field(R"({"theta_start_deg": [[10, "a"]]})"), "theta_start_deg[0][1]");
  EXPECT_EQ(field(R"({"estimators": ["LS", "XYZ"]})"), "estimators[1]");
  EXPECT_EQ(field(R"({"axis": {"name": "Q", "values": [1]}})"), "axis.name");
  EXPECT_EQ(field(R"({"axis": {"name": "M", "value": [1]}})"), "axis.value");
  EXPECT_EQ(field(R"({"correlation": "laplace"})"), "correlation");
}

TEST(Config, EtaNumberIsFixed) {
  EXPECT_EQ(parse_experiment(R"({"eta": 0.4})").scenario.eta_grid, (std::vector<double>{0.4}));
}

TEST(Config, RoundTripThroughCanonicalJson) {
  const auto a = parse_experiment(kSmallSweep);
  const auto b = experiment_from_json(experiment_to_json(a));
  EXPECT_EQ(experiment_to_json(a).dump(), experiment_to_json(b).dump());
}

TEST(Config, EstimatorList) {
  EXPECT_EQ(parse_estimator_list("LS, ABE-MBE,ADBE-MDBE"),
            (std::vector<EstimatorKind>{EstimatorKind::LS, EstimatorKind::ABE_MBE, EstimatorKind::ADBE_MDBE}));
  EXPECT_THROW(parse_estimator_list("LS,foo"), ConfigError);
  EXPECT_THROW(parse_estimator_list(""), ConfigError);
}

TEST(Config, EveryPresetParsesAndResolves) {
  for (int i = 1; i <= 9; ++i) {
    const std::string path = cli::preset_dir() + "/fig" + std::to_string(i) + ".json";
    const auto e = load_experiment(path);
    EXPECT_EQ(e.scenario.name, "fig" + std::to_string(i));
    if (e.kind == ExperimentKind::sweep) {
      for (double v : e.axis_values) EXPECT_NO_THROW(build_scenario(apply_axis(e.scenario, *e.axis, v))) << path;
    }
  }
}

// ------------------------------------------------------------------------
// Formatting

TEST(Format, FixedDecimals) {
  EXPECT_EQ(format_db(-3.14159265), "-3.1416");
  EXPECT_EQ(format_db(12.0), "12.0000");
  EXPECT_EQ(format_db(-0.00001), "0.0000");
  EXPECT_EQ(format_plain(0.30000000000000004), "0.3");
  EXPECT_EQ(format_plain(8 * kDegree / kDegree), "8");
}

struct CommaDecimal : std::numpunct<char> {
  char do_decimal_point() const override { return ','; }
  char do_thousands_sep() const override { return '.'; }
  std::string do_grouping() const override { return "\3"; }
};

TEST(Format, IndependentOfLocale) {
  const std::locale saved_cpp = std::locale::global(std::locale(std::locale::classic(), new CommaDecimal));
  const char* old = std::setlocale(LC_ALL, nullptr);
  const std::string saved_c = old ? old : "C";
  for (const char* name : {"de_DE.UTF-8", "de_DE.utf8", "fr_FR.UTF-8", "fr_FR.utf8"})
    if (std::setlocale(LC_ALL, name)) break;
  EXPECT_EQ(format_db(1234.5), "1234.5000");
  EXPECT_EQ(format_scientific(1234.5), "1.234500e+03");
  EXPECT_EQ(format_plain(0.25), "0.25");
  std::setlocale(LC_ALL, saved_c.c_str());
  std::locale::global(saved_cpp);
}

TEST(Format, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xaf63dc4c8601ec8cULL), "af63dc4c8601ec8c");
}

TEST(Format, CsvBodyDropsComments) {
  EXPECT_EQ(csv_body("# x\n# y\na,b\n1,2\n"), "a,b\n1,2\n");
}

TEST(Format, ManifestHashIgnoresWorkers) {
  auto e = parse_experiment(kSmallSweep);
  const auto a = manifest_hash(e, "run");
  e.scenario.workers = 4;
  EXPECT_EQ(a, manifest_hash(e, "run"));
  e.scenario.seed = 99;
  EXPECT_NE(a, manifest_hash(e, "run"));
  EXPECT_NE(a, manifest_hash(parse_experiment(kSmallSweep), "sweep"));
}

// ------------------------------------------------------------------------
// Commands

TEST(Cli, MissingFileExitsTwoWithPath) {
  const auto r = cli({"run", "--config", "/no/such/file.json"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("/no/such/file.json"), std::string::npos);
}

TEST(Cli, InvalidScenarioIsNonzero) {
  TempDir d;
  const auto path = d.file("bad.json", R"({"theta_start_deg": [[89]], "cells": 1})");
  const auto r = cli({"run", "--config", path});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("theta_start[0][0]"), std::string::npos);
}

TEST(Cli, ParseErrorNamesLine) {
  TempDir d;
  const auto path = d.file("bad.json", "{\n\"antennas\": ,\n}");
  const auto r = cli({"run", "--config", path});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("bad.json:2:"), std::string::npos);
}

TEST(Cli, ValidatePassesWithTenOrMoreChecks) {
  const auto r = cli({"validate"});
  EXPECT_EQ(r.code, 0) << r.out;
  int checks = 0;
  for (const auto& l : lines(r.out)) checks += l.rfind("PASS ", 0) == 0;
  EXPECT_GE(checks, 10);
}

TEST(Cli, ForcedFailureNamesCheck) {
  const auto r = cli({"validate", "--force-fail", "dct_orthonormal"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("FAIL dct_orthonormal"), std::string::npos);
  EXPECT_NE(r.err.find("dct_orthonormal"), std::string::npos);
}

TEST(Cli, Fig4HeaderHasEveryEstimator) {
  const auto r = cli({"run", "--preset", "fig4", "--trials", "1", "--out", "-"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ls = lines(r.out);
  ASSERT_GE(ls.size(), 4u);
  EXPECT_EQ(ls[0].rfind("# ", 0), 0u);
  EXPECT_EQ(ls[1].rfind("# manifest ", 0), 0u);
  const auto header = split(ls[2]);
  EXPECT_EQ(header.front(), "M");
  const std::set<std::string> cols(header.begin(), header.end());
  for (auto k : kAllKinds) {
    EXPECT_TRUE(cols.count(std::string(to_string(k)) + "_nmse_db")) << to_string(k);
    EXPECT_TRUE(cols.count(std::string(to_string(k)) + "_se_db")) << to_string(k);
  }
  EXPECT_EQ(ls.size(), 3u + 8u);  // one row per antenna count
  EXPECT_EQ(split(ls[3]).back(), "1");  // one trial
}

TEST(Cli, WritesCsvAndManifestThatReferenceEachOther) {
  TempDir d;
  const auto cfg = d.file("s.json", kSmallSweep);
  const auto out = d.file("out.csv");
  const auto r = cli({"run", "--config", cfg, "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = read_text_file(out);
  const Json m = Json::parse(read_text_file(out + ".manifest.json"));
  EXPECT_NE(csv.find("# manifest " + m["hash"].get<std::string>()), std::string::npos);
  EXPECT_EQ(m["config_path"], cfg);
  EXPECT_EQ(m["outputs"][0], out);
  EXPECT_EQ(m["seed"], 1);
  EXPECT_TRUE(m.contains("timestamp"));
  EXPECT_EQ(m["config"]["antennas"], 6);
}

TEST(Cli, BodiesIdenticalAcrossWorkers) {
  TempDir d;
  const auto cfg = d.file("s.json", kSmallSweep);
  const auto a = cli({"run", "--config", cfg, "--workers", "1", "--out", "-"});
  const auto b = cli({"run", "--config", cfg, "--workers", "3", "--out", "-"});
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, OverridesApply) {
  TempDir d;
  const auto cfg = d.file("s.json", kSmallSweep);
  const auto r = cli({"run", "--config", cfg, "--estimators", "LS,DLS", "--eta", "0.5", "--seed", "3", "--out", "-"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ls = lines(r.out);
  EXPECT_EQ(ls[2], "M,LS_nmse_db,LS_se_db,DLS_nmse_db,DLS_se_db,DLS_eta,trials");
  EXPECT_EQ(split(ls[3])[5], "0.5");
}

TEST(Cli, SweepAxisOverride) {
  TempDir d;
  const auto cfg = d.file("s.json", kSmallSweep);
  const auto r = cli({"sweep", "--config", cfg, "--estimators", "LS", "--axis", "uncertainty", "--values", "0,0.2",
                      "--out", "-"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 5u);
  EXPECT_EQ(split(ls[2])[0], "uncertainty");
  EXPECT_EQ(split(ls[3])[1], split(ls[4])[1]);  // LS ignores covariance errors
  // --values alone replaces the values of the configured axis
  const auto v = cli({"sweep", "--config", cfg, "--estimators", "LS", "--values", "5", "--out", "-"});
  ASSERT_EQ(v.code, 0) << v.err;
  EXPECT_EQ(lines(v.out).size(), 4u);
  const auto flat = d.file("flat.json", R"({"antennas": 4, "theta_start_deg": [[10, 30], [20, 40]]})");
  EXPECT_NE(cli({"sweep", "--config", flat, "--values", "1", "--out", "-"}).code, 0);
}

TEST(Cli, AllocateFig8GivesFourPairs) {
  const auto r = cli({"allocate", "--preset", "fig8", "--out", "-"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::map<std::pair<std::string, std::string>, int> sizes;
  std::set<std::string> users;
  const auto ls = lines(r.out);
  EXPECT_EQ(ls[2], "allocator,sequence,user,home,estimator,group_metric");
  for (std::size_t i = 3; i < ls.size(); ++i) {
    const auto c = split(ls[i]);
    ++sizes[{c[0], c[1]}];
    if (c[0] == "DLS") users.insert(c[2]);
  }
  EXPECT_EQ(sizes.size(), 8u);  // 4 sequences for each allocator
  for (const auto& [k, n] : sizes) EXPECT_EQ(n, 2);
  EXPECT_EQ(users.size(), 8u);
}

TEST(Cli, AllocateSingletonGroupsWithoutReuse) {
  TempDir d;
  const auto cfg = d.file("k1.json", R"({"antennas": 8, "cells": 2, "reuse": 1,
      "theta_start_deg": [[10, 40, 20], [30, 5, 50]], "home": [0, 0, 1]})");
  const auto r = cli({"allocate", "--config", cfg, "--out", "-"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto e = load_experiment(cfg);
  const Scenario sc = build_scenario(e.scenario);
  const auto p = allocation_problem(sc);
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 3u + 6u);
  for (std::size_t i = 3; i < ls.size(); ++i) {
    const auto c = split(ls[i]);
    if (c[0] != "BE-MBE") continue;
    const int u = std::stoi(c[2]);
    // alone on its sequence: the metric is the interference-free BE error
    const double alone = be_mse_closed(p.own(u), {p.own(u)}, p.noise).value;
    EXPECT_NEAR(std::stod(c[5]), alone, 1e-6 * alone + 1e-12);
  }
}

TEST(Cli, RequiresConfigOrPreset) {
  EXPECT_NE(cli({"run"}).code, 0);
  EXPECT_NE(cli({"run", "--config", "a", "--preset", "fig1"}).code, 0);
  EXPECT_NE(cli({}).code, 0);
}

}  // namespace
}  // namespace spadct
