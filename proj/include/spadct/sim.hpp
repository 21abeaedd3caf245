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

#ifndef SPADCT_SIM_HPP
#define SPADCT_SIM_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "allocation.hpp"
#include "dct.hpp"
#include "estimators.hpp"
#include "linalg.hpp"
#include "model.hpp"
#include "rng.hpp"

namespace spadct {

inline constexpr double kDegree = kPi / 180.0;

enum class CorrelationKind { uniform, gaussian, exponential };

inline std::vector<double> default_eta_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 10; ++i) g.push_back(i / 10.0);
  return g;
}

inline std::vector<EstimatorKind> all_estimators() { return {kAllKinds.begin(), kAllKinds.end()}; }

// Full description of a Monte Carlo experiment. Angles are in radians.
struct ScenarioConfig {
  std::string name = "scenario";
  int antennas = 10;                                  // M
  int cells = 2;                                      // C, number of base stations
  int reuse = 2;                                      // K, users per training sequence
  int tau = 0;                                        // sequence length, 0: number of sequences
  double power_db = 0.0;                              // P
  double sigma2 = 0.1;
  double beta = 1.0;
  double spacing = 0.5;                               // d / lambda
  CorrelationKind correlation = CorrelationKind::uniform;
  double rho = 0.9;                                   // |rho| of the exponential model
  std::vector<std::vector<double>> theta_start;       // [station][user], lower edge of each spread
  double span = 20.0 * kDegree;                       // Delta theta
  double overlap = 0.0;                               // Delta_o theta
  bool place_by_overlap = false;                      // move interferers to realise `overlap`
  std::vector<int> home;                              // serving station per user, empty: user u -> station u
  std::vector<std::vector<int>> groups;               // users per sequence, empty: blocks of `reuse`
  std::vector<double> eta_grid = default_eta_grid();  // one entry: fixed eta
  int power_index = kDefaultPowerIndex;               // i of the modified estimators
  int trials = 1000;
  std::uint64_t seed = 1;
  double uncertainty = 0.0;                           // epsilon_cov
  int gamma_draws = 1000;
  int probe_trials = 100;
  std::vector<EstimatorKind> estimators = all_estimators();
  int workers = 1;

  int users() const { return theta_start.empty() ? 0 : static_cast<int>(theta_start.front().size()); }
};

// Resolved scenario: covariances of every (user, station) link with link gains applied.
struct Scenario {
  ScenarioConfig config;
  UlaGeometry geometry;
  DctBasis basis;
  std::vector<int> home;
  std::vector<std::vector<int>> groups;
  std::vector<int> group_of;
  std::vector<std::vector<CovarianceMatrix>> cov;  // [user][station]
  std::vector<std::vector<double>> theta;          // resolved lower edges [station][user]
  std::vector<TrainingSequence> sequences;
  LinkGains gains;
  double noise = 0.0;                              // correlator noise sigma^2 / ||s||^2

  int users() const { return static_cast<int>(cov.size()); }
  int cells() const { return config.cells; }

  // Covariances of the pilot group of `user` at its serving station; `target` receives the index of the user.
  std::vector<CovarianceMatrix> group_at_home(int user, std::size_t& target) const {
    std::vector<CovarianceMatrix> out;
    const int c = home[user];
    for (int m : groups[group_of[user]]) {
      if (m == user) target = out.size();
      out.push_back(cov[m][c]);
    }
    return out;
  }
};

// ------------------------------------------------------------------------
// Scenario construction

namespace detail {

inline std::string idx(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

inline void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

// Moves every interferer at station c so that its spread overlaps the spread of the user served by c
// by exactly `overlap`, keeping it on the same side of that user.
inline void place_interferers(const ScenarioConfig& cfg, const std::vector<int>& home,
                              std::vector<std::vector<double>>& theta) {
  for (int c = 0; c < cfg.cells; ++c) {
    int target = -1;
    for (std::size_t u = 0; u < home.size(); ++u)
      if (home[u] == c) {
        require(target < 0, "place_by_overlap", "needs exactly one served user per station");
        target = static_cast<int>(u);
      }
    if (target < 0) continue;
    const double t = theta[c][target];
    for (std::size_t u = 0; u < home.size(); ++u) {
      if (static_cast<int>(u) == target) continue;
      theta[c][u] = theta[c][u] >= t ? t + cfg.span - cfg.overlap : t - cfg.span + cfg.overlap;
    }
  }
}

}  // namespace detail

inline Scenario build_scenario(const ScenarioConfig& cfg) {
  using detail::require;
  require(cfg.antennas >= 1, "antennas", "must be >= 1");
  require(cfg.cells >= 1, "cells", "must be >= 1");
  require(cfg.reuse >= 1, "reuse", "must be >= 1");
  require(cfg.spacing > 0.0, "spacing", "must be > 0");
  require(cfg.sigma2 >= 0.0 && std::isfinite(cfg.sigma2), "sigma2", "must be finite and >= 0");
  require(cfg.beta > 0.0, "beta", "must be > 0");
  require(cfg.trials >= 1, "trials", "must be >= 1");
  require(cfg.span >= 0.0, "span", "must be >= 0");
  require(cfg.overlap >= 0.0 && cfg.overlap <= cfg.span + 1e-12, "overlap", "must lie in [0, span]");
  require(cfg.uncertainty >= 0.0, "uncertainty", "must be >= 0");
  require(cfg.power_index >= 0, "power_index", "must be >= 0");
  require(cfg.gamma_draws >= 1, "gamma_draws", "must be >= 1");
  require(cfg.probe_trials >= 1, "probe_trials", "must be >= 1");
  require(cfg.workers >= 1, "workers", "must be >= 1");
  require(!cfg.estimators.empty(), "estimators", "at least one estimator is required");
  require(!cfg.eta_grid.empty(), "eta_grid", "must not be empty");
  for (std::size_t i = 0; i < cfg.eta_grid.size(); ++i)
    require(cfg.eta_grid[i] > 0.0 && cfg.eta_grid[i] <= 1.0, detail::idx("eta_grid", i), "must lie in (0, 1]");
  require(static_cast<int>(cfg.theta_start.size()) == cfg.cells, "theta_start", "needs one row per station");
  const int users = cfg.users();
  require(users >= 1, "theta_start", "needs at least one user");
  for (std::size_t c = 0; c < cfg.theta_start.size(); ++c)
    require(static_cast<int>(cfg.theta_start[c].size()) == users, detail::idx("theta_start", c),
            "every row needs one angle per user");
  require(cfg.correlation != CorrelationKind::exponential || (cfg.rho >= 0.0 && cfg.rho <= 1.0), "rho",
          "must lie in [0, 1]");

  Scenario sc;
  sc.config = cfg;
  sc.geometry = UlaGeometry{cfg.antennas, cfg.spacing, 1};
  sc.basis = DctBasis(cfg.antennas);

  if (cfg.home.empty()) {
    require(users == cfg.cells, "home", "required unless there is one user per station");
    for (int u = 0; u < users; ++u) sc.home.push_back(u);
  } else {
    require(static_cast<int>(cfg.home.size()) == users, "home", "needs one entry per user");
    for (std::size_t u = 0; u < cfg.home.size(); ++u)
      require(cfg.home[u] >= 0 && cfg.home[u] < cfg.cells, detail::idx("home", u), "station index out of range");
    sc.home = cfg.home;
  }

  if (cfg.groups.empty()) {
    for (int u = 0; u < users; u += cfg.reuse) {
      std::vector<int> g;
      for (int m = u; m < std::min(users, u + cfg.reuse); ++m) g.push_back(m);
      sc.groups.push_back(std::move(g));
    }
  } else {
    std::vector<int> seen(users, 0);
    for (std::size_t g = 0; g < cfg.groups.size(); ++g) {
      require(!cfg.groups[g].empty(), detail::idx("groups", g), "empty group");
      require(static_cast<int>(cfg.groups[g].size()) <= cfg.reuse, detail::idx("groups", g),
              "group larger than the reuse factor");
      for (int u : cfg.groups[g]) {
        require(u >= 0 && u < users, detail::idx("groups", g), "user index out of range");
        ++seen[u];
      }
    }
    for (int u = 0; u < users; ++u) require(seen[u] == 1, "groups", "every user must appear in exactly one group");
    sc.groups = cfg.groups;
  }
  sc.group_of.assign(users, -1);
  for (std::size_t g = 0; g < sc.groups.size(); ++g)
    for (int u : sc.groups[g]) sc.group_of[u] = static_cast<int>(g);

  sc.theta = cfg.theta_start;
  if (cfg.place_by_overlap) detail::place_interferers(cfg, sc.home, sc.theta);

  sc.gains = LinkGains::from_beta(sc.home, cfg.cells, cfg.beta);
  sc.cov.resize(users);
  for (int u = 0; u < users; ++u) {
    for (int c = 0; c < cfg.cells; ++c) {
      const std::string field = "theta_start[" + std::to_string(c) + "][" + std::to_string(u) + "]";
      const double th = sc.theta[c][u];
      require(th >= 0.0 && th < kPi / 2, field, "lower edge must lie in [0, 90) degrees");
      AngularSpreadParams sp{th, cfg.span,
                             cfg.correlation == CorrelationKind::gaussian ? SpreadDistribution::gaussian
                                                                          : SpreadDistribution::uniform,
                             cfg.overlap};
      const double mean = sp.mean_angle();
      require(mean < kPi / 2, field, "mean angle theta_start + span / 2 must stay below 90 degrees");
      CovarianceMatrix r;
      if (cfg.correlation == CorrelationKind::exponential) {
        const double w = sc.geometry.spatial_frequency(mean);
        r = exponential_correlation(cfg.antennas, std::polar(cfg.rho, -w));
      } else {
        r = practical_correlation(sc.geometry, sp, mean);
      }
      const double a = sc.gains.alpha(u, c);
      sc.cov[u].push_back(a == 1.0 ? r : r.scaled(a));
    }
  }

  const int nseq = static_cast<int>(sc.groups.size());
  const int tau = cfg.tau > 0 ? cfg.tau : nseq;
  require(tau >= nseq, "tau", "must be at least the number of training sequences");
  const double p = std::pow(10.0, cfg.power_db / 10.0);
  sc.sequences = TrainingSequence::orthogonal_set(nseq, tau, p);
  sc.noise = correlator_noise(cfg.sigma2, sc.sequences.front());
  return sc;
}

// ------------------------------------------------------------------------
// Covariance uncertainty

// PSD projection of R + eps ||R||_F E / ||E||_F with E a Hermitian Gaussian matrix.
inline CovarianceMatrix perturb_covariance(const CovarianceMatrix& r, double eps, RngStream& rng) {
  if (!(eps >= 0.0)) throw InvalidParameter("perturb_covariance: epsilon must be >= 0");
  if (eps == 0.0) return r;
  const Eigen::Index m = r.size();
  CMat g(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) g(i, j) = rng.complex_normal();
  const CMat e = 0.5 * (g + g.adjoint());
  const double en = e.norm();
  CMat noisy = r.entries();
  if (en > 0.0) noisy += eps * r.entries().norm() / en * e;
  const HermitianEig eig = hermitian_eig(noisy);
  const RVec clipped = eig.values.cwiseMax(0.0);
  return CovarianceMatrix(eig.vectors * clipped.cast<cplx>().asDiagonal() * eig.vectors.adjoint());
}

// ------------------------------------------------------------------------
// Monte Carlo engine

// One evaluated filter configuration: an estimator kind, plus an eta for the masked kinds.
struct Variant {
  EstimatorKind kind = EstimatorKind::LS;
  int eta_index = -1;
  double eta = std::numeric_limits<double>::quiet_NaN();
};

inline std::vector<Variant> make_variants(const std::vector<EstimatorKind>& kinds, const std::vector<double>& grid) {
  std::vector<Variant> out;
  for (auto k : kinds) {
    if (uses_mask(k)) {
      for (std::size_t e = 0; e < grid.size(); ++e) out.push_back({k, static_cast<int>(e), grid[e]});
    } else {
      out.push_back({k});
    }
  }
  return out;
}

struct VariantSummary {
  Variant variant;
  double ratio_mean = 0.0;  // mean over trials of sum ||h_hat - h||^2 / sum ||h||^2
  double ratio_se = 0.0;
  double error_mean = 0.0;  // mean over trials of sum ||h_hat - h||^2
  double error_se = 0.0;
  double modified_share = std::numeric_limits<double>::quiet_NaN();  // adaptive kinds only
  double db() const { return nmse_db_from_ratio(ratio_mean); }
  double db_se() const { return ratio_mean > 0.0 ? 10.0 / std::log(10.0) * ratio_se / ratio_mean : 0.0; }
};

struct KindSummary {
  EstimatorKind kind = EstimatorKind::LS;
  VariantSummary best;  // lowest mean ratio over the eta grid; equal means keep the smaller eta
};

struct RunResult {
  std::vector<KindSummary> kinds;
  std::vector<VariantSummary> variants;
  int trials = 0;

  const KindSummary& of(EstimatorKind k) const {
    for (const auto& s : kinds)
      if (s.kind == k) return s;
    throw InvalidParameter("RunResult: estimator " + std::string(to_string(k)) + " was not evaluated");
  }
};

namespace detail {

// Runs f(t) for t in [0, n) on `workers` threads. Every t writes only its own slot, so the result
// does not depend on the schedule.
template <class F>
void parallel_for(int n, int workers, F&& f) {
  if (workers <= 1 || n <= 1) {
    for (int t = 0; t < n; ++t) f(t);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= n) return;
      try {
        f(t);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int w = std::min(workers, n);
  pool.reserve(w);
  for (int i = 0; i < w; ++i) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

constexpr std::uint64_t kSharedKey = 0xFFFFFFFFull;

// Filters of one target user for every variant. `all` are the covariances known to the receiver
// (perturbed or not) for the target's pilot group, `target` the index of the user in that list.
struct TargetFilters {
  std::vector<EstimatorFilter> filters;
  std::vector<char> modified;  // adaptive variants: modified filter selected
};

inline TargetFilters prepare_target(const Scenario& sc, int user, const std::vector<CovarianceMatrix>& all,
                                    std::size_t target, const std::vector<Variant>& variants, std::uint64_t key) {
  const ScenarioConfig& cfg = sc.config;
  const CovarianceMatrix& rt = all[target];
  const double nu = sc.noise;
  const int i = cfg.power_index;
  const auto& grid = cfg.eta_grid;
  TargetFilters out;
  out.filters.reserve(variants.size());
  out.modified.assign(variants.size(), 0);

  std::optional<EstimatorFilter> be, mbe;
  std::vector<std::optional<EstimatorFilter>> dbe(grid.size()), mdbe(grid.size());
  auto get_be = [&]() -> const EstimatorFilter& {
    if (!be) be = be_filter(rt, all, nu);
    return *be;
  };
  auto get_mbe = [&]() -> const EstimatorFilter& {
    if (!mbe) mbe = mbe_filter(rt, all, nu, i);
    return *mbe;
  };
  auto get_dbe = [&](int e) -> const EstimatorFilter& {
    if (!dbe[e]) dbe[e] = dbe_filter(rt, all, nu, sc.basis, mask_for(EstimatorKind::DBE, rt, sc.basis, grid[e], i));
    return *dbe[e];
  };
  auto get_mdbe = [&](int e) -> const EstimatorFilter& {
    if (!mdbe[e])
      mdbe[e] = mdbe_filter(rt, all, nu, sc.basis, mask_for(EstimatorKind::MDBE, rt, sc.basis, grid[e], i), i);
    return *mdbe[e];
  };

  for (std::size_t v = 0; v < variants.size(); ++v) {
    const Variant& var = variants[v];
    switch (var.kind) {
      case EstimatorKind::LS: out.filters.push_back(ls_filter(cfg.antennas)); break;
      case EstimatorKind::BE: out.filters.push_back(get_be()); break;
      case EstimatorKind::MBE: out.filters.push_back(get_mbe()); break;
      case EstimatorKind::DBE: out.filters.push_back(get_dbe(var.eta_index)); break;
      case EstimatorKind::MDBE: out.filters.push_back(get_mdbe(var.eta_index)); break;
      case EstimatorKind::DLS:
        out.filters.push_back(dls_filter(sc.basis, mask_for(EstimatorKind::DLS, rt, sc.basis, var.eta, i)));
        break;
      case EstimatorKind::MDLS:
        out.filters.push_back(mdls_filter(rt, sc.basis, mask_for(EstimatorKind::MDLS, rt, sc.basis, var.eta, i), i));
        break;
      case EstimatorKind::ABE_MBE: {
        RngStream g(cfg.seed, key, static_cast<std::uint64_t>(user), StreamRole::gamma);
        const double gamma = expected_gamma(rt, all, nu, i, cfg.gamma_draws, g);
        const auto choice = adaptive_select(rt, all, nu, gamma, i);
        const bool mod = choice.kind == EstimatorKind::MBE;
        out.filters.push_back(mod ? get_mbe() : get_be());
        out.modified[v] = mod;
        break;
      }
      case EstimatorKind::ADBE_MDBE: {
        RngStream p(cfg.seed, key, static_cast<std::uint64_t>(user) * 1024u + static_cast<std::uint64_t>(var.eta_index),
                    StreamRole::probe);
        const auto choice =
            adaptive_select_probe(get_dbe(var.eta_index), get_mdbe(var.eta_index), all, target, nu, cfg.probe_trials, p);
        const bool mod = choice.kind == EstimatorKind::MDBE;
        out.filters.push_back(mod ? get_mdbe(var.eta_index) : get_dbe(var.eta_index));
        out.modified[v] = mod;
        break;
      }
    }
  }
  return out;
}

inline std::vector<CovarianceMatrix> receiver_covariances(const Scenario& sc, int user, std::size_t& target,
                                                          std::uint64_t trial) {
  std::vector<CovarianceMatrix> all = sc.group_at_home(user, target);
  if (sc.config.uncertainty > 0.0) {
    const int c = sc.home[user];
    const auto& members = sc.groups[sc.group_of[user]];
    for (std::size_t j = 0; j < members.size(); ++j) {
      const auto entity = static_cast<std::uint64_t>(members[j]) * static_cast<std::uint64_t>(sc.cells()) +
                          static_cast<std::uint64_t>(c);
      RngStream rng(sc.config.seed, trial, entity, StreamRole::perturbation);
      all[j] = perturb_covariance(all[j], sc.config.uncertainty, rng);
    }
  }
  return all;
}

struct TrialOutcome {
  std::vector<double> error;    // per variant, summed over users
  std::vector<int> modified;    // per variant, users that selected the modified filter
  double reference = 0.0;       // sum ||h||^2
};

}  // namespace detail

// Monte Carlo evaluation of every estimator of the configuration on a resolved scenario.
// Trials use the substreams (seed, trial, link, fading) and (seed, trial, station, noise), so all
// estimators see the same channels and the result does not depend on the number of workers.
inline RunResult run_trials(const Scenario& sc) {
  const ScenarioConfig& cfg = sc.config;
  const auto variants = make_variants(cfg.estimators, cfg.eta_grid);
  const int users = sc.users();
  const int cells = sc.cells();
  const Eigen::Index m = cfg.antennas;

  std::vector<detail::TargetFilters> fixed;
  if (cfg.uncertainty == 0.0) {
    fixed.resize(users);
    detail::parallel_for(users, cfg.workers, [&](int u) {
      std::size_t target = 0;
      const auto all = sc.group_at_home(u, target);
      fixed[u] = detail::prepare_target(sc, u, all, target, variants, detail::kSharedKey);
    });
  }

  std::vector<detail::TrialOutcome> outcomes(cfg.trials);
  detail::parallel_for(cfg.trials, cfg.workers, [&](int t) {
    const auto trial = static_cast<std::uint64_t>(t);
    // channels h[u][c]
    std::vector<std::vector<ChannelRealization>> h(users);
    for (int u = 0; u < users; ++u)
      for (int c = 0; c < cells; ++c) {
        RngStream rng(cfg.seed, trial, static_cast<std::uint64_t>(u) * cells + c, StreamRole::fading);
        h[u].push_back(draw_channel(sc.cov[u][c], rng, u, c));
      }
    // received signal at every station and the correlator output of every user
    std::vector<CVec> z(users);
    for (int c = 0; c < cells; ++c) {
      bool serves = false;
      for (int u = 0; u < users; ++u) serves = serves || sc.home[u] == c;
      if (!serves) continue;
      std::vector<std::vector<ChannelRealization>> grouped(sc.groups.size());
      for (std::size_t g = 0; g < sc.groups.size(); ++g)
        for (int u : sc.groups[g]) grouped[g].push_back(h[u][c]);
      RngStream noise(cfg.seed, trial, static_cast<std::uint64_t>(c), StreamRole::noise);
      const ReceivedSignal y = assemble_received(grouped, sc.sequences, cfg.sigma2, noise);
      for (int u = 0; u < users; ++u)
        if (sc.home[u] == c) z[u] = sc.sequences[sc.group_of[u]].correlate(y.y, static_cast<int>(m));
    }

    detail::TrialOutcome& out = outcomes[t];
    out.error.assign(variants.size(), 0.0);
    out.modified.assign(variants.size(), 0);
    for (int u = 0; u < users; ++u) {
      const CVec& truth = h[u][sc.home[u]].h;
      out.reference += truth.squaredNorm();
      detail::TargetFilters local;
      if (fixed.empty()) {
        std::size_t target = 0;
        const auto all = detail::receiver_covariances(sc, u, target, trial);
        local = detail::prepare_target(sc, u, all, target, variants, trial);
      }
      const detail::TargetFilters& tf = fixed.empty() ? local : fixed[u];
      for (std::size_t v = 0; v < variants.size(); ++v) {
        out.error[v] += (tf.filters[v].apply_correlated(z[u]) - truth).squaredNorm();
        out.modified[v] += tf.modified[v];
      }
    }
  });

  RunResult res;
  res.trials = cfg.trials;
  const double n = cfg.trials;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    double sr = 0.0, sr2 = 0.0, se = 0.0, se2 = 0.0, mod = 0.0;
    for (const auto& o : outcomes) {  // ordered reduction
      if (!(o.reference > 0.0)) throw UndefinedMetric("run_trials: trial with zero channel energy");
      const double r = o.error[v] / o.reference;
      sr += r;
      sr2 += r * r;
      se += o.error[v];
      se2 += o.error[v] * o.error[v];
      mod += o.modified[v];
    }
    VariantSummary s;
    s.variant = variants[v];
    s.ratio_mean = sr / n;
    s.error_mean = se / n;
    if (cfg.trials > 1) {
      s.ratio_se = std::sqrt(std::max(0.0, (sr2 - n * s.ratio_mean * s.ratio_mean) / (n - 1)) / n);
      s.error_se = std::sqrt(std::max(0.0, (se2 - n * s.error_mean * s.error_mean) / (n - 1)) / n);
    }
    if (variants[v].kind == EstimatorKind::ABE_MBE || variants[v].kind == EstimatorKind::ADBE_MDBE)
      s.modified_share = mod / (n * users);
    res.variants.push_back(s);
  }
  for (auto k : cfg.estimators) {
    KindSummary ks;
    ks.kind = k;
    bool have = false;
    // grid order: for equal means the first, i.e. listed first, eta is kept; the grid is sorted by the caller
    for (const auto& s : res.variants) {
      if (s.variant.kind != k) continue;
      if (!have || s.ratio_mean < ks.best.ratio_mean) {
        ks.best = s;
        have = true;
      }
    }
    res.kinds.push_back(ks);
  }
  return res;
}

inline RunResult run_trials(const ScenarioConfig& cfg) {
  ScenarioConfig c = cfg;
  std::sort(c.eta_grid.begin(), c.eta_grid.end());
  c.eta_grid.erase(std::unique(c.eta_grid.begin(), c.eta_grid.end()), c.eta_grid.end());
  return run_trials(build_scenario(c));
}

// Grid eta with the lowest empirical NMSE for one estimator; ties go to the smaller eta.
inline double search_eta(const ScenarioConfig& cfg, EstimatorKind kind, const std::vector<double>& grid) {
  if (grid.empty()) throw InvalidParameter("search_eta: empty grid");
  if (!uses_mask(kind)) throw InvalidParameter("search_eta: estimator has no compression ratio");
  ScenarioConfig c = cfg;
  c.eta_grid = grid;
  c.estimators = {kind};
  return run_trials(c).of(kind).best.variant.eta;
}

// ------------------------------------------------------------------------
// Sweeps

enum class SweepAxis { antennas, eta, reuse, overlap, uncertainty, power_index };

inline std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::antennas: return "M";
    case SweepAxis::eta: return "eta";
    case SweepAxis::reuse: return "K";
    case SweepAxis::overlap: return "overlap";
    case SweepAxis::uncertainty: return "uncertainty";
    case SweepAxis::power_index: return "power_index";
  }
  return "?";
}

inline std::optional<SweepAxis> parse_axis(std::string_view s) {
  for (auto a : {SweepAxis::antennas, SweepAxis::eta, SweepAxis::reuse, SweepAxis::overlap, SweepAxis::uncertainty,
                 SweepAxis::power_index})
    if (to_string(a) == s) return a;
  return std::nullopt;
}

// Configuration of one sweep point. Overlap values are in radians.
inline ScenarioConfig apply_axis(const ScenarioConfig& base, SweepAxis axis, double value) {
  ScenarioConfig c = base;
  switch (axis) {
    case SweepAxis::antennas:
      detail::require(value >= 1.0 && value == std::floor(value), "axis.M", "values must be positive integers");
      c.antennas = static_cast<int>(value);
      break;
    case SweepAxis::eta:
      detail::require(value > 0.0 && value <= 1.0, "axis.eta", "values must lie in (0, 1]");
      c.eta_grid = {value};
      break;
    case SweepAxis::reuse: {
      detail::require(value >= 1.0 && value == std::floor(value), "axis.K", "values must be positive integers");
      const int k = static_cast<int>(value);
      detail::require(static_cast<int>(base.theta_start.size()) >= k && base.users() >= k, "axis.K",
                      "theta_start must list at least K stations and K users");
      detail::require(base.home.empty() && base.groups.empty(), "axis.K",
                      "needs the default one-user-per-station layout");
      c.cells = k;
      c.reuse = k;
      c.theta_start.assign(base.theta_start.begin(), base.theta_start.begin() + k);
      for (auto& row : c.theta_start) row.resize(k);
      break;
    }
    case SweepAxis::overlap:
      detail::require(value >= 0.0 && value <= base.span + 1e-12, "axis.overlap", "values must lie in [0, span]");
      c.overlap = value;
      c.place_by_overlap = true;
      break;
    case SweepAxis::uncertainty:
      detail::require(value >= 0.0, "axis.uncertainty", "values must be >= 0");
      c.uncertainty = value;
      break;
    case SweepAxis::power_index:
      detail::require(value >= 0.0 && value == std::floor(value), "axis.power_index", "values must be integers >= 0");
      c.power_index = static_cast<int>(value);
      break;
  }
  return c;
}

struct SweepRow {
  double value = 0.0;
  RunResult result;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::antennas;
  std::vector<EstimatorKind> kinds;
  std::vector<SweepRow> rows;
};

inline SweepResult sweep(const ScenarioConfig& base, SweepAxis axis, const std::vector<double>& values) {
  if (values.empty()) throw ConfigError("axis.values", "must not be empty");
  SweepResult out;
  out.axis = axis;
  out.kinds = base.estimators;
  for (double v : values) out.rows.push_back({v, run_trials(apply_axis(base, axis, v))});
  return out;
}

// ------------------------------------------------------------------------
// Diagnostics

struct CompactionRow {
  int antennas = 0;
  double scn = 0.0;
  double diagonal_scn = 0.0;
  double first4_fraction = 0.0;
};

// SCN before the DCT, spread of the per-frequency powers after it and the share of the first four
// frequencies, for the exponential model.
inline std::vector<CompactionRow> compaction_table(const std::vector<int>& sizes, double rho) {
  std::vector<CompactionRow> out;
  for (int m : sizes) {
    const auto r = exponential_correlation(m, rho);
    const DctBasis b(m);
    const RVec p = energy_profile(r, b);
    out.push_back({m, scn(r), diagonal_scn(transform_covariance(b, r)), band_fraction(p, 0, std::min(4, m))});
  }
  return out;
}

struct ContaminationProfiles {
  RVec target_before;   // diag(U R_t U^T)
  RVec cont_before;     // diag(U sum R_m U^T), interferers only
  RVec target_after;    // diag(U R_t^{1+i} U^T)
  RVec cont_after;      // diag(U R_t^{i/2} sum R_m R_t^{i/2} U^T)
};

// DCT energy of the target and of the contamination before and after the R_t^{i/2} multiplication.
inline ContaminationProfiles contamination_profiles(const Scenario& sc, int user) {
  const int c = sc.home[user];
  const Eigen::Index m = sc.config.antennas;
  CMat cont = CMat::Zero(m, m);
  for (int u : sc.groups[sc.group_of[user]])
    if (u != user) cont += sc.cov[u][c].entries();
  const CovarianceMatrix& rt = sc.cov[user][c];
  const int i = sc.config.power_index;
  const CMat half = detail::target_power(rt.eig(), 0.5 * i);
  ContaminationProfiles p;
  p.target_before = energy_profile(rt, sc.basis);
  p.cont_before = energy_profile(cont, sc.basis);
  p.target_after = energy_profile(CMat(rt.power(1.0 + i)), sc.basis);
  p.cont_after = energy_profile(CMat(half * cont * half), sc.basis);
  return p;
}

// Share of layouts in which the closed-form adaptive rule picks MBE. Each layout draws the lower
// edge of every served user uniformly in [0, max_start] and places the interferers with the
// configured overlap on a random side.
inline double adaptive_modified_share(const ScenarioConfig& base, int layouts, double max_start) {
  if (layouts < 1) throw InvalidParameter("adaptive_modified_share: layouts must be >= 1");
  int modified = 0, total = 0;
  for (int l = 0; l < layouts; ++l) {
    RngStream rng(base.seed, static_cast<std::uint64_t>(l), 0, StreamRole::layout);
    ScenarioConfig c = base;
    c.place_by_overlap = true;
    const int users = base.users();
    for (int st = 0; st < base.cells; ++st) {
      const int target = base.home.empty() ? st : -1;
      const double t = rng.uniform(0.0, max_start);
      for (int u = 0; u < users; ++u) {
        if (u == target) {
          c.theta_start[st][u] = t;
        } else {
          const bool above = rng.uniform() < 0.5 || t < base.span - base.overlap;
          c.theta_start[st][u] = above ? t + 1e-6 : std::max(0.0, t - 1e-6);
        }
      }
    }
    const Scenario sc = build_scenario(c);
    for (int u = 0; u < sc.users(); ++u) {
      std::size_t target = 0;
      const auto all = sc.group_at_home(u, target);
      RngStream g(base.seed, static_cast<std::uint64_t>(l), static_cast<std::uint64_t>(u), StreamRole::gamma);
      const double gamma = expected_gamma(all[target], all, sc.noise, c.power_index, c.gamma_draws, g);
      modified += adaptive_select(all[target], all, sc.noise, gamma, c.power_index).kind == EstimatorKind::MBE;
      ++total;
    }
  }
  return static_cast<double>(modified) / total;
}

// ------------------------------------------------------------------------
// Allocation experiment

inline AllocationProblem allocation_problem(const Scenario& sc) {
  AllocationProblem p;
  p.cov = sc.cov;
  p.home = sc.home;
  p.noise = sc.noise;
  return p;
}

struct AllocationComparison {
  AllocationState greedy_be;   // groups used for the Bayesian family
  AllocationState greedy_dls;  // groups used for LS, DLS and MDLS
  RunResult greedy;            // each kind evaluated on the groups of its allocator
  std::vector<KindSummary> random_mean;  // mean over the random allocations, SE across allocations
  int random_allocations = 0;
};

inline bool bayesian_family(EstimatorKind k) { return uses_covariance(k) && k != EstimatorKind::MDLS; }

// Greedy allocation against `random_allocations` random partitions with `sequences` training
// sequences. LS, DLS and MDLS use the separation-metric allocator, the others the BE/MBE allocator.
inline AllocationComparison allocation_experiment(const ScenarioConfig& base, int sequences, int random_allocations) {
  if (random_allocations < 1) throw ConfigError("random_allocations", "must be >= 1");
  ScenarioConfig flat = base;
  flat.groups.clear();
  const Scenario layout = build_scenario(flat);
  const AllocationProblem prob = allocation_problem(layout);
  const GreedyOptions opt{sequences, base.reuse, false, base.seed};

  AllocationComparison out;
  out.random_allocations = random_allocations;
  out.greedy_be = greedy_allocate_be(prob, opt);
  out.greedy_dls = greedy_allocate_dls(prob, opt);

  auto with_groups = [&](const std::vector<std::vector<int>>& groups, const std::vector<EstimatorKind>& kinds) {
    ScenarioConfig c = base;
    c.groups.clear();
    for (const auto& g : groups)
      if (!g.empty()) c.groups.push_back(g);
    c.tau = std::max(base.tau, sequences);
    c.estimators = kinds;
    return c;
  };
  std::vector<EstimatorKind> bayes, ls;
  for (auto k : base.estimators) (bayesian_family(k) ? bayes : ls).push_back(k);

  RunResult g;
  g.trials = base.trials;
  auto merge = [&](const RunResult& r) {
    g.kinds.insert(g.kinds.end(), r.kinds.begin(), r.kinds.end());
    g.variants.insert(g.variants.end(), r.variants.begin(), r.variants.end());
  };
  if (!bayes.empty()) merge(run_trials(with_groups(out.greedy_be.groups, bayes)));
  if (!ls.empty()) merge(run_trials(with_groups(out.greedy_dls.groups, ls)));
  // keep the configured estimator order
  std::vector<KindSummary> ordered;
  for (auto k : base.estimators)
    for (const auto& s : g.kinds)
      if (s.kind == k) ordered.push_back(s);
  g.kinds = ordered;
  out.greedy = g;

  std::vector<std::vector<double>> ratios(base.estimators.size());
  for (int a = 0; a < random_allocations; ++a) {
    RngStream rng(base.seed, static_cast<std::uint64_t>(a), 0, StreamRole::allocation);
    const auto st = random_allocation(prob, sequences, base.reuse, rng);
    const RunResult r = run_trials(with_groups(st.groups, base.estimators));
    for (std::size_t k = 0; k < base.estimators.size(); ++k) ratios[k].push_back(r.of(base.estimators[k]).best.ratio_mean);
  }
  for (std::size_t k = 0; k < base.estimators.size(); ++k) {
    KindSummary s;
    s.kind = base.estimators[k];
    const double n = static_cast<double>(ratios[k].size());
    double sum = 0.0, sum2 = 0.0;
    for (double r : ratios[k]) {
      sum += r;
      sum2 += r * r;
    }
    s.best.variant.kind = s.kind;
    s.best.ratio_mean = sum / n;
    s.best.ratio_se = n > 1 ? std::sqrt(std::max(0.0, (sum2 - n * s.best.ratio_mean * s.best.ratio_mean) / (n - 1)) / n) : 0.0;
    out.random_mean.push_back(s);
  }
  return out;
}

}  // namespace spadct

#endif
