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

#ifndef SPADCT_ALLOCATION_HPP
#define SPADCT_ALLOCATION_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "estimators.hpp"
#include "linalg.hpp"
#include "model.hpp"
#include "rng.hpp"

namespace spadct {

// Users to be placed on training sequences. cov[u][c] is the covariance of user u towards base
// station c (link gain included) and home[u] the station that estimates user u.
struct AllocationProblem {
  std::vector<std::vector<CovarianceMatrix>> cov;
  std::vector<int> home;
  double noise = 0.0;  // correlator noise nu
  std::optional<double> zeta;

  int users() const { return static_cast<int>(cov.size()); }

  const CovarianceMatrix& own(int u) const { return cov[u][home[u]]; }

  void validate() const {
    if (cov.empty()) throw InvalidParameter("allocation: no users");
    if (home.size() != cov.size()) throw DimensionError("allocation: one home station per user expected");
    for (std::size_t u = 0; u < cov.size(); ++u) {
      if (cov[u].size() != cov.front().size()) throw DimensionError("allocation: station count differs between users");
      if (home[u] < 0 || home[u] >= static_cast<int>(cov[u].size()))
        throw InvalidParameter("allocation: home station out of range");
    }
    if (!(noise >= 0.0)) throw InvalidParameter("allocation: noise must be >= 0");
  }

  // 1e-9 times the mean trace of the own-link covariances unless set explicitly.
  double regularizer() const {
    if (zeta) return *zeta;
    double t = 0.0;
    for (int u = 0; u < users(); ++u) t += own(u).trace();
    return 1e-9 * t / users();
  }
};

// Single station convenience: every user is estimated at station 0.
inline AllocationProblem single_cell_problem(const std::vector<CovarianceMatrix>& covs, double noise) {
  AllocationProblem p;
  for (const auto& r : covs) p.cov.push_back({r});
  p.home.assign(covs.size(), 0);
  p.noise = noise;
  return p;
}

enum class AllocationRole { bayesian, modified };

struct AllocationState {
  std::vector<std::vector<int>> groups;  // users per training sequence, in insertion order
  std::vector<AllocationRole> roles;     // per user, only meaningful for the BE/MBE allocator
  std::vector<int> unassigned;
  int reuse = 1;
  double zeta = 0.0;
  double metric = 0.0;

  // Sequence index of every user, -1 when unassigned.
  std::vector<int> sequence_of(int users) const {
    std::vector<int> s(users, -1);
    for (std::size_t l = 0; l < groups.size(); ++l)
      for (int u : groups[l]) s[u] = static_cast<int>(l);
    return s;
  }
};

// ------------------------------------------------------------------------
// Separation metrics

// delta = tr(R_l R_m) / (tr R_l tr R_m), in [0, 1] for PSD inputs.
inline double pairwise_separation(const CMat& rl, const CMat& rm) {
  const double tl = real_trace(rl), tm = real_trace(rm);
  if (!(tl > 0.0) || !(tm > 0.0)) throw InvalidParameter("pairwise_separation: zero trace");
  return (rl.cwiseProduct(rm.transpose())).sum().real() / (tl * tm);
}

inline double pairwise_separation(const CovarianceMatrix& rl, const CovarianceMatrix& rm) {
  return pairwise_separation(rl.entries(), rm.entries());
}

// Separation of user `target` from the sum of the other covariances in the list.
inline double group_separation(const std::vector<CovarianceMatrix>& covs, std::size_t target) {
  if (target >= covs.size()) throw InvalidParameter("group_separation: target index out of range");
  if (covs.size() == 1) return 0.0;
  CMat sum = CMat::Zero(covs[target].size(), covs[target].size());
  for (std::size_t m = 0; m < covs.size(); ++m)
    if (m != target) sum += covs[m].entries();
  if (!(real_trace(sum) > 0.0)) return 0.0;
  return pairwise_separation(covs[target].entries(), sum);
}

// delta(G): sum over members of their separation from the rest of the group, seen at their home station.
inline double group_separation_metric(const AllocationProblem& p, const std::vector<int>& group) {
  double total = 0.0;
  for (int l : group) {
    const int c = p.home[l];
    std::vector<CovarianceMatrix> covs;
    covs.reserve(group.size());
    std::size_t self = 0;
    for (int m : group) {
      if (m == l) self = covs.size();
      covs.push_back(p.cov[m][c]);
    }
    total += group_separation(covs, self);
  }
  return total;
}

// ------------------------------------------------------------------------
// Error metric of a training sequence group

namespace detail {

inline CMat interference_at(const AllocationProblem& p, const std::vector<int>& members, int station) {
  const Eigen::Index m = p.cov.front().front().size();
  CMat sum = CMat::Zero(m, m);
  for (int u : members) sum += p.cov[u][station].entries();
  return sum;
}

// tr(R - R^2 (S + nu I)^{-1})
inline double bayesian_term(const CovarianceMatrix& r, const CMat& s, double noise) {
  const CMat& re = r.entries();
  const CMat x = s + noise * CMat::Identity(s.rows(), s.cols());
  return r.trace() - real_trace(re * hermitian_pinv(x) * re);
}

// tr(R - R^3 (R^{1/2} S R^{1/2} + nu R + zeta I)^{-1}), the unit-gamma modified estimator with i = 1.
// R^3 vanishes off the range W_r of R and the regularised matrix is block diagonal in [W_r, W_0],
// so only the range block A + zeta I, A = L^{1/2} W_r^H S W_r L^{1/2} + nu L, has to be inverted.
// This avoids inverting zeta on the null space of R.
inline double modified_term(const CovarianceMatrix& r, const CMat& s, double noise, double zeta) {
  const HermitianEig& e = r.eig();
  const double cut = kEigenFloor * e.max_value();
  Eigen::Index k = 0;
  while (k < e.values.size() && e.values(k) > cut) ++k;
  if (k == 0) return r.trace();
  const CMat w = e.vectors.leftCols(k);
  const RVec lam = e.values.head(k);
  const RVec sq = lam.cwiseSqrt();
  CMat a = sq.asDiagonal() * (w.adjoint() * s * w) * sq.asDiagonal();
  for (Eigen::Index i = 0; i < k; ++i) a(i, i) += noise * lam(i) + zeta;
  const CMat ainv = hermitian_pinv(a);
  double q = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) q += lam(i) * lam(i) * lam(i) * ainv(i, i).real();
  return r.trace() - q;
}

}  // namespace detail

// Error metric of one group. Every member sees the interference of the whole group at its home
// station; members with the modified role contribute the modified-estimator term, the others the
// Bayesian one.
inline double allocation_error_metric(const AllocationProblem& p, const std::vector<int>& group,
                                      const std::vector<AllocationRole>& roles) {
  double total = 0.0;
  const double zeta = p.regularizer();
  for (int l : group) {
    const int c = p.home[l];
    const CMat s = detail::interference_at(p, group, c);
    total += roles[l] == AllocationRole::modified ? detail::modified_term(p.own(l), s, p.noise, zeta)
                                                  : detail::bayesian_term(p.own(l), s, p.noise);
  }
  return total;
}

inline double allocation_error_metric(const AllocationProblem& p, const AllocationState& s) {
  double total = 0.0;
  for (const auto& g : s.groups) total += allocation_error_metric(p, g, s.roles);
  return total;
}

// ------------------------------------------------------------------------
// Greedy allocation

struct GreedyOptions {
  int sequences = 1;                // L
  int reuse = 1;                    // K, group size limit
  bool random_seed_user = false;    // pick the first user of every group at random
  std::uint64_t seed = 0;
};

namespace detail {

inline void check_greedy(const AllocationProblem& p, const GreedyOptions& o) {
  p.validate();
  if (o.reuse < 1) throw InvalidParameter("allocation: reuse factor must be >= 1");
  if (o.sequences < 1) throw InvalidParameter("allocation: at least one training sequence is needed");
  if (static_cast<long>(o.sequences) * o.reuse < p.users())
    throw InvalidParameter("allocation: sequences * reuse factor is smaller than the number of users");
}

inline int take_seed_user(std::vector<int>& unassigned, const GreedyOptions& o, RngStream& rng) {
  std::size_t pos = 0;
  if (o.random_seed_user) pos = std::min(unassigned.size() - 1, static_cast<std::size_t>(rng.uniform() * unassigned.size()));
  const int u = unassigned[pos];
  unassigned.erase(unassigned.begin() + static_cast<std::ptrdiff_t>(pos));
  return u;
}

// Fills the sequences one after the other. `score(group, candidate)` returns the group metric
// after adding the candidate; the smallest score wins and equal scores keep the lower user id.
template <class Score, class Commit>
AllocationState greedy_fill(const AllocationProblem& p, const GreedyOptions& o, Score&& score, Commit&& commit) {
  AllocationState st;
  st.reuse = o.reuse;
  st.zeta = p.regularizer();
  st.roles.assign(p.users(), AllocationRole::bayesian);
  st.unassigned.resize(p.users());
  std::iota(st.unassigned.begin(), st.unassigned.end(), 0);
  RngStream rng(o.seed, 0, 0, StreamRole::allocation);
  for (int l = 0; l < o.sequences && !st.unassigned.empty(); ++l) {
    std::vector<int> group;
    const int first = take_seed_user(st.unassigned, o, rng);
    commit(st, group, first);
    while (static_cast<int>(group.size()) < o.reuse && !st.unassigned.empty()) {
      std::size_t best = 0;
      double best_score = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < st.unassigned.size(); ++i) {
        const double v = score(st, group, st.unassigned[i]);
        if (v < best_score) {
          best_score = v;
          best = i;
        }
      }
      const int u = st.unassigned[best];
      st.unassigned.erase(st.unassigned.begin() + static_cast<std::ptrdiff_t>(best));
      commit(st, group, u);
    }
    st.groups.push_back(std::move(group));
  }
  return st;
}

}  // namespace detail

// Greedy allocation for BE/MBE estimation. A candidate is evaluated in both roles; the role kept
// for an inserted user is the modified one only if its metric is strictly smaller.
inline AllocationState greedy_allocate_be(const AllocationProblem& p, const GreedyOptions& o) {
  detail::check_greedy(p, o);
  auto with_role = [&](AllocationState& st, const std::vector<int>& group, int u, AllocationRole role) {
    std::vector<int> g = group;
    g.push_back(u);
    st.roles[u] = role;
    const double v = allocation_error_metric(p, g, st.roles);
    st.roles[u] = AllocationRole::bayesian;
    return v;
  };
  auto best_role = [&](AllocationState& st, const std::vector<int>& group, int u) {
    const double b = with_role(st, group, u, AllocationRole::bayesian);
    const double m = with_role(st, group, u, AllocationRole::modified);
    return m < b ? std::make_pair(AllocationRole::modified, m) : std::make_pair(AllocationRole::bayesian, b);
  };
  auto score = [&](AllocationState& st, const std::vector<int>& group, int u) { return best_role(st, group, u).second; };
  auto commit = [&](AllocationState& st, std::vector<int>& group, int u) {
    st.roles[u] = best_role(st, group, u).first;
    group.push_back(u);
  };
  AllocationState st = detail::greedy_fill(p, o, score, commit);
  st.metric = allocation_error_metric(p, st);
  return st;
}

// Greedy allocation for DLS/MDLS: minimises the separation metric delta(G) of every group.
inline AllocationState greedy_allocate_dls(const AllocationProblem& p, const GreedyOptions& o) {
  detail::check_greedy(p, o);
  auto score = [&](AllocationState&, const std::vector<int>& group, int u) {
    std::vector<int> g = group;
    g.push_back(u);
    return group_separation_metric(p, g);
  };
  auto commit = [](AllocationState&, std::vector<int>& group, int u) { group.push_back(u); };
  AllocationState st = detail::greedy_fill(p, o, score, commit);
  st.metric = 0.0;
  for (const auto& g : st.groups) st.metric += group_separation_metric(p, g);
  return st;
}

// Users shuffled and dealt to sequences in blocks of `reuse`.
inline AllocationState random_allocation(const AllocationProblem& p, int sequences, int reuse, RngStream& rng) {
  p.validate();
  if (reuse < 1 || sequences < 1 || static_cast<long>(sequences) * reuse < p.users())
    throw InvalidParameter("random_allocation: not enough sequence slots");
  std::vector<int> order(p.users());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());
  AllocationState st;
  st.reuse = reuse;
  st.zeta = p.regularizer();
  st.roles.assign(p.users(), AllocationRole::bayesian);
  for (int l = 0; l < sequences; ++l) {
    std::vector<int> g;
    for (int i = l * reuse; i < std::min(p.users(), (l + 1) * reuse); ++i) g.push_back(order[i]);
    if (!g.empty()) st.groups.push_back(std::move(g));
  }
  return st;
}

// ------------------------------------------------------------------------
// Exhaustive reference and the LS invariance check

// Every partition of users {0..n-1} into unlabeled groups of at most `max_size` members, with at
// most `max_groups` groups. Exponential in n; meant for small reference instances.
inline std::vector<std::vector<std::vector<int>>> enumerate_partitions(int n, int max_size, int max_groups) {
  std::vector<std::vector<std::vector<int>>> out;
  std::vector<std::vector<int>> cur;
  std::function<void(int)> rec = [&](int u) {
    if (u == n) {
      out.push_back(cur);
      return;
    }
    // indices, not references: the recursion may reallocate `cur`
    for (std::size_t i = 0; i < cur.size(); ++i) {
      if (static_cast<int>(cur[i].size()) < max_size) {
        cur[i].push_back(u);
        rec(u + 1);
        cur[i].pop_back();
      }
    }
    if (static_cast<int>(cur.size()) < max_groups) {
      cur.push_back({u});
      rec(u + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

// Partitions into groups of exactly `size` members.
inline std::vector<std::vector<std::vector<int>>> equal_size_partitions(int n, int size) {
  if (size < 1 || n % size != 0) throw InvalidParameter("equal_size_partitions: n must be a multiple of the size");
  auto all = enumerate_partitions(n, size, n / size);
  std::vector<std::vector<std::vector<int>>> out;
  for (auto& p : all)
    if (std::all_of(p.begin(), p.end(), [&](const auto& g) { return static_cast<int>(g.size()) == size; }))
      out.push_back(std::move(p));
  return out;
}

// Total closed-form LS error (noise floor included) of a partition.
inline double ls_partition_total(const AllocationProblem& p, const std::vector<std::vector<int>>& groups) {
  double total = 0.0;
  const int m = static_cast<int>(p.cov.front().front().size());
  for (const auto& g : groups)
    for (int l : g) {
      std::vector<CovarianceMatrix> interferers;
      for (int u : g)
        if (u != l) interferers.push_back(p.cov[u][p.home[l]]);
      total += ls_mse_closed(interferers, p.noise, m).with_noise_floor;
    }
  return total;
}

// True if the LS total is the same for every partition, to `rel_tol` relative to the first one.
inline bool theorem1_check(const AllocationProblem& p, const std::vector<std::vector<std::vector<int>>>& partitions,
                           double rel_tol = 1e-12) {
  if (partitions.empty()) return true;
  const double ref = ls_partition_total(p, partitions.front());
  for (const auto& part : partitions)
    if (std::abs(ls_partition_total(p, part) - ref) > rel_tol * std::max(1.0, std::abs(ref))) return false;
  return true;
}

}  // namespace spadct

#endif
