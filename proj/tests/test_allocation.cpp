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

#include <spadct/allocation.hpp>

#include "test_util.hpp"

using namespace spadct;
using spadct::testing::random_covariance;

namespace {

// Covariance spanning columns [first, first + width) of a random unitary basis.
CovarianceMatrix subspace_covariance(const CMat& basis, int first, int width) {
  const CMat b = basis.middleCols(first, width);
  return CovarianceMatrix(static_cast<double>(basis.rows()) / width * b * b.adjoint());
}

CMat random_unitary(int m, RngStream& rng) {
  CMat a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = rng.complex_normal();
  Eigen::HouseholderQR<CMat> qr(a);
  return qr.householderQ() * CMat::Identity(m, m);
}

// Exhaustive optimum of the BE/MBE metric: the role of every user is chosen independently.
double be_optimum(const AllocationProblem& p, int reuse, int sequences) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& part : enumerate_partitions(p.users(), reuse, sequences)) {
    double total = 0.0;
    for (const auto& g : part) {
      std::vector<AllocationRole> roles(p.users(), AllocationRole::bayesian);
      for (int u : g) {
        roles[u] = AllocationRole::bayesian;
        const double b = allocation_error_metric(p, g, roles);
        roles[u] = AllocationRole::modified;
        const double m = allocation_error_metric(p, g, roles);
        roles[u] = m < b ? AllocationRole::modified : AllocationRole::bayesian;
      }
      total += allocation_error_metric(p, g, roles);
    }
    best = std::min(best, total);
  }
  return best;
}

double dls_optimum(const AllocationProblem& p, int reuse, int sequences) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& part : enumerate_partitions(p.users(), reuse, sequences)) {
    double total = 0.0;
    for (const auto& g : part) total += group_separation_metric(p, g);
    best = std::min(best, total);
  }
  return best;
}

// Users alternate between two orthogonal subspaces: 0, 2, 4, ... span A and 1, 3, 5, ... span B.
AllocationProblem alternating_problem(int users, int m, std::uint64_t seed) {
  RngStream rng(seed);
  const CMat u = random_unitary(m, rng);
  std::vector<CovarianceMatrix> covs;
  for (int i = 0; i < users; ++i) covs.push_back(subspace_covariance(u, (i % 2) * (m / 2), m / 2));
  return single_cell_problem(covs, 0.1);
}

}  // namespace

TEST(PairwiseSeparation, Examples) {
  CVec u = CVec::Zero(4);
  u(1) = 1.0;
  CVec v = CVec::Zero(4);
  v(2) = 1.0;
  const CovarianceMatrix pu(u * u.adjoint()), pv(v * v.adjoint());
  EXPECT_NEAR(pairwise_separation(pu, pu), 1.0, 1e-15);
  EXPECT_NEAR(pairwise_separation(pu, pv), 0.0, 1e-15);
  const CovarianceMatrix i(CMat::Identity(5, 5));
  EXPECT_NEAR(pairwise_separation(i, i), 0.2, 1e-15);
  EXPECT_THROW(pairwise_separation(CovarianceMatrix(CMat::Zero(4, 4)), pu), InvalidParameter);
}

TEST(PairwiseSeparation, BoundedOnPsdInputs) {
  RngStream rng(60);
  for (int t = 0; t < 50; ++t) {
    const auto a = random_covariance(6, 1 + t % 6, rng), b = random_covariance(6, 1 + (t / 6) % 6, rng);
    const double d = pairwise_separation(a, b);
    EXPECT_GE(d, -1e-15);
    EXPECT_LE(d, 1.0 + 1e-12);
  }
}

TEST(GroupSeparation, Examples) {
  CVec u = CVec::Zero(3);
  u(0) = 1.0;
  CVec v = CVec::Zero(3);
  v(1) = 1.0;
  const CovarianceMatrix pu(u * u.adjoint()), pv(v * v.adjoint());
  EXPECT_EQ(group_separation({pu}, 0), 0.0);
  EXPECT_NEAR(group_separation({pu, pv}, 0), 0.0, 1e-15);
  EXPECT_NEAR(group_separation({pu, pu}, 1), 1.0, 1e-15);
}

TEST(AllocationMetric, AllBayesianIsSumOfBeMse) {
  RngStream rng(61);
  std::vector<CovarianceMatrix> covs;
  for (int i = 0; i < 3; ++i) covs.push_back(random_covariance(5, 3 + i, rng));
  const auto p = single_cell_problem(covs, 0.2);
  const std::vector<AllocationRole> roles(3, AllocationRole::bayesian);
  double expect = 0.0;
  for (int l = 0; l < 3; ++l) expect += be_mse_closed(covs[l], covs, 0.2).value;
  EXPECT_NEAR(allocation_error_metric(p, {0, 1, 2}, roles), expect, 1e-10);
  EXPECT_EQ(allocation_error_metric(p, std::vector<int>{}, roles), 0.0);
}

TEST(AllocationMetric, ModifiedTermMatchesUnitGammaMbe) {
  RngStream rng(62);
  std::vector<CovarianceMatrix> covs;
  for (int i = 0; i < 3; ++i) covs.push_back(random_covariance(5, 2 + i, rng));
  AllocationProblem p = single_cell_problem(covs, 0.2);
  p.zeta = 0.0;
  std::vector<AllocationRole> roles(3, AllocationRole::bayesian);
  roles[0] = AllocationRole::modified;
  const double with = allocation_error_metric(p, {0, 1, 2}, roles);
  const double expect = mbe_mse_closed(covs[0], covs, 0.2, 1, 1.0) + be_mse_closed(covs[1], covs, 0.2).value +
                        be_mse_closed(covs[2], covs, 0.2).value;
  EXPECT_NEAR(with, expect, 1e-8);
}

TEST(AllocationMetric, OrthogonalPartnerBeatsIdenticalPartner) {
  const auto p = alternating_problem(3, 8, 63);  // users 0 and 2 share a subspace, 1 is orthogonal
  const std::vector<AllocationRole> roles(3, AllocationRole::bayesian);
  EXPECT_LT(allocation_error_metric(p, {0, 1}, roles), allocation_error_metric(p, {0, 2}, roles));
}

TEST(GreedyBe, ReuseOneGivesSingletons) {
  RngStream rng(64);
  std::vector<CovarianceMatrix> covs;
  for (int i = 0; i < 4; ++i) covs.push_back(random_covariance(4, 4, rng));
  const auto p = single_cell_problem(covs, 0.1);
  const auto st = greedy_allocate_be(p, {4, 1});
  ASSERT_EQ(st.groups.size(), 4u);
  double ni = 0.0;
  for (int u = 0; u < 4; ++u) {
    EXPECT_EQ(st.groups[u].size(), 1u);
    ni += be_mse_closed(covs[u], {covs[u]}, 0.1).bound_ni;
  }
  EXPECT_NEAR(st.metric, ni, 1e-9);
  EXPECT_TRUE(st.unassigned.empty());
}

TEST(GreedyBe, OrthogonalUsersAnyGroupingIsNoInterference) {
  RngStream rng(65);
  const CMat u = random_unitary(8, rng);
  std::vector<CovarianceMatrix> covs;
  for (int i = 0; i < 4; ++i) covs.push_back(subspace_covariance(u, 2 * i, 2));
  AllocationProblem p = single_cell_problem(covs, 0.1);
  const auto st = greedy_allocate_be(p, {1, 4});
  double ni = 0.0;
  for (int i = 0; i < 4; ++i) ni += be_mse_closed(covs[i], {covs[i]}, 0.1).value;
  EXPECT_NEAR(st.metric, ni, 1e-9);
}

TEST(GreedyBe, OrthogonalPairsMatchExhaustiveOptimum) {
  for (int users : {4, 6}) {
    const auto p = alternating_problem(users, 8, 66 + users);
    const auto st = greedy_allocate_be(p, {users / 2, 2});
    EXPECT_NEAR(st.metric, be_optimum(p, 2, users / 2), 1e-9);
    for (const auto& g : st.groups) EXPECT_NE(g[0] % 2, g[1] % 2);
  }
}

TEST(GreedyBe, RecordedRoleIsNoWorseThanAlternative) {
  RngStream rng(67);
  std::vector<CovarianceMatrix> covs;
  for (int i = 0; i < 6; ++i) covs.push_back(random_covariance(6, 1 + i % 3, rng));
  const auto p = single_cell_problem(covs, 0.1);
  const auto st = greedy_allocate_be(p, {3, 2});
  for (const auto& g : st.groups) {
    // replay the insertions
    std::vector<int> prefix;
    std::vector<AllocationRole> roles(6, AllocationRole::bayesian);
    for (int u : g) {
      prefix.push_back(u);
      roles[u] = AllocationRole::bayesian;
      const double b = allocation_error_metric(p, prefix, roles);
      roles[u] = AllocationRole::modified;
      const double m = allocation_error_metric(p, prefix, roles);
      roles[u] = st.roles[u];
      EXPECT_LE(allocation_error_metric(p, prefix, roles), std::min(b, m) + 1e-12);
    }
  }
}

TEST(GreedyBe, Validation) {
  const auto p = alternating_problem(4, 4, 68);
  EXPECT_THROW(greedy_allocate_be(p, {4, 0}), InvalidParameter);
  EXPECT_THROW(greedy_allocate_be(p, {1, 3}), InvalidParameter);
}

TEST(GreedyBe, RandomSeedUserIsReproducible) {
  const auto p = alternating_problem(6, 8, 69);
  GreedyOptions o{3, 2, true, 5};
  EXPECT_EQ(greedy_allocate_be(p, o).groups, greedy_allocate_be(p, o).groups);
}

TEST(GreedyDls, OrthogonalPairsMatchExhaustiveOptimum) {
  for (int users : {4, 6}) {
    const auto p = alternating_problem(users, 8, 70 + users);
    const auto st = greedy_allocate_dls(p, {users / 2, 2});
    EXPECT_NEAR(st.metric, dls_optimum(p, 2, users / 2), 1e-12);
    EXPECT_NEAR(st.metric, 0.0, 1e-12);
  }
}

TEST(GreedyDls, IdenticalCovariancesAllPartitionsEqual) {
  RngStream rng(72);
  const auto r = random_covariance(5, 3, rng);
  const auto p = single_cell_problem(std::vector<CovarianceMatrix>(4, r), 0.1);
  std::vector<double> values;
  for (const auto& part : enumerate_partitions(4, 2, 2)) {
    double total = 0.0;
    for (const auto& g : part) total += group_separation_metric(p, g);
    values.push_back(total);
  }
  for (double v : values) EXPECT_NEAR(v, values.front(), 1e-12);
  EXPECT_NEAR(greedy_allocate_dls(p, {2, 2}).metric, values.front(), 1e-12);
}

TEST(Partitions, Counts) {
  EXPECT_EQ(equal_size_partitions(4, 2).size(), 3u);
  EXPECT_EQ(equal_size_partitions(6, 2).size(), 15u);
  EXPECT_EQ(equal_size_partitions(6, 3).size(), 10u);
  EXPECT_EQ(enumerate_partitions(4, 4, 4).size(), 15u);  // Bell number B4
  EXPECT_THROW(equal_size_partitions(5, 2), InvalidParameter);
}

TEST(Theorem1, LsTotalIsPartitionInvariant) {
  RngStream rng(73);
  for (int inst = 0; inst < 10; ++inst) {
    std::vector<CovarianceMatrix> covs;
    for (int i = 0; i < 6; ++i) covs.push_back(random_covariance(6, 1 + (i + inst) % 6, rng));
    const auto p = single_cell_problem(covs, 0.1);
    EXPECT_TRUE(theorem1_check(p, equal_size_partitions(6, 2)));
    EXPECT_TRUE(theorem1_check(p, equal_size_partitions(6, 3)));
  }
  const auto p4 = alternating_problem(4, 4, 74);
  EXPECT_TRUE(theorem1_check(p4, equal_size_partitions(4, 2)));
  EXPECT_TRUE(theorem1_check(p4, {equal_size_partitions(4, 2).front()}));
}

TEST(Theorem1, HoldsForAnySingleCellTraces) {
  // With one station the LS total is (K - 1) times the sum of all traces.
  RngStream rng(75);
  std::vector<CovarianceMatrix> covs;
  for (int i = 0; i < 4; ++i) covs.push_back(random_covariance(4, 4, rng).scaled(1.0 + i));
  EXPECT_TRUE(theorem1_check(single_cell_problem(covs, 0.1), equal_size_partitions(4, 2)));
}

TEST(Theorem1, DetectsStationDependentGains) {
  // Cross links weaker than direct ones: pairing users of the same cell costs more.
  RngStream rng(76);
  AllocationProblem p;
  p.noise = 0.1;
  p.home = {0, 0, 1, 1};
  for (int u = 0; u < 4; ++u) {
    const auto r = random_covariance(4, 4, rng);
    p.cov.push_back({r.scaled(p.home[u] == 0 ? 1.0 : 0.25), r.scaled(p.home[u] == 1 ? 1.0 : 0.25)});
  }
  EXPECT_FALSE(theorem1_check(p, equal_size_partitions(4, 2)));
}
