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

#ifndef SPADCT_TESTS_TEST_UTIL_HPP
#define SPADCT_TESTS_TEST_UTIL_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include <spadct/linalg.hpp>
#include <spadct/model.hpp>
#include <spadct/rng.hpp>

namespace spadct::testing {

inline constexpr double kDeg = kPi / 180.0;

// Random PSD matrix of the given rank, trace normalised to M.
inline CovarianceMatrix random_covariance(int m, int rank, RngStream& rng) {
  CMat a(m, rank);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < rank; ++j) a(i, j) = rng.complex_normal();
  CMat r = a * a.adjoint();
  r *= static_cast<double>(m) / real_trace(r);
  return CovarianceMatrix(r);
}

inline CVec random_vector(int m, RngStream& rng) { return rng.complex_normal_vector(m); }

// Running mean and standard error.
struct Stat {
  double sum = 0.0;
  double sum2 = 0.0;
  std::int64_t n = 0;

  void add(double x) {
    sum += x;
    sum2 += x * x;
    ++n;
  }
  double mean() const { return sum / n; }
  double se() const {
    const double m = mean();
    const double var = (sum2 - n * m * m) / (n - 1);
    return std::sqrt(std::max(var, 0.0) / n);
  }
};

}  // namespace spadct::testing

#endif
