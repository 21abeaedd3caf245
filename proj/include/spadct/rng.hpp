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

#ifndef SPADCT_RNG_HPP
#define SPADCT_RNG_HPP

#include <cstdint>
#include <random>

#include "linalg.hpp"

namespace spadct {

// What a random stream is used for. Streams for different roles never overlap,
// so e.g. the noise of trial t is the same whichever estimator is evaluated.
enum class StreamRole : std::uint64_t {
  fading = 1,
  noise = 2,
  perturbation = 3,
  gamma = 4,
  probe = 5,
  allocation = 6,
  layout = 7,
  test = 8,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Generator for the substream keyed by (seed, trial, entity, role). Counter based:
// the stream of a key does not depend on how many other streams were created before.
class RngStream {
 public:
  using engine_type = std::mt19937_64;

  explicit RngStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  RngStream(std::uint64_t seed, std::uint64_t trial, std::uint64_t entity, StreamRole role)
      : engine_(derive(seed, trial, entity, role)) {}

  static std::uint64_t derive(std::uint64_t seed, std::uint64_t trial, std::uint64_t entity, StreamRole role) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ splitmix64(trial + 0x1000));
    h = splitmix64(h ^ splitmix64(entity + 0x2000000));
    h = splitmix64(h ^ splitmix64(static_cast<std::uint64_t>(role) + 0x300000000ULL));
    return h;
  }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(engine_); }

  // Circularly symmetric complex Gaussian with unit variance, CN(0, 1).
  cplx complex_normal() {
    constexpr double s = 0.70710678118654752440;
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {s * re, s * im};
  }

  CVec complex_normal_vector(Eigen::Index n) {
    CVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = complex_normal();
    return v;
  }

  engine_type& engine() { return engine_; }

 private:
  engine_type engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace spadct

#endif
