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

#ifndef SPADCT_ERRORS_HPP
#define SPADCT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace spadct {

// A parameter is outside its documented domain (|rho| > 1, eta outside (0,1], ...).
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Vector or matrix sizes do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Matrix is not Hermitian PSD within tolerance.
class InvalidCovariance : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Quantity is mathematically undefined for the given input (SCN of zero, NMSE with zero truth).
class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Scenario or file level problem. Carries the path of the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace spadct

#endif
