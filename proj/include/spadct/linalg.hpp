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

#ifndef SPADCT_LINALG_HPP
#define SPADCT_LINALG_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>

#include "errors.hpp"

namespace spadct {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

// Relative eigenvalue floor used for every inverse, pseudo-inverse and fractional power.
inline constexpr double kEigenFloor = 1e-12;

// Eigen-pairs of a Hermitian matrix, eigenvalues sorted in descending order.
struct HermitianEig {
  RVec values;
  CMat vectors;

  double max_value() const { return values.size() ? values(0) : 0.0; }
  double min_value() const { return values.size() ? values(values.size() - 1) : 0.0; }
};

inline HermitianEig hermitian_eig(const CMat& a) {
  if (a.rows() != a.cols()) throw DimensionError("hermitian_eig: matrix is not square");
  HermitianEig out;
  if (a.rows() == 0) return out;
  const CMat sym = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> solver(sym);
  if (solver.info() != Eigen::Success) throw InvalidCovariance("hermitian_eig: eigensolver did not converge");
  const Eigen::Index n = a.rows();
  out.values.resize(n);
  out.vectors.resize(n, n);
  // Eigen returns ascending order.
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = solver.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  return out;
}

// W f(Delta) W^H where f(lambda) = lambda^p on eigenvalues above rel_floor * lambda_max and 0 elsewhere.
// Negative p therefore gives the pseudo-inverse power on the retained eigenspace.
inline CMat hermitian_power(const HermitianEig& eig, double p, double rel_floor = kEigenFloor) {
  const Eigen::Index n = eig.vectors.rows();
  CMat out = CMat::Zero(n, n);
  const double lmax = eig.max_value();
  if (n == 0 || lmax <= 0.0) return out;
  const double cut = rel_floor * lmax;
  RVec f = RVec::Zero(eig.values.size());
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    const double l = eig.values(i);
    if (l > cut) f(i) = (p == 1.0) ? l : std::pow(l, p);
  }
  return eig.vectors * f.asDiagonal() * eig.vectors.adjoint();
}

inline CMat hermitian_power(const CMat& a, double p, double rel_floor = kEigenFloor) {
  return hermitian_power(hermitian_eig(a), p, rel_floor);
}

// Pseudo-inverse of a Hermitian PSD matrix with relative eigenvalue floor.
inline CMat hermitian_pinv(const CMat& a, double rel_floor = kEigenFloor) {
  return hermitian_power(hermitian_eig(a), -1.0, rel_floor);
}

// Projector onto the eigenspace whose eigenvalues exceed rel_floor * lambda_max.
inline CMat range_projector(const HermitianEig& eig, double rel_floor = kEigenFloor) {
  return hermitian_power(eig, 0.0, rel_floor);
}

inline double relative_frobenius(const CMat& a, const CMat& reference) {
  const double ref = reference.norm();
  const double diff = (a - reference).norm();
  if (ref == 0.0) return diff;
  return diff / ref;
}

inline double real_trace(const CMat& a) { return a.trace().real(); }

}  // namespace spadct

#endif
