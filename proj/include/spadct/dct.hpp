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

#ifndef SPADCT_DCT_HPP
#define SPADCT_DCT_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "linalg.hpp"
#include "model.hpp"

namespace spadct {

// Orthonormal DCT-II basis. Row k of U is the spatial frequency k:
//   U(k, n) = c[k] cos((2n + 1) k pi / (2M)),  c[0] = sqrt(1/M), c[k>0] = sqrt(2/M).
class DctBasis {
 public:
  DctBasis() = default;

  explicit DctBasis(int antennas) {
    if (antennas < 1) throw InvalidParameter("DctBasis: M must be >= 1");
    const double m = antennas;
    weights_.resize(antennas);
    u_.resize(antennas, antennas);
    for (int k = 0; k < antennas; ++k) {
      weights_(k) = std::sqrt((k == 0 ? 1.0 : 2.0) / m);
      for (int n = 0; n < antennas; ++n) u_(k, n) = weights_(k) * std::cos((2.0 * n + 1.0) * k * kPi / (2.0 * m));
    }
  }

  int size() const { return static_cast<int>(u_.rows()); }
  const RMat& matrix() const { return u_; }
  const RVec& weights() const { return weights_; }

  // zeta = rho / (1 + rho^2) of the tridiagonal matrix whose eigenvectors are the DCT rows.
  static double tridiag_zeta(double rho) { return rho / (1.0 + rho * rho); }

  // Symmetric tridiagonal Q_c: 1 on the diagonal except 1 - zeta at both corners, -zeta off-diagonal.
  static RMat tridiagonal_generator(int antennas, double rho) {
    const double z = tridiag_zeta(rho);
    RMat q = RMat::Identity(antennas, antennas);
    for (int i = 0; i + 1 < antennas; ++i) q(i, i + 1) = q(i + 1, i) = -z;
    q(0, 0) -= z;
    q(antennas - 1, antennas - 1) -= z;
    return q;
  }

 private:
  RMat u_;
  RVec weights_;
};

inline DctBasis dct_basis(int antennas) { return DctBasis(antennas); }

inline CVec forward(const DctBasis& basis, const CVec& m) {
  if (m.size() != basis.size()) throw DimensionError("dct forward: vector length differs from basis size");
  return basis.matrix().cast<cplx>() * m;
}

inline CVec inverse(const DctBasis& basis, const CVec& md) {
  if (md.size() != basis.size()) throw DimensionError("dct inverse: vector length differs from basis size");
  return basis.matrix().transpose().cast<cplx>() * md;
}

// T = U R U^T, the two dimensional DCT of a covariance matrix.
inline CovarianceMatrix transform_covariance(const DctBasis& basis, const CovarianceMatrix& r) {
  if (r.size() != basis.size()) throw DimensionError("transform_covariance: size mismatch");
  const CMat u = basis.matrix().cast<cplx>();
  return CovarianceMatrix(u * r.entries() * u.transpose());
}

// Standard condition number lambda_max / max(lambda_min, floor). A negative floor selects the
// default 1e-14 * lambda_max.
inline double scn(const CovarianceMatrix& r, double floor = -1.0) {
  const double lmax = r.eig().max_value();
  if (r.size() == 0 || !(lmax > 0.0)) throw UndefinedMetric("scn: undefined for the zero matrix");
  const double f = floor < 0.0 ? 1e-14 * lmax : floor;
  return lmax / std::max(r.eig().min_value(), f);
}

// Ratio of the largest to the smallest diagonal entry; with T = U R U^T this is the spread of the
// per-frequency powers.
inline double diagonal_scn(const CovarianceMatrix& r, double floor = -1.0) {
  const RVec d = r.entries().diagonal().real();
  const double dmax = d.maxCoeff();
  if (!(dmax > 0.0)) throw UndefinedMetric("diagonal_scn: undefined for a zero diagonal");
  const double f = floor < 0.0 ? 1e-14 * dmax : floor;
  return dmax / std::max(d.minCoeff(), f);
}

namespace detail {

// sum_{n=0}^{M-1} exp(-j n x) = exp(-j (M-1) x / 2) sin(M x / 2) / sin(x / 2), limit M at x = 0 (mod 2 pi).
inline cplx dirichlet(int antennas, double x) {
  double r = std::remainder(x, 2.0 * kPi);
  const double m = antennas;
  const double s = std::sin(0.5 * r);
  const double ratio = std::abs(s) < 1e-12 ? m : std::sin(0.5 * m * r) / s;
  return std::polar(1.0, -0.5 * (m - 1.0) * r) * ratio;
}

}  // namespace detail

// Closed form of the DCT of a(omega) at frequency k:
//   k = 0:  sqrt(1/M) D(omega)
//   k > 0:  sqrt(2/M) / 2 [ e^{j phi/2} D(omega - phi) + e^{-j phi/2} D(omega + phi) ],  phi = k pi / M
// with D the Dirichlet kernel above.
inline cplx steering_dct(int antennas, double omega, int k) {
  if (antennas < 1) throw InvalidParameter("steering_dct: M must be >= 1");
  if (k < 0 || k >= antennas) throw InvalidParameter("steering_dct: frequency index out of range");
  const double m = antennas;
  if (k == 0) return std::sqrt(1.0 / m) * detail::dirichlet(antennas, omega);
  const double phi = k * kPi / m;
  const cplx plus = std::polar(1.0, 0.5 * phi) * detail::dirichlet(antennas, omega - phi);
  const cplx minus = std::polar(1.0, -0.5 * phi) * detail::dirichlet(antennas, omega + phi);
  return 0.5 * std::sqrt(2.0 / m) * (plus + minus);
}

inline cplx steering_dct(const UlaGeometry& geom, double theta, int k) {
  geom.validate();
  return steering_dct(geom.antennas, geom.spatial_frequency(theta), k);
}

// p[k] = (U R U^T)(k, k), the power carried by spatial frequency k.
inline RVec energy_profile(const CMat& r, const DctBasis& basis) {
  if (r.rows() != basis.size() || r.cols() != basis.size()) throw DimensionError("energy_profile: size mismatch");
  const CMat ur = basis.matrix().cast<cplx>() * r;
  RVec p(basis.size());
  for (int k = 0; k < basis.size(); ++k) {
    // (U R U^T)(k,k) = sum_n (U R)(k, n) U(k, n)
    cplx acc = 0.0;
    for (int n = 0; n < basis.size(); ++n) acc += ur(k, n) * basis.matrix()(k, n);
    p(k) = std::max(acc.real(), 0.0);
  }
  return p;
}

inline RVec energy_profile(const CovarianceMatrix& r, const DctBasis& basis) { return energy_profile(r.entries(), basis); }

class CompressionMask {
 public:
  CompressionMask() = default;

  explicit CompressionMask(std::vector<bool> q) : q_(std::move(q)) {
    if (q_.empty() || std::none_of(q_.begin(), q_.end(), [](bool b) { return b; }))
      throw InvalidParameter("CompressionMask: at least one frequency must be kept");
  }

  static CompressionMask all(int antennas) { return CompressionMask(std::vector<bool>(antennas, true)); }

  int size() const { return static_cast<int>(q_.size()); }
  int kept() const { return static_cast<int>(std::count(q_.begin(), q_.end(), true)); }
  double eta() const { return static_cast<double>(kept()) / static_cast<double>(size()); }
  bool operator[](int k) const { return q_[k]; }
  const std::vector<bool>& bits() const { return q_; }

  RVec as_vector() const {
    RVec v(size());
    for (int k = 0; k < size(); ++k) v(k) = q_[k] ? 1.0 : 0.0;
    return v;
  }

  // U^T diag(q) U: keeps the selected spatial frequencies, zeroes the others.
  CMat projector(const DctBasis& basis) const {
    if (basis.size() != size()) throw DimensionError("CompressionMask::projector: size mismatch");
    const RMat& u = basis.matrix();
    return (u.transpose() * as_vector().asDiagonal() * u).cast<cplx>();
  }

  // Applies the mask to a DCT-domain vector.
  CVec apply(const CVec& md) const {
    if (md.size() != size()) throw DimensionError("CompressionMask::apply: size mismatch");
    CVec out = md;
    for (int k = 0; k < size(); ++k)
      if (!q_[k]) out(k) = 0.0;
    return out;
  }

  friend bool operator==(const CompressionMask& a, const CompressionMask& b) { return a.q_ == b.q_; }

 private:
  std::vector<bool> q_;
};

// Number of kept frequencies for ratio eta: ceil(eta M), guarded against round-off in eta M.
inline int kept_count(double eta, int antennas) {
  const double x = eta * antennas;
  const int n = static_cast<int>(std::ceil(x - 1e-9));
  return std::clamp(n, 1, antennas);
}

// Keeps the ceil(eta M) frequencies with the largest profile values; equal values prefer lower k.
inline CompressionMask select_mask(const RVec& profile, double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidParameter("select_mask: eta must lie in (0, 1]");
  const int m = static_cast<int>(profile.size());
  if (m < 1) throw InvalidParameter("select_mask: empty profile");
  std::vector<int> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return profile(a) > profile(b); });
  std::vector<bool> q(m, false);
  const int n = kept_count(eta, m);
  for (int i = 0; i < n; ++i) q[idx[i]] = true;
  return CompressionMask(std::move(q));
}

// Fraction of the profile mass held by frequencies [lo, hi).
inline double band_fraction(const RVec& profile, int lo, int hi) {
  const double total = profile.sum();
  if (!(total > 0.0)) throw UndefinedMetric("band_fraction: zero profile");
  return profile.segment(lo, hi - lo).sum() / total;
}

}  // namespace spadct

#endif
