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

#ifndef SPADCT_MODEL_HPP
#define SPADCT_MODEL_HPP

#include <cmath>
#include <string>
#include <vector>

#include "linalg.hpp"
#include "rng.hpp"

namespace spadct {

// ------------------------------------------------------------------------
// Array geometry and angular spread

struct UlaGeometry {
  int antennas = 1;         // M
  double spacing = 0.5;     // d / lambda
  int paths = 1;            // Q, only used by the multipath sampler

  void validate() const {
    if (antennas < 1) throw InvalidParameter("UlaGeometry: antenna count must be >= 1");
    if (!(spacing > 0.0) || !std::isfinite(spacing)) throw InvalidParameter("UlaGeometry: spacing must be > 0");
    if (paths < 1) throw InvalidParameter("UlaGeometry: path count must be >= 1");
  }

  // omega = 2 pi (d / lambda) sin(theta)
  double spatial_frequency(double theta) const { return 2.0 * kPi * spacing * std::sin(theta); }
};

enum class SpreadDistribution { gaussian, uniform };

struct AngularSpreadParams {
  double theta_start = 0.0;  // lower edge of the spread, radians
  double span = 0.0;         // width of the spread, radians
  SpreadDistribution distribution = SpreadDistribution::uniform;
  double overlap = 0.0;      // overlap with neighbouring users, radians (layout bookkeeping)

  void validate() const {
    if (!(theta_start >= 0.0 && theta_start < kPi / 2))
      throw InvalidParameter("AngularSpreadParams: theta_start must lie in [0, pi/2)");
    if (!(span >= 0.0) || !std::isfinite(span)) throw InvalidParameter("AngularSpreadParams: span must be >= 0");
  }

  // Users are centred in their spread.
  double mean_angle() const { return theta_start + 0.5 * span; }

  // Standard deviation of a uniform law of width span. The Gaussian model uses the same variance.
  double sigma_theta() const { return span / std::sqrt(12.0); }

  // Half width of the spread in the spatial-frequency domain, linearised around the mean angle.
  double delta_omega(const UlaGeometry& geom, double mean) const {
    return 2.0 * kPi * geom.spacing * std::cos(mean) * 0.5 * span;
  }

  double sigma_omega(const UlaGeometry& geom, double mean) const {
    return 2.0 * kPi * geom.spacing * sigma_theta() * std::cos(mean);
  }
};

// ------------------------------------------------------------------------
// Covariance matrix

// Hermitian PSD matrix with its eigen-decomposition and square root computed at construction.
// Instances are immutable and can be shared between threads.
class CovarianceMatrix {
 public:
  static constexpr double kHermitianTol = 1e-10;
  static constexpr double kPsdTol = 1e-10;

  CovarianceMatrix() = default;

  explicit CovarianceMatrix(const CMat& entries) {
    if (entries.rows() != entries.cols()) throw DimensionError("CovarianceMatrix: matrix is not square");
    const double norm = entries.norm();
    if (norm > 0.0 && (entries - entries.adjoint()).norm() > kHermitianTol * norm)
      throw InvalidCovariance("CovarianceMatrix: matrix is not Hermitian");
    entries_ = 0.5 * (entries + entries.adjoint());
    eig_ = hermitian_eig(entries_);
    const double tr = real_trace(entries_);
    const double scale = tr > 0.0 ? tr : norm;
    if (entries_.rows() > 0 && eig_.min_value() < -kPsdTol * scale)
      throw InvalidCovariance("CovarianceMatrix: matrix has a negative eigenvalue " + std::to_string(eig_.min_value()));
    sqrt_ = hermitian_power(eig_, 0.5, kEigenFloor);
  }

  const CMat& entries() const { return entries_; }
  const HermitianEig& eig() const { return eig_; }
  const CMat& sqrt() const { return sqrt_; }
  Eigen::Index size() const { return entries_.rows(); }
  double trace() const { return real_trace(entries_); }

  CMat power(double p, double rel_floor = kEigenFloor) const { return hermitian_power(eig_, p, rel_floor); }

  CovarianceMatrix scaled(double alpha) const {
    if (alpha < 0.0) throw InvalidParameter("CovarianceMatrix::scaled: negative scale");
    return CovarianceMatrix(alpha * entries_);
  }

 private:
  CMat entries_;
  HermitianEig eig_;
  CMat sqrt_;
};

// ------------------------------------------------------------------------
// Link gains

// alpha(u, c): attenuation from user u to base station c.
class LinkGains {
 public:
  LinkGains() = default;
  explicit LinkGains(RMat alpha) : alpha_(std::move(alpha)) {
    if ((alpha_.array() < 0.0).any()) throw InvalidParameter("LinkGains: alpha must be nonnegative");
  }

  // Direct links have gain 1, cross links 1 / beta. beta = 1 is the interference limited case.
  static LinkGains from_beta(const std::vector<int>& home_cell, int cells, double beta) {
    if (!(beta > 0.0)) throw InvalidParameter("LinkGains: beta must be > 0");
    RMat a(static_cast<Eigen::Index>(home_cell.size()), cells);
    for (std::size_t u = 0; u < home_cell.size(); ++u)
      for (int c = 0; c < cells; ++c) a(static_cast<Eigen::Index>(u), c) = (home_cell[u] == c) ? 1.0 : 1.0 / beta;
    return LinkGains(std::move(a));
  }

  double alpha(int user, int cell) const { return alpha_(user, cell); }

  // beta for user u towards cell c relative to the direct link of user `direct`.
  double beta(int direct, int user, int cell) const {
    if (alpha_(direct, cell) <= 0.0) throw InvalidParameter("LinkGains: direct link gain must be > 0");
    return alpha_(direct, cell) / alpha_(user, cell);
  }

  const RMat& matrix() const { return alpha_; }

 private:
  RMat alpha_;
};

// ------------------------------------------------------------------------
// Training sequences

class TrainingSequence {
 public:
  TrainingSequence() = default;

  TrainingSequence(CVec symbols, double power) : symbols_(std::move(symbols)), power_(power) {
    if (symbols_.size() < 1) throw InvalidParameter("TrainingSequence: empty sequence");
    if (!(power_ > 0.0)) throw InvalidParameter("TrainingSequence: power must be > 0");
    const double expect = power_ / static_cast<double>(symbols_.size());
    for (Eigen::Index j = 0; j < symbols_.size(); ++j)
      if (std::abs(std::norm(symbols_(j)) - expect) > 1e-9 * expect)
        throw InvalidParameter("TrainingSequence: symbols must satisfy |s_j|^2 = P / tau");
  }

  // `count` mutually orthogonal sequences of length tau (scaled DFT rows).
  static std::vector<TrainingSequence> orthogonal_set(int count, int tau, double power) {
    if (count < 1 || tau < count) throw InvalidParameter("TrainingSequence: need 1 <= count <= tau");
    std::vector<TrainingSequence> out;
    const double amp = std::sqrt(power / tau);
    for (int i = 0; i < count; ++i) {
      CVec s(tau);
      for (int j = 0; j < tau; ++j) s(j) = std::polar(amp, -2.0 * kPi * i * j / tau);
      out.emplace_back(std::move(s), power);
    }
    return out;
  }

  const CVec& symbols() const { return symbols_; }
  int length() const { return static_cast<int>(symbols_.size()); }
  double power() const { return power_; }
  double energy() const { return symbols_.squaredNorm(); }

  // S = s (x) I_M, an (M tau) x M matrix.
  CMat spreading_matrix(int antennas) const {
    CMat s = CMat::Zero(static_cast<Eigen::Index>(antennas) * length(), antennas);
    for (int j = 0; j < length(); ++j)
      s.block(static_cast<Eigen::Index>(j) * antennas, 0, antennas, antennas) =
          symbols_(j) * CMat::Identity(antennas, antennas);
    return s;
  }

  // S^H y / ||s||^2. Returns h exactly for a single noise-free user.
  CVec correlate(const CVec& y, int antennas) const {
    if (y.size() != static_cast<Eigen::Index>(antennas) * length())
      throw DimensionError("TrainingSequence::correlate: signal length must be M * tau");
    CVec out = CVec::Zero(antennas);
    for (int j = 0; j < length(); ++j)
      out += std::conj(symbols_(j)) * y.segment(static_cast<Eigen::Index>(j) * antennas, antennas);
    return out / energy();
  }

 private:
  CVec symbols_;
  double power_ = 0.0;
};

// Noise variance at the correlator output S^H y / ||s||^2.
inline double correlator_noise(double sigma2, const TrainingSequence& s) { return sigma2 / s.energy(); }

// ------------------------------------------------------------------------
// Channels and received signal

struct ChannelRealization {
  CVec h;
  int user = 0;
  int cell = 0;
};

struct ReceivedSignal {
  CVec y;
  double noise_variance = 0.0;
  int antennas = 0;
};

// ------------------------------------------------------------------------
// Operations

// a(omega)[n] = exp(-j n omega), omega = 2 pi (d / lambda) sin(theta).
inline CVec ula_response(const UlaGeometry& geom, double theta) {
  geom.validate();
  const double omega = geom.spatial_frequency(theta);
  CVec a(geom.antennas);
  for (int n = 0; n < geom.antennas; ++n) a(n) = std::polar(1.0, -omega * n);
  return a;
}

inline CVec ula_response_omega(int antennas, double omega) {
  CVec a(antennas);
  for (int n = 0; n < antennas; ++n) a(n) = std::polar(1.0, -omega * n);
  return a;
}

inline CovarianceMatrix exponential_correlation(int antennas, cplx rho) {
  if (antennas < 1) throw InvalidParameter("exponential_correlation: M must be >= 1");
  if (std::abs(rho) > 1.0 + 1e-15) throw InvalidParameter("exponential_correlation: |rho| must be <= 1");
  CMat r(antennas, antennas);
  for (int i = 0; i < antennas; ++i) {
    r(i, i) = 1.0;
    cplx p = 1.0;
    for (int j = i - 1; j >= 0; --j) {
      p *= rho;
      r(i, j) = p;              // i > j
      r(j, i) = std::conj(p);   // i < j
    }
  }
  return CovarianceMatrix(r);
}

// D_a B D_a^H for a spread centred on spatial frequency `omega_mean`. `width` is the half
// width delta_omega for the uniform law and the standard deviation sigma_omega for the Gaussian one.
inline CovarianceMatrix spread_correlation(int antennas, double omega_mean, SpreadDistribution dist, double width) {
  if (antennas < 1) throw InvalidParameter("spread_correlation: M must be >= 1");
  if (!(width >= 0.0) || !std::isfinite(width)) throw InvalidParameter("spread_correlation: width must be finite and >= 0");
  const CVec a = ula_response_omega(antennas, omega_mean);
  CMat r(antennas, antennas);
  for (int m = 0; m < antennas; ++m) {
    for (int n = 0; n < antennas; ++n) {
      const double d = static_cast<double>(m - n);
      double b = 1.0;
      if (dist == SpreadDistribution::gaussian) {
        b = std::exp(-0.5 * (d * width) * (d * width));
      } else if (m != n && width > 0.0) {
        const double x = d * width;
        b = std::sin(x) / x;
      }
      r(m, n) = a(m) * b * std::conj(a(n));
    }
  }
  return CovarianceMatrix(r);
}

inline CovarianceMatrix practical_correlation(const UlaGeometry& geom, const AngularSpreadParams& spread, double mean_angle) {
  geom.validate();
  spread.validate();
  if (!(mean_angle >= 0.0 && mean_angle < kPi / 2))
    throw InvalidParameter("practical_correlation: mean angle must lie in [0, pi/2)");
  const double omega = geom.spatial_frequency(mean_angle);
  const double width = spread.distribution == SpreadDistribution::uniform ? spread.delta_omega(geom, mean_angle)
                                                                          : spread.sigma_omega(geom, mean_angle);
  return spread_correlation(geom.antennas, omega, spread.distribution, width);
}

inline ChannelRealization draw_channel(const CovarianceMatrix& r, RngStream& rng, int user = 0, int cell = 0) {
  ChannelRealization out;
  out.user = user;
  out.cell = cell;
  out.h = r.sqrt() * rng.complex_normal_vector(r.size());
  return out;
}

// Validating overload for raw matrices.
inline ChannelRealization draw_channel(const CMat& r, RngStream& rng) { return draw_channel(CovarianceMatrix(r), rng); }

// Single-tap multipath channel sum_i gamma_i a(omega_i) with i.i.d. CN(0, 1/Q) gains and angles drawn
// from the user's spread. Used by the compaction diagnostics.
inline CVec draw_multipath_channel(const UlaGeometry& geom, const AngularSpreadParams& spread, RngStream& rng) {
  geom.validate();
  CVec h = CVec::Zero(geom.antennas);
  const double mean = spread.mean_angle();
  for (int q = 0; q < geom.paths; ++q) {
    double theta = 0.0;
    if (spread.distribution == SpreadDistribution::uniform)
      theta = rng.uniform(spread.theta_start, spread.theta_start + spread.span);
    else
      theta = mean + spread.sigma_theta() * rng.normal();
    h += rng.complex_normal() * ula_response(geom, theta);
  }
  return h / std::sqrt(static_cast<double>(geom.paths));
}

inline bool sequences_orthogonal(const std::vector<TrainingSequence>& seqs, double tol = 1e-10) {
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    for (std::size_t j = i + 1; j < seqs.size(); ++j) {
      if (seqs[i].length() != seqs[j].length()) return false;
      const double scale = std::sqrt(seqs[i].energy() * seqs[j].energy());
      if (std::abs(seqs[i].symbols().dot(seqs[j].symbols())) > tol * scale) return false;
    }
  }
  return true;
}

// y = sum_i (s_i (x) I_M) sum_{l in K_i} h_l + n, n ~ CN(0, sigma2 I). groups[i] holds the channels using sequences[i].
inline ReceivedSignal assemble_received(const std::vector<std::vector<ChannelRealization>>& groups,
                                        const std::vector<TrainingSequence>& sequences, double sigma2, RngStream& rng) {
  if (groups.size() != sequences.size()) throw DimensionError("assemble_received: one channel group per sequence expected");
  if (sequences.empty()) throw InvalidParameter("assemble_received: no training sequences");
  if (!sequences_orthogonal(sequences)) throw ConfigError("sequences", "training sequences are not mutually orthogonal");
  if (sigma2 < 0.0) throw InvalidParameter("assemble_received: sigma2 must be >= 0");
  Eigen::Index m = -1;
  for (const auto& g : groups)
    for (const auto& ch : g) {
      if (m < 0) m = ch.h.size();
      if (ch.h.size() != m) throw DimensionError("assemble_received: channels differ in length");
    }
  if (m < 0) throw InvalidParameter("assemble_received: no channels");
  const int tau = sequences.front().length();
  ReceivedSignal out;
  out.antennas = static_cast<int>(m);
  out.noise_variance = sigma2;
  out.y = CVec::Zero(m * tau);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    CVec sum = CVec::Zero(m);
    for (const auto& ch : groups[i]) sum += ch.h;
    for (int j = 0; j < tau; ++j) out.y.segment(j * m, m) += sequences[i].symbols()(j) * sum;
  }
  if (sigma2 > 0.0) out.y += std::sqrt(sigma2) * rng.complex_normal_vector(m * tau);
  return out;
}

}  // namespace spadct

#endif
