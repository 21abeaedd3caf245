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

#ifndef SPADCT_ESTIMATORS_HPP
#define SPADCT_ESTIMATORS_HPP

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dct.hpp"
#include "linalg.hpp"
#include "model.hpp"
#include "rng.hpp"

// All estimators act on the correlator output z = S^H y / ||s||^2, which for a pilot group G is
//   z = sum_{m in G} h_m + w,   w ~ CN(0, nu I),   nu = sigma^2 / ||s||^2.
// With unit-modulus symbols (||s||^2 = tau) nu is the sigma^2 / tau of the Bayesian filter.
// "R_all" always lists every channel that shares the pilot, the target included.

namespace spadct {

enum class EstimatorKind { LS, BE, DBE, MBE, DLS, MDBE, MDLS, ABE_MBE, ADBE_MDBE };

inline constexpr std::array<EstimatorKind, 9> kAllKinds = {
    EstimatorKind::LS,  EstimatorKind::BE,   EstimatorKind::DBE,     EstimatorKind::MBE,      EstimatorKind::DLS,
    EstimatorKind::MDBE, EstimatorKind::MDLS, EstimatorKind::ABE_MBE, EstimatorKind::ADBE_MDBE};

inline std::string_view to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::LS: return "LS";
    case EstimatorKind::BE: return "BE";
    case EstimatorKind::DBE: return "DBE";
    case EstimatorKind::MBE: return "MBE";
    case EstimatorKind::DLS: return "DLS";
    case EstimatorKind::MDBE: return "MDBE";
    case EstimatorKind::MDLS: return "MDLS";
    case EstimatorKind::ABE_MBE: return "ABE-MBE";
    case EstimatorKind::ADBE_MDBE: return "ADBE-MDBE";
  }
  return "?";
}

inline std::optional<EstimatorKind> parse_kind(std::string_view s) {
  for (auto k : kAllKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

// Kinds that use a compression mask.
inline bool uses_mask(EstimatorKind k) {
  return k == EstimatorKind::DBE || k == EstimatorKind::DLS || k == EstimatorKind::MDBE || k == EstimatorKind::MDLS ||
         k == EstimatorKind::ADBE_MDBE;
}

// Kinds that multiply by R^{i/2}.
inline bool is_modified(EstimatorKind k) {
  return k == EstimatorKind::MBE || k == EstimatorKind::MDBE || k == EstimatorKind::MDLS;
}

// Kinds whose filter depends on second order statistics.
inline bool uses_covariance(EstimatorKind k) { return k != EstimatorKind::LS && k != EstimatorKind::DLS; }

inline constexpr int kDefaultPowerIndex = 1;

enum class GammaMode { fixed, per_signal };

// Linear channel estimator h_hat = gamma * core * z. For the modified kinds gamma may be recomputed
// per received signal as ||z|| / ||R^{i/2} z|| so that the multiplication by R^{i/2} keeps the power.
struct EstimatorFilter {
  EstimatorKind kind = EstimatorKind::LS;
  CMat core;
  int power_index = 0;
  GammaMode gamma_mode = GammaMode::fixed;
  double gamma = 1.0;
  CMat gamma_operator;
  std::optional<CompressionMask> mask;

  int antennas() const { return static_cast<int>(core.rows()); }

  double gamma_for(const CVec& z) const {
    if (gamma_mode == GammaMode::fixed) return gamma;
    const double den = (gamma_operator * z).norm();
    return den > 0.0 ? z.norm() / den : 1.0;
  }

  CVec apply_correlated(const CVec& z) const {
    if (z.size() != core.cols()) throw DimensionError("EstimatorFilter: signal length differs from filter size");
    return gamma_for(z) * (core * z);
  }

  CVec apply(const TrainingSequence& s, const ReceivedSignal& y) const {
    return apply_correlated(s.correlate(y.y, antennas()));
  }

  // Full M x (M tau) matrix core * S^H / ||s||^2 (fixed gamma only).
  CMat matrix(const TrainingSequence& s) const {
    const CMat sh = s.spreading_matrix(antennas()).adjoint() / s.energy();
    return gamma * core * sh;
  }

  EstimatorFilter with_fixed_gamma(double g) const {
    EstimatorFilter out = *this;
    out.gamma_mode = GammaMode::fixed;
    out.gamma = g;
    return out;
  }
};

struct MseReport {
  double value = 0.0;
  EstimatorKind kind = EstimatorKind::BE;
  double bound_ni = 0.0;
  double bound_mi = 0.0;
};

struct LsMse {
  double without_noise_floor = 0.0;  // tr(sum of interferer covariances)
  double with_noise_floor = 0.0;     // plus nu M
};

namespace detail {

inline void check_sizes(const CovarianceMatrix& target, const std::vector<CovarianceMatrix>& all) {
  if (all.empty()) throw InvalidParameter("estimator: the same-pilot covariance list is empty");
  for (const auto& r : all)
    if (r.size() != target.size()) throw DimensionError("estimator: covariance sizes differ");
}

inline CMat sum_entries(const std::vector<CovarianceMatrix>& all) {
  CMat s = CMat::Zero(all.front().size(), all.front().size());
  for (const auto& r : all) s += r.entries();
  return s;
}

inline CMat noisy(const CMat& a, double noise) { return a + noise * CMat::Identity(a.rows(), a.cols()); }

inline void check_noise(double noise) {
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw InvalidParameter("estimator: noise variance must be >= 0");
}

inline void check_power(int i) {
  if (i < 0) throw InvalidParameter("estimator: power index must be >= 0");
}

// R^p with R^0 = I, so that i = 0 reproduces the unmodified estimators exactly.
inline CMat target_power(const HermitianEig& e, double p) {
  if (p == 0.0) return CMat::Identity(e.vectors.rows(), e.vectors.rows());
  return hermitian_power(e, p);
}

}  // namespace detail

// ------------------------------------------------------------------------
// LS

inline CVec ls_estimate(const TrainingSequence& s, const ReceivedSignal& y) { return s.correlate(y.y, y.antennas); }

inline EstimatorFilter ls_filter(int antennas) {
  EstimatorFilter f;
  f.kind = EstimatorKind::LS;
  f.core = CMat::Identity(antennas, antennas);
  return f;
}

inline LsMse ls_mse_closed(const std::vector<CovarianceMatrix>& interferers, double noise, int antennas) {
  detail::check_noise(noise);
  LsMse out;
  for (const auto& r : interferers) {
    if (r.size() != antennas) throw DimensionError("ls_mse_closed: covariance size differs from M");
    out.without_noise_floor += r.trace();
  }
  out.with_noise_floor = out.without_noise_floor + noise * antennas;
  return out;
}

// ------------------------------------------------------------------------
// Bayesian estimator

// G = R_t (sum R + nu I)^{-1}
inline EstimatorFilter be_filter(const CovarianceMatrix& target, const std::vector<CovarianceMatrix>& all, double noise) {
  detail::check_sizes(target, all);
  detail::check_noise(noise);
  EstimatorFilter f;
  f.kind = EstimatorKind::BE;
  f.core = target.entries() * hermitian_pinv(detail::noisy(detail::sum_entries(all), noise));
  return f;
}

inline MseReport be_mse_closed(const CovarianceMatrix& target, const std::vector<CovarianceMatrix>& all, double noise) {
  detail::check_sizes(target, all);
  detail::check_noise(noise);
  MseReport rep;
  rep.kind = EstimatorKind::BE;
  const CMat& rt = target.entries();
  const CMat inv = hermitian_pinv(detail::noisy(detail::sum_entries(all), noise));
  rep.value = std::max(0.0, target.trace() - real_trace(rt * inv * rt));

  // Per eigenvalue lambda of R_t:  NI  lambda - lambda^2 / (lambda + nu),
  //                                MI  lambda - lambda^2 / (C lambda + nu).
  const double c = static_cast<double>(all.size());
  const double lmax = target.eig().max_value();
  for (Eigen::Index k = 0; k < target.eig().values.size(); ++k) {
    const double l = std::max(target.eig().values(k), 0.0);
    if (l <= kEigenFloor * lmax) continue;
    const double ni_den = l + noise;
    const double mi_den = c * l + noise;
    rep.bound_ni += l - (ni_den > 0.0 ? l * l / ni_den : 0.0);
    rep.bound_mi += l - (mi_den > 0.0 ? l * l / mi_den : 0.0);
  }
  return rep;
}

// ------------------------------------------------------------------------
// Modified Bayesian estimator

namespace detail {

struct ModifiedParts {
  CMat half;       // R_t^{i/2}
  CMat lead;       // R_t^{1+i/2}
  CMat inner_inv;  // (R_t^{i/2} sum R R_t^{i/2} + nu R_t^i)^+
};

inline ModifiedParts modified_parts(const CMat& target, const CMat& sum_all, double noise, int i) {
  const HermitianEig e = hermitian_eig(target);
  ModifiedParts p;
  p.half = target_power(e, 0.5 * i);
  p.lead = hermitian_power(e, 1.0 + 0.5 * i);
  const CMat inner = p.half * sum_all * p.half + noise * target_power(e, static_cast<double>(i));
  p.inner_inv = hermitian_pinv(inner);
  return p;
}

}  // namespace detail

// P^i = gamma R_t^{1+i/2} (R_t^{i/2} (sum R) R_t^{i/2} + nu R_t^i)^{-1} R_t^{i/2}. Inverses and
// fractional powers are taken on the eigenspace above the relative floor, which is how rank
// deficient target covariances are handled.
inline EstimatorFilter mbe_filter(const CovarianceMatrix& target, const std::vector<CovarianceMatrix>& all, double noise,
                                  int power_index = kDefaultPowerIndex, GammaMode mode = GammaMode::per_signal,
                                  double gamma = 1.0) {
  detail::check_sizes(target, all);
  detail::check_noise(noise);
  detail::check_power(power_index);
  const auto p = detail::modified_parts(target.entries(), detail::sum_entries(all), noise, power_index);
  EstimatorFilter f;
  f.kind = EstimatorKind::MBE;
  f.power_index = power_index;
  f.core = p.lead * p.inner_inv * p.half;
  f.gamma_mode = mode;
  f.gamma = gamma;
  f.gamma_operator = p.half;
  return f;
}

// Mean square error of the MBE filter with a fixed scale gamma:
//   tr(R_t) - (2 gamma - gamma^2) tr(R_t^{i+2} X^{-1}),  X = R_t^{i/2} (sum R) R_t^{i/2} + nu R_t^i.
// At gamma = 1 this is tr(R_t - R_t^{i+2} X^{-1}).
inline double mbe_mse_closed(const CovarianceMatrix& target, const std::vector<CovarianceMatrix>& all, double noise,
                             int power_index = kDefaultPowerIndex, double gamma = 1.0) {
  detail::check_sizes(target, all);
  detail::check_noise(noise);
  detail::check_power(power_index);
  const auto p = detail::modified_parts(target.entries(), detail::sum_entries(all), noise, power_index);
  const double q = real_trace(p.lead * p.inner_inv * p.lead);
  return std::max(0.0, target.trace() - (2.0 * gamma - gamma * gamma) * q);
}

// E[ ||z|| / ||R_t^{i/2} z|| ] for z ~ CN(0, sum R + nu I), by Monte Carlo.
inline double expected_gamma(const CovarianceMatrix& target, const std::vector<CovarianceMatrix>& all, double noise,
                             int power_index, int draws, RngStream& rng) {
  detail::check_sizes(target, all);
  if (draws < 1) throw InvalidParameter("expected_gamma: draws must be >= 1");
  const CMat half = detail::target_power(target.eig(), 0.5 * power_index);
  const CovarianceMatrix cz(detail::noisy(detail::sum_entries(all), noise));
  double acc = 0.0;
  for (int d = 0; d < draws; ++d) {
    const CVec z = cz.sqrt() * rng.complex_normal_vector(target.size());
    const double den = (half * z).norm();
    acc += den > 0.0 ? z.norm() / den : 1.0;
  }
  return acc / draws;
}

// ------------------------------------------------------------------------
// DCT based estimators

// Profile used to pick the mask of an estimate: the target covariance for DLS/DBE and the
// covariance after the R^{i/2} multiplication, R^{1+i}, for the modified kinds.
inline RVec target_profile(const CovarianceMatrix& target, const DctBasis& basis, bool modified, int power_index) {
  if (!modified || power_index == 0) return energy_profile(target, basis);
  return energy_profile(target.power(1.0 + power_index), basis);
}

inline CompressionMask mask_for(EstimatorKind kind, const CovarianceMatrix& target, const DctBasis& basis, double eta,
                                int power_index = kDefaultPowerIndex) {
  const bool modified = kind == EstimatorKind::MDBE || kind == EstimatorKind::MDLS;
  return select_mask(target_profile(target, basis, modified, power_index), eta);
}

// DLS: U^T ((U z) .* q)
inline EstimatorFilter dls_filter(const DctBasis& basis, const CompressionMask& mask) {
  EstimatorFilter f;
  f.kind = EstimatorKind::DLS;
  f.core = mask.projector(basis);
  f.mask = mask;
  return f;
}

inline CVec dls_estimate(const TrainingSequence& s, const ReceivedSignal& y, const DctBasis& basis, const CompressionMask& mask) {
  if (mask.size() != basis.size()) throw DimensionError("dls_estimate: mask length differs from M");
  const CVec z = ls_estimate(s, y);
  return inverse(basis, mask.apply(forward(basis, z)));
}

// DBE: every covariance is replaced by Pi R Pi with Pi = U^T diag(q) U, the correlator output is
// projected the same way and then filtered with the Bayesian gain built from the projected statistics.
inline EstimatorFilter dbe_filter(const CovarianceMatrix& target, const std::vector<CovarianceMatrix>& all, double noise,
                                  const DctBasis& basis, const CompressionMask& mask) {
  detail::check_sizes(target, all);
  detail::check_noise(noise);
  if (mask.size() != basis.size() || basis.size() != target.size()) throw DimensionError("dbe_filter: size mismatch");
  const CMat pi = mask.projector(basis);
  const CMat rt = pi * target.entries() * pi;
  const CMat sum = pi * detail::sum_entries(all) * pi;
  EstimatorFilter f;
  f.kind = EstimatorKind::DBE;
  f.core = rt * hermitian_pinv(detail::noisy(sum, noise)) * pi;
  f.mask = mask;
  return f;
}

// MDBE: g = R_t^{i/2} z, masked in the DCT domain, then the modified gain built from the
// projected statistics. The result is used as the estimate directly.
inline EstimatorFilter mdbe_filter(const CovarianceMatrix& target, const std::vector<CovarianceMatrix>& all, double noise,
                                   const DctBasis& basis, const CompressionMask& mask,
                                   int power_index = kDefaultPowerIndex, GammaMode mode = GammaMode::per_signal,
                                   double gamma = 1.0) {
  detail::check_sizes(target, all);
  detail::check_noise(noise);
  detail::check_power(power_index);
  if (mask.size() != basis.size() || basis.size() != target.size()) throw DimensionError("mdbe_filter: size mismatch");
  const CMat pi = mask.projector(basis);
  const CMat half = detail::target_power(target.eig(), 0.5 * power_index);
  const CMat rt = pi * target.entries() * pi;
  const CMat sum = pi * detail::sum_entries(all) * pi;
  const auto p = detail::modified_parts(rt, sum, noise, power_index);
  EstimatorFilter f;
  f.kind = EstimatorKind::MDBE;
  f.power_index = power_index;
  f.core = p.lead * p.inner_inv * pi * half;
  f.gamma_mode = mode;
  f.gamma = gamma;
  f.gamma_operator = half;
  f.mask = mask;
  return f;
}

// MDLS: R_t^{-i/2} U^T ((U R_t^{i/2} z) .* q), the inverse power taken on the positive eigenspace.
inline EstimatorFilter mdls_filter(const CovarianceMatrix& target, const DctBasis& basis, const CompressionMask& mask,
                                   int power_index = kDefaultPowerIndex) {
  detail::check_power(power_index);
  if (mask.size() != basis.size() || basis.size() != target.size()) throw DimensionError("mdls_filter: size mismatch");
  EstimatorFilter f;
  f.kind = EstimatorKind::MDLS;
  f.power_index = power_index;
  f.core = detail::target_power(target.eig(), -0.5 * power_index) * mask.projector(basis) *
           detail::target_power(target.eig(), 0.5 * power_index);
  f.mask = mask;
  return f;
}

inline CVec dbe_estimate(const TrainingSequence& s, const ReceivedSignal& y, const CovarianceMatrix& target,
                         const std::vector<CovarianceMatrix>& all, double noise, const DctBasis& basis,
                         const CompressionMask& mask) {
  return dbe_filter(target, all, noise, basis, mask).apply(s, y);
}

inline CVec mdbe_estimate(const TrainingSequence& s, const ReceivedSignal& y, const CovarianceMatrix& target,
                          const std::vector<CovarianceMatrix>& all, double noise, const DctBasis& basis,
                          const CompressionMask& mask, int power_index = kDefaultPowerIndex) {
  return mdbe_filter(target, all, noise, basis, mask, power_index).apply(s, y);
}

inline CVec mdls_estimate(const TrainingSequence& s, const ReceivedSignal& y, const CovarianceMatrix& target,
                          const DctBasis& basis, const CompressionMask& mask, int power_index = kDefaultPowerIndex) {
  return mdls_filter(target, basis, mask, power_index).apply(s, y);
}

// ------------------------------------------------------------------------
// Adaptive selection between an estimator and its modified version

inline constexpr double kAdaptiveTieTol = 1e-10;

struct AdaptiveChoice {
  EstimatorKind kind = EstimatorKind::BE;
  double base_mse = 0.0;
  double modified_mse = 0.0;
  double gamma = 1.0;
};

// Picks BE or MBE by closed-form MSE; equality keeps BE. gamma is the scale used in the MBE
// expression, normally expected_gamma() of the scenario. Differences below kAdaptiveTieTol
// relative count as equality, so rounding alone never switches the choice.
inline AdaptiveChoice adaptive_select(const CovarianceMatrix& target, const std::vector<CovarianceMatrix>& all,
                                      double noise, double gamma, int power_index = kDefaultPowerIndex) {
  AdaptiveChoice c;
  c.gamma = gamma;
  c.base_mse = be_mse_closed(target, all, noise).value;
  c.modified_mse = mbe_mse_closed(target, all, noise, power_index, gamma);
  c.kind = c.modified_mse < c.base_mse * (1.0 - kAdaptiveTieTol) ? EstimatorKind::MBE : EstimatorKind::BE;
  return c;
}

// Empirical selection between two filters for the same target: `probes` draws of the target's
// pilot group, lower mean squared error wins, equality keeps `base`. Used for DBE/MDBE where the
// masked filters have no closed form.
inline AdaptiveChoice adaptive_select_probe(const EstimatorFilter& base, const EstimatorFilter& modified,
                                            const std::vector<CovarianceMatrix>& all, std::size_t target_index,
                                            double noise, int probes, RngStream& rng) {
  if (target_index >= all.size()) throw InvalidParameter("adaptive_select_probe: target index out of range");
  const Eigen::Index m = all.front().size();
  double eb = 0.0, em = 0.0;
  for (int t = 0; t < probes; ++t) {
    CVec z = CVec::Zero(m);
    CVec h;
    for (std::size_t u = 0; u < all.size(); ++u) {
      const CVec hu = all[u].sqrt() * rng.complex_normal_vector(m);
      if (u == target_index) h = hu;
      z += hu;
    }
    if (noise > 0.0) z += std::sqrt(noise) * rng.complex_normal_vector(m);
    eb += (base.apply_correlated(z) - h).squaredNorm();
    em += (modified.apply_correlated(z) - h).squaredNorm();
  }
  AdaptiveChoice c;
  c.base_mse = eb / probes;
  c.modified_mse = em / probes;
  c.kind = c.modified_mse < c.base_mse ? modified.kind : base.kind;
  return c;
}

// ------------------------------------------------------------------------
// Metric

inline constexpr double kNmseFloorDb = -300.0;

inline double nmse_db_from_ratio(double ratio) {
  if (!(ratio > 0.0)) return kNmseFloorDb;
  return std::max(kNmseFloorDb, 10.0 * std::log10(ratio));
}

// 10 log10( sum ||h_hat - h||^2 / sum ||h||^2 )
inline double normalized_mse(const std::vector<CVec>& estimates, const std::vector<CVec>& truths) {
  if (estimates.size() != truths.size()) throw DimensionError("normalized_mse: list lengths differ");
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (estimates[i].size() != truths[i].size()) throw DimensionError("normalized_mse: vector lengths differ");
    err += (estimates[i] - truths[i]).squaredNorm();
    ref += truths[i].squaredNorm();
  }
  if (!(ref > 0.0)) throw UndefinedMetric("normalized_mse: truth energy is zero");
  return nmse_db_from_ratio(err / ref);
}

}  // namespace spadct

#endif
