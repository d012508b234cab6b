/*
 * Copyright 2026 The DIPSGNN Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Renyi-DP accounting for the noisy sum aggregation.
//
// One aggregation step with row norm bound C and Gaussian noise sigma is
// (alpha, C^2 alpha / (2 sigma^2))-RDP; T steps compose additively. The
// RDP -> (eps, delta) conversion eps(alpha) + log(1/delta)/(alpha - 1) is
// minimized at alpha* = 1 + sqrt(log(1/delta) / k), which gives
//
//   eps2 = T C^2 / (2 sigma^2) + C sqrt(2 T log(1/delta)) / sigma.

#ifndef DIPSGNN_PRIVACY_ACCOUNTANT_HPP_
#define DIPSGNN_PRIVACY_ACCOUNTANT_HPP_

#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "dipsgnn/common.hpp"

namespace dipsgnn {

/// Linear RDP curve eps(alpha) = coefficient * alpha, alpha > 1.
struct RdpCurve {
  double coefficient = 0.0;

  double epsilon_at(double alpha) const { return coefficient * alpha; }
};

struct PrivacySpec {
  double epsilon1 = 20.0;
  double epsilon2 = 5.0;
  double delta = 1e-5;
  int steps_T = 1;
  double embed_norm_C = 1.0;
  // Derived by calibrate_sigma; 0 means no aggregation noise.
  double sigma = 0.0;
};

namespace internal {

inline void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidBudgetError("delta must lie in (0, 1), got " + std::to_string(delta));
  }
}

inline void check_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InvalidBudgetError(std::string(what) + " must be positive and finite");
  }
}

}  // namespace internal

inline RdpCurve rdp_of_gaussian(double sensitivity, double sigma, int steps) {
  internal::check_positive(sensitivity, "sensitivity");
  internal::check_positive(sigma, "sigma");
  if (steps <= 0) throw InvalidBudgetError("steps must be positive");
  return {static_cast<double>(steps) * sensitivity * sensitivity / (2.0 * sigma * sigma)};
}

/// (eps, delta) guarantee of an RDP curve: the minimum over alpha > 1 of
/// k * alpha + log(1/delta) / (alpha - 1), found numerically by golden
/// section search over log(alpha - 1).
inline double rdp_to_dp(const RdpCurve& curve, double delta) {
  internal::check_delta(delta);
  const double k = curve.coefficient;
  const double log_inv_delta = -std::log(delta);
  auto objective = [&](double s) {
    const double am1 = std::exp(s);  // alpha - 1
    return k * (1.0 + am1) + log_inv_delta / am1;
  };
  // The objective is convex in alpha - 1 and unimodal in s = log(alpha - 1).
  double lo = -60.0;
  double hi = 60.0;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - inv_phi * (hi - lo);
  double b = lo + inv_phi * (hi - lo);
  double fa = objective(a);
  double fb = objective(b);
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - inv_phi * (hi - lo);
      fa = objective(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + inv_phi * (hi - lo);
      fb = objective(b);
    }
  }
  return objective(0.5 * (lo + hi));
}

/// Closed-form edge-level epsilon of T noisy aggregation steps.
inline double epsilon2_closed_form(double sigma, double delta, int steps_T, double embed_norm_C) {
  internal::check_delta(delta);
  internal::check_positive(embed_norm_C, "embedding norm");
  if (steps_T <= 0) throw InvalidBudgetError("steps must be positive");
  if (sigma == 0.0) return std::numeric_limits<double>::infinity();
  internal::check_positive(sigma, "sigma");
  const double t = static_cast<double>(steps_T);
  const double u = embed_norm_C / sigma;
  return t * u * u / 2.0 + u * std::sqrt(2.0 * t * -std::log(delta));
}

/// Bisection on sigma for eps2(sigma) = target; eps2 is strictly
/// decreasing in sigma.
inline double calibrate_sigma_bisection(double target_epsilon2, double delta, int steps_T,
                                        double embed_norm_C) {
  internal::check_positive(target_epsilon2, "target epsilon2");
  double lo = embed_norm_C * 1e-12;
  double hi = embed_norm_C;
  while (epsilon2_closed_form(hi, delta, steps_T, embed_norm_C) > target_epsilon2) hi *= 2.0;
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (epsilon2_closed_form(mid, delta, steps_T, embed_norm_C) > target_epsilon2) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Noise scale that makes T aggregation steps (target_epsilon2, delta)-DP.
/// Solves (T/2) u^2 + sqrt(2 T log(1/delta)) u - eps2 = 0 for u = C/sigma,
/// falling back to bisection if the root fails to reproduce the target.
/// An infinite target returns 0 (no noise).
inline double calibrate_sigma(double target_epsilon2, double delta, int steps_T,
                              double embed_norm_C) {
  internal::check_delta(delta);
  internal::check_positive(embed_norm_C, "embedding norm");
  if (steps_T <= 0) throw InvalidBudgetError("steps must be positive");
  if (target_epsilon2 == std::numeric_limits<double>::infinity()) return 0.0;
  internal::check_positive(target_epsilon2, "target epsilon2");

  const double t = static_cast<double>(steps_T);
  const double b = std::sqrt(2.0 * t * -std::log(delta));
  // Positive root in the cancellation-free form 2c / (b + sqrt(b^2 + 4ac)).
  const double u = 2.0 * target_epsilon2 / (b + std::sqrt(b * b + 2.0 * t * target_epsilon2));
  const double sigma = embed_norm_C / u;
  const double back = epsilon2_closed_form(sigma, delta, steps_T, embed_norm_C);
  if (std::abs(back - target_epsilon2) <= 1e-12 * target_epsilon2) return sigma;
  return calibrate_sigma_bisection(target_epsilon2, delta, steps_T, embed_norm_C);
}

/// Default delta for a graph with `num_edges` edges: 0.9 / num_edges.
inline double delta_default(std::size_t num_edges) {
  if (num_edges == 0) throw InvalidBudgetError("edge count must be positive");
  return 0.9 / static_cast<double>(num_edges);
}

/// Fills spec.sigma from its other fields.
inline PrivacySpec calibrated(PrivacySpec spec) {
  spec.sigma = calibrate_sigma(spec.epsilon2, spec.delta, spec.steps_T, spec.embed_norm_C);
  return spec;
}

}  // namespace dipsgnn

#endif  // DIPSGNN_PRIVACY_ACCOUNTANT_HPP_
