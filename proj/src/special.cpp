// Copyright 2026 The knnscale Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "knnscale/special.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>

#include "knnscale/error.hpp"

namespace knnscale {
namespace {

constexpr double kPoissonTail = 1e-12;

double poisson_pmf(int j, double mean) {
  if (mean == 0.0) return j == 0 ? 1.0 : 0.0;
  return std::exp(j * std::log(mean) - mean - std::lgamma(j + 1.0));
}

// Sums term(j) * Pois(j; mean) outward from the mode. `term` is bounded by 1
// in magnitude, so the neglected Poisson mass bounds the truncation error.
template <typename Term>
double poisson_mixture(double mean, Term term) {
  const int mode = static_cast<int>(std::floor(mean));
  const double mode_weight = poisson_pmf(mode, mean);
  double sum = mode_weight * term(mode);
  double covered = mode_weight;

  double weight = mode_weight;
  for (int j = mode - 1; j >= 0; --j) {
    weight *= (j + 1) / mean;
    sum += weight * term(j);
    covered += weight;
    if (weight < 1e-17 * covered) break;
  }
  weight = mode_weight;
  for (int j = mode + 1;; ++j) {
    weight *= mean / j;
    sum += weight * term(j);
    covered += weight;
    if (1.0 - covered < kPoissonTail || weight < 1e-300) break;
    if (j - mode > 100000) throw NumericError("noncentral chi-square series did not converge");
  }
  return sum;
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

double chi_square_cdf(double x, double dof) {
  if (x <= 0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(0.5 * dof, 0.5 * x);
}

double noncentral_chi_square_cdf(double x, double dof, double lambda) {
  detail::require(dof > 0 && lambda >= 0, "invalid chi-square parameters");
  if (x <= 0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (lambda == 0.0) return chi_square_cdf(x, dof);
  const double half_x = 0.5 * x;
  const double cdf = poisson_mixture(0.5 * lambda, [&](int j) {
    return boost::math::gamma_p(0.5 * dof + j, half_x);
  });
  return std::clamp(cdf, 0.0, 1.0);
}

double noncentral_chi_square_pdf(double x, double dof, double lambda) {
  detail::require(dof > 0 && lambda >= 0, "invalid chi-square parameters");
  if (x <= 0 || std::isinf(x)) return 0.0;
  const double half_x = 0.5 * x;
  auto central = [&](int j) {
    return 0.5 * boost::math::gamma_p_derivative(0.5 * dof + j, half_x);
  };
  if (lambda == 0.0) return central(0);
  return poisson_mixture(0.5 * lambda, central);
}

NoncentralChiSquareTable::NoncentralChiSquareTable(double dof, double lambda,
                                                   int nodes)
    : dof_(dof), lambda_(lambda) {
  detail::require(nodes >= 16, "table needs at least 16 nodes");
  // Upper end well past the bulk: mean + 40 sd, then stretched until the
  // CDF is within the series truncation error of 1.
  const double mean = dof + lambda;
  const double sd = std::sqrt(2.0 * (dof + 2.0 * lambda));
  upper_ = mean + 40.0 * sd;
  for (int i = 0; i < 16 && 1.0 - noncentral_chi_square_cdf(upper_, dof, lambda) > 1e-10;
       ++i) {
    upper_ *= 1.5;
  }
  step_ = upper_ / (nodes - 1);
  value_.resize(nodes);
  slope_.resize(nodes);
  for (int i = 0; i < nodes; ++i) {
    const double x = i * step_;
    value_[i] = noncentral_chi_square_cdf(x, dof, lambda);
    slope_[i] = noncentral_chi_square_pdf(x, dof, lambda);
  }
  // With one or two degrees of freedom the density is unbounded or jumps at
  // zero; the secant is the better node derivative there.
  if (!(slope_[0] > 0) || dof <= 2) slope_[0] = (value_[1] - value_[0]) / step_;
}

double NoncentralChiSquareTable::cdf(double x) const {
  if (!(x > 0)) return 0.0;
  if (x >= upper_) return 1.0;
  const double pos = x / step_;
  const auto i = static_cast<std::size_t>(pos);
  const double t = pos - static_cast<double>(i);
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1;
  const double h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2;
  const double h11 = t3 - t2;
  return h00 * value_[i] + h10 * step_ * slope_[i] + h01 * value_[i + 1] +
         h11 * step_ * slope_[i + 1];
}

}  // namespace knnscale
