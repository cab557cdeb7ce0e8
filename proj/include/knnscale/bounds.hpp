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

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "knnscale/distributions.hpp"
#include "knnscale/parallel.hpp"

namespace knnscale {

class SignalQuadrature;

/// d(p || q) = p log(p/q) + (1-p) log((1-p)/(1-q)).
double binary_relative_entropy(double p, double q);

/// Chernoff bound on a k-vote majority going the wrong way when each vote is
/// right with probability rho / (1 + rho): ((1 + rho) / (2 sqrt(rho)))^-k,
/// clamped to 1.
double chernoff_vote_bound(double rho, int k);

/// Outcome of refitting the classifier on `trials` fresh training sets and
/// querying a fixed point x. Every field is a mean over trials with its
/// standard error.
struct PointBattery {
  std::size_t trials = 0;
  std::size_t empty_ball_trials = 0;
  int bayes_label = 0;
  MeanStderr predict0;  // P[prediction = 0]
  MeanStderr predict1;  // P[prediction = 1]
  MeanStderr prop1_bound0;  // E[(((T v 1)^1/2 + (T v 1)^-1/2) / 2)^-k]
  MeanStderr prop1_bound1;  // same with T ^ 1
  MeanStderr half0;  // (1 + P[T <= 1]) / 2
  MeanStderr half1;  // (1 + P[T >= 1]) / 2
  std::vector<double> t_k;  // per-trial T_k(x), NaN for empty-ball trials

  /// Probability of disagreeing with f*(x) and the two bounds on it.
  const MeanStderr& misclassification() const {
    return bayes_label == 1 ? predict0 : predict1;
  }
  const MeanStderr& prop1_bound() const {
    return bayes_label == 1 ? prop1_bound0 : prop1_bound1;
  }
  const MeanStderr& remark1_bound() const {
    return bayes_label == 1 ? half0 : half1;
  }
};

/// Runs the battery. Trial t uses derive_seed(seed, t). `quadrature` may be
/// supplied to share the signal lattice across points.
PointBattery point_battery(const ProductDistribution& dist,
                           std::span<const double> x, std::size_t n,
                           std::size_t k, std::size_t n_trials,
                           std::uint64_t seed,
                           const SignalQuadrature* quadrature = nullptr);

struct TwoSidedBound {
  MeanStderr side0;
  MeanStderr side1;
  std::size_t empty_ball_trials = 0;
};

TwoSidedBound prop1_bound_mc(const ProductDistribution& dist,
                             std::span<const double> x, std::size_t n,
                             std::size_t k, std::size_t n_trials,
                             std::uint64_t seed);

TwoSidedBound remark1_bounds_mc(const ProductDistribution& dist,
                                std::span<const double> x, std::size_t n,
                                std::size_t k, std::size_t n_trials,
                                std::uint64_t seed);

struct BoundReport {
  std::string name;
  std::vector<std::pair<std::string, double>> inputs;
  std::vector<std::pair<std::string, double>> constants;
  double value = 0.0;
  double raw_value = 0.0;
  bool clamped = false;  // the formula exceeded 1 and was capped
  bool vacuous = false;  // a lower bound that is <= 0
};

/// 2 exp(-k/6) + exp(-c tau^2 k / d), clamped to 1.
BoundReport fast_rate_bound(double k, double d, double tau, double c = 1.0);

/// 1/2 - n exp(-c d min(gamma^2 / (beta M^8), gamma / (beta' M^4))). Reported
/// raw; flagged vacuous when <= 0. Membership of gamma in the admissible
/// interval is the caller's concern.
BoundReport slow_rate_bound(double n, double d, double gamma, double beta,
                            double beta_prime, double M, double c = 1.0);

struct GaussianApproxReport {
  int d_n = 0;
  std::vector<double> x;  // noise coordinates of the probe
  std::size_t n_samples = 0;
  double cdf_gap = 0.0;  // sup |F_hat - Phi|
  double pdf_gap = 0.0;  // max bin |f_hat - phi| over |t| <= 4
  double bin_width = 0.0;  // standardized units, d_n^(-1/4)
  double mu_x = 0.0;
  double sigma_x = 0.0;
  double norm4 = 0.0;  // sum x_i^4
  double norm6 = 0.0;  // sum x_i^6
  double norm_inf = 0.0;
};

/// Exact mean and standard deviation of ||xi - x||^2 for i.i.d. noise.
std::pair<double, double> noise_distance_moments(const NoiseSpec& noise,
                                                 std::span<const double> x);

/// Samples ||xi - x||^2, standardizes by the exact moments and measures the
/// distance to the standard normal. For standard normal noise the draw is
/// chi2(d_n - 1) + (Z - ||x||)^2, which has the same law as the coordinate
/// sum.
GaussianApproxReport berry_esseen_gap(const NoiseSpec& noise,
                                      std::span<const double> x,
                                      std::size_t n_samples,
                                      std::uint64_t seed);

/// g'(t) / g(t) for the noncentral chi-square density g with even d_n >= 4
/// degrees of freedom and noncentrality lambda:
///   -(1 - (2m + lambda)/t)/2 + sum (j - lambda/2) a_j / (t sum a_j),
/// m = d_n/2 - 1, a_j = (lambda t/4)^j / (j! (m+j)!).
double noncentral_chi2_logderiv(int d_n, double lambda, double t);

/// The density g itself from the same series.
double noncentral_chi2_density_series(int d_n, double lambda, double t);

struct SeriesSmoothness {
  int d_n = 0;
  double lambda = 0.0;
  double max_abs_logderiv = 0.0;  // over |t - mu| <= window * sigma^2
  double at_t = 0.0;
  double normalization = 0.0;  // integral of g over [0, infinity)
};

/// Scans |g'/g| on `points` equally spaced t in the window around the mean
/// mu = d_n + lambda, sigma^2 = 2 (d_n + 2 lambda), and integrates g by
/// adaptive Gauss-Kronrod.
SeriesSmoothness series_smoothness(int d_n, double lambda, double window,
                                   int points = 2001);

struct QuadraticVariance {
  double minimum = 0.0;  // min_h var[(X - h)^2] by grid + golden section
  double argmin = 0.0;
  double moment_form = 0.0;  // var(X)^2 (kurtosis - skewness^2 - 1)
};

/// Minimizes the empirical var[(X - h)^2] over h on a grid spanning
/// mean +/- 3 sd, then refines by golden-section search.
QuadraticVariance min_quadratic_variance(std::span<const double> samples,
                                         int grid_points = 256);

/// Moment-determinant value var(X)^2 (m4 - m3^2 - 1) from analytic moments.
double quadratic_variance_floor(const NoiseSpec& noise);

}  // namespace knnscale
