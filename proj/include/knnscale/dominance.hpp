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

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "knnscale/distributions.hpp"
#include "knnscale/knn.hpp"
#include "knnscale/special.hpp"

namespace knnscale {

/// First and second moments of one label-conditional signal law. `mass` is
/// pi_theta, `mean` and `second` (E||s||^2) are conditional on the label.
struct ClassMoments {
  double mass = 0.0;
  SignalPoint mean{0.0, 0.0};
  double second = 0.0;
};

/// Law of ||s - center||^2 under one class, compressed into equal-width
/// bins: each bin keeps its mass (pi_theta * P_theta) and the mass-weighted
/// mean of the squared distance.
struct DistanceLaw {
  std::vector<double> mass;
  std::vector<double> mean_sq;
};

/// Midpoint-rule weights for both classes on a grid x grid lattice over the
/// signal box, built once and reused by every quadrature query.
class SignalQuadrature {
 public:
  SignalQuadrature(const SignalSpec& signal, int grid = 1024);

  int grid() const { return grid_; }
  const ClassMoments& moments(int label) const { return moments_[label]; }

  /// Conditional law of ||s - center||^2 for one class.
  DistanceLaw distance_law(int label, const SignalPoint& center,
                           int bins = 4096) const;

 private:
  double a_, b_;
  int grid_;
  std::array<std::vector<double>, 2> weight_;
  std::array<ClassMoments, 2> moments_;
};

/// pi_1 P_1[B(x, r)] / (pi_0 P_0[B(x, r)]) for one fixed x as a function of
/// r, by quadrature over the signal plane against the noncentral chi-square
/// CDF of the standard normal noise part.
class BallRatio {
 public:
  BallRatio(const SignalQuadrature& quadrature, const ProductDistribution& dist,
            std::span<const double> x, int bins = 4096);

  /// Ball probabilities pi_theta P_theta[B(x, r)].
  std::array<double, 2> ball_mass(double radius) const;
  double operator()(double radius) const;

 private:
  std::array<DistanceLaw, 2> laws_;
  std::array<double, 2> total_;
  std::shared_ptr<const NoncentralChiSquareTable> chi2_;
};

struct MonteCarloRatio {
  double value = 0.0;
  double std_error = 0.0;
  std::array<double, 2> ball_fraction{0.0, 0.0};
  /// The class-0 ball estimate was zero; value is +infinity.
  bool denominator_empty = false;
};

enum class VerdictKind { kHolds, kViolated, kUntested };

struct DominanceVerdict {
  VerdictKind kind = VerdictKind::kUntested;
  double max_violation = 0.0;
  double at_radius = 0.0;
};

enum class RegionKind { kPositive, kNegative, kNeither };

std::string to_string(VerdictKind kind);
std::string to_string(RegionKind kind);

struct DominanceReport {
  std::vector<double> x;
  int theta = 0;
  double tau = 0.0;
  DominanceVerdict sd_verdict;
  RegionKind region = RegionKind::kNeither;
};

struct DominanceOptions {
  int radius_grid_size = 256;
  std::size_t n_mc = 20000;
  std::uint64_t seed = 1;
};

/// Bundles the quadrature lattice and the Monte Carlo signal draws for one
/// distribution so that many points can be analysed cheaply. Read-only after
/// construction.
class DominanceAnalyzer {
 public:
  explicit DominanceAnalyzer(const ProductDistribution& dist,
                             DominanceOptions options = {}, int grid = 1024);

  const ProductDistribution& distribution() const { return dist_; }
  const SignalQuadrature& quadrature() const { return quadrature_; }

  /// Signed margin E||s' - x_s||^2 - E||s - x_s||^2, s from the class
  /// f*(x), s' from the other class; quadrature moments.
  double tau(std::span<const double> x) const;

  /// Compares the CDFs of ||s - x_s|| for the two classes on a uniform
  /// radius grid over [0, 2R]. Holds iff the same-label CDF is never below
  /// the other-label CDF by more than 4 / sqrt(n_mc).
  DominanceVerdict stochastic_dominance(std::span<const double> x) const;

  DominanceReport classify(std::span<const double> x,
                           double tau_threshold) const;

  BallRatio ball_ratio(std::span<const double> x) const;

 private:
  ProductDistribution dist_;
  DominanceOptions options_;
  SignalQuadrature quadrature_;
  std::array<std::vector<SignalPoint>, 2> draws_;
};

/// tau_x; closed form 2a|x_0| for the aligned and mixture boxes, quadrature
/// otherwise.
double tau_margin(const ProductDistribution& dist, std::span<const double> x);

DominanceVerdict stochastic_dominance_check(const ProductDistribution& dist,
                                            std::span<const double> x,
                                            int radius_grid_size,
                                            std::size_t n_mc,
                                            std::uint64_t seed);

DominanceReport classify_point(const ProductDistribution& dist,
                               std::span<const double> x, double tau_threshold,
                               DominanceOptions options = {});

/// rho(x, r) by quadrature; r = infinity gives pi_1 / pi_0.
double rho_quadrature(const ProductDistribution& dist,
                      std::span<const double> x, double radius);

/// rho(x, r) from n_mc draws per class. Throws EmptyBallError when both
/// ball estimates are zero.
MonteCarloRatio rho_monte_carlo(const ProductDistribution& dist,
                                std::span<const double> x, double radius,
                                std::size_t n_mc, std::uint64_t seed);

/// T_k(x) = rho(x, R_(k+1)(x)) for the fitted model.
double t_k_empirical(const KnnModel& model, const ProductDistribution& dist,
                     std::span<const double> x, std::size_t k);

/// Same, reusing a prebuilt ratio for x.
double t_k_empirical(const KnnModel& model, const BallRatio& ratio,
                     std::span<const double> x, std::size_t k);

}  // namespace knnscale
