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

#include "knnscale/dominance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "knnscale/error.hpp"
#include "knnscale/parallel.hpp"

namespace knnscale {

using detail::require;

std::string to_string(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::kHolds: return "holds";
    case VerdictKind::kViolated: return "violated";
    case VerdictKind::kUntested: return "untested";
  }
  return "unknown";
}

std::string to_string(RegionKind kind) {
  switch (kind) {
    case RegionKind::kPositive: return "positive";
    case RegionKind::kNegative: return "negative";
    case RegionKind::kNeither: return "neither";
  }
  return "unknown";
}

SignalQuadrature::SignalQuadrature(const SignalSpec& signal, int grid)
    : a_(signal.a()), b_(signal.b()), grid_(grid) {
  require(grid >= 2, "quadrature grid must have at least 2 cells per side");
  const std::size_t cells = static_cast<std::size_t>(grid) * grid;
  weight_[0].resize(cells);
  weight_[1].resize(cells);
  std::array<double, 2> mass{}, m0{}, m1{}, second{};
  std::size_t idx = 0;
  for_each_signal_cell(signal, grid,
                       [&](const SignalPoint& s, double w0, double w1) {
                         weight_[0][idx] = w0;
                         weight_[1][idx] = w1;
                         ++idx;
                         const double sq = s[0] * s[0] + s[1] * s[1];
                         const std::array<double, 2> w{w0, w1};
                         for (int c = 0; c < 2; ++c) {
                           mass[c] += w[c];
                           m0[c] += w[c] * s[0];
                           m1[c] += w[c] * s[1];
                           second[c] += w[c] * sq;
                         }
                       });
  for (int c = 0; c < 2; ++c) {
    ClassMoments& m = moments_[c];
    m.mass = mass[c];
    if (mass[c] > 0) {
      m.mean = {m0[c] / mass[c], m1[c] / mass[c]};
      m.second = second[c] / mass[c];
    }
  }
}

DistanceLaw SignalQuadrature::distance_law(int label,
                                           const SignalPoint& center,
                                           int bins) const {
  require(bins >= 1, "need at least one bin");
  double upper = 0.0;
  for (double c0 : {-a_, a_}) {
    for (double c1 : {-b_, b_}) {
      upper = std::max(upper, std::pow(c0 - center[0], 2) +
                                  std::pow(c1 - center[1], 2));
    }
  }
  const double scale = bins / (upper * (1.0 + 1e-12));
  DistanceLaw law;
  law.mass.assign(bins, 0.0);
  law.mean_sq.assign(bins, 0.0);
  const auto& w = weight_[label];
  const double h0 = 2.0 * a_ / grid_;
  const double h1 = 2.0 * b_ / grid_;
  std::size_t idx = 0;
  for (int i = 0; i < grid_; ++i) {
    const double d0 = -a_ + (i + 0.5) * h0 - center[0];
    const double d0sq = d0 * d0;
    for (int j = 0; j < grid_; ++j, ++idx) {
      if (w[idx] == 0.0) continue;
      const double d1 = -b_ + (j + 0.5) * h1 - center[1];
      const double u = d0sq + d1 * d1;
      const auto bin = std::min<std::size_t>(static_cast<std::size_t>(u * scale),
                                             static_cast<std::size_t>(bins - 1));
      law.mass[bin] += w[idx];
      law.mean_sq[bin] += w[idx] * u;
    }
  }
  for (int k = 0; k < bins; ++k) {
    if (law.mass[k] > 0) law.mean_sq[k] /= law.mass[k];
  }
  return law;
}

BallRatio::BallRatio(const SignalQuadrature& quadrature,
                     const ProductDistribution& dist, std::span<const double> x,
                     int bins) {
  require(x.size() == static_cast<std::size_t>(dist.d()),
          "point dimension does not match the distribution");
  if (dist.noise().family() != NoiseFamily::kStandardNormal) {
    throw InvalidArgument(
        "quadrature ball probabilities need standard normal noise; use the "
        "Monte Carlo route");
  }
  double lambda = 0.0;
  for (std::size_t j = 2; j < x.size(); ++j) lambda += x[j] * x[j];
  chi2_ = std::make_shared<NoncentralChiSquareTable>(dist.noise_dim(), lambda);
  const SignalPoint center = signal_of(x);
  for (int c = 0; c < 2; ++c) {
    if (!(quadrature.moments(c).mass > 0)) {
      throw NumericError("class " + std::to_string(c) + " has no signal mass");
    }
    laws_[c] = quadrature.distance_law(c, center, bins);
    // Pin the total to the exact prior so that r -> infinity recovers
    // pi_1 / pi_0 exactly.
    const double scale = dist.prior(c) / quadrature.moments(c).mass;
    for (double& m : laws_[c].mass) m *= scale;
    total_[c] = dist.prior(c);
  }
}

std::array<double, 2> BallRatio::ball_mass(double radius) const {
  if (std::isinf(radius)) return total_;
  const double r2 = radius * radius;
  std::array<double, 2> out{0.0, 0.0};
  for (int c = 0; c < 2; ++c) {
    const auto& law = laws_[c];
    double sum = 0.0;
    for (std::size_t k = 0; k < law.mass.size(); ++k) {
      if (law.mass[k] == 0.0) continue;
      const double slack = r2 - law.mean_sq[k];
      if (slack <= 0) continue;
      sum += law.mass[k] * chi2_->cdf(slack);
    }
    out[c] = sum;
  }
  return out;
}

double BallRatio::operator()(double radius) const {
  require(radius > 0, "radius must be positive");
  if (std::isinf(radius)) return total_[1] / total_[0];
  const auto mass = ball_mass(radius);
  if (mass[0] == 0.0 && mass[1] == 0.0) {
    throw EmptyBallError("both ball probabilities vanish at r = " +
                         std::to_string(radius) + "; use a larger radius");
  }
  if (mass[0] == 0.0) return std::numeric_limits<double>::infinity();
  return mass[1] / mass[0];
}

DominanceAnalyzer::DominanceAnalyzer(const ProductDistribution& dist,
                                     DominanceOptions options, int grid)
    : dist_(dist), options_(options), quadrature_(dist.signal(), grid) {
  require(options_.radius_grid_size >= 16, "radius grid needs >= 16 points");
  require(options_.n_mc >= 1, "n_mc must be positive");
  for (int c = 0; c < 2; ++c) {
    Rng rng(derive_seed(options_.seed, static_cast<std::uint64_t>(c)));
    draws_[c].resize(options_.n_mc);
    for (auto& s : draws_[c]) s = dist_.signal().sample_conditional(c, rng);
  }
}

double DominanceAnalyzer::tau(std::span<const double> x) const {
  require(x.size() == static_cast<std::size_t>(dist_.d()),
          "point dimension does not match the distribution");
  const int theta = dist_.bayes_at(x);
  const ClassMoments& same = quadrature_.moments(theta);
  const ClassMoments& other = quadrature_.moments(1 - theta);
  if (!(same.mass > 0) || !(other.mass > 0)) {
    throw NumericError("degenerate class-conditional signal law");
  }
  // E||s - x||^2 = E||s||^2 - 2 <x, E s> + ||x||^2; ||x||^2 cancels.
  auto spread = [&](const ClassMoments& m) {
    return m.second - 2.0 * (x[0] * m.mean[0] + x[1] * m.mean[1]);
  };
  return spread(other) - spread(same);
}

DominanceVerdict DominanceAnalyzer::stochastic_dominance(
    std::span<const double> x) const {
  require(x.size() == static_cast<std::size_t>(dist_.d()),
          "point dimension does not match the distribution");
  const int theta = dist_.bayes_at(x);
  std::array<std::vector<double>, 2> dist2;
  for (int c = 0; c < 2; ++c) {
    dist2[c].reserve(draws_[c].size());
    for (const auto& s : draws_[c]) {
      dist2[c].push_back(std::hypot(s[0] - x[0], s[1] - x[1]));
    }
    std::sort(dist2[c].begin(), dist2[c].end());
  }
  const auto& same = dist2[theta];
  const auto& other = dist2[1 - theta];
  const double tolerance = 4.0 / std::sqrt(static_cast<double>(options_.n_mc));
  const int points = options_.radius_grid_size;
  const double top = 2.0 * dist_.signal().radius();

  DominanceVerdict verdict{VerdictKind::kHolds, 0.0, 0.0};
  for (int g = 0; g < points; ++g) {
    const double r = top * g / (points - 1);
    auto ecdf = [r](const std::vector<double>& v) {
      return static_cast<double>(std::upper_bound(v.begin(), v.end(), r) -
                                 v.begin()) /
             static_cast<double>(v.size());
    };
    const double gap = ecdf(other) - ecdf(same);
    if (gap > verdict.max_violation) {
      verdict.max_violation = gap;
      verdict.at_radius = r;
    }
  }
  if (verdict.max_violation > tolerance) verdict.kind = VerdictKind::kViolated;
  return verdict;
}

DominanceReport DominanceAnalyzer::classify(std::span<const double> x,
                                            double tau_threshold) const {
  require(tau_threshold > 0, "tau threshold must be positive");
  DominanceReport report;
  report.x.assign(x.begin(), x.end());
  report.theta = dist_.bayes_at(x);
  report.tau = tau(x);
  if (report.tau >= tau_threshold) {
    report.sd_verdict = stochastic_dominance(x);
    report.region = report.sd_verdict.kind == VerdictKind::kHolds
                        ? RegionKind::kPositive
                        : RegionKind::kNeither;
  } else if (report.tau <= -tau_threshold) {
    report.region = RegionKind::kNegative;
  }
  return report;
}

BallRatio DominanceAnalyzer::ball_ratio(std::span<const double> x) const {
  return BallRatio(quadrature_, dist_, x);
}

double tau_margin(const ProductDistribution& dist, std::span<const double> x) {
  require(x.size() == static_cast<std::size_t>(dist.d()),
          "point dimension does not match the distribution");
  const auto kind = dist.signal().kind();
  if (kind == SignalKind::kAlignedRect || kind == SignalKind::kMixtureRect) {
    // Class-conditional boxes [-a, 0] and [0, a] differ only in the mean of
    // s0, which is -a/2 versus a/2.
    return 2.0 * dist.signal().a() * std::abs(x[0]);
  }
  const DominanceAnalyzer analyzer(dist, {16, 1, 0}, 1024);
  return analyzer.tau(x);
}

DominanceVerdict stochastic_dominance_check(const ProductDistribution& dist,
                                            std::span<const double> x,
                                            int radius_grid_size,
                                            std::size_t n_mc,
                                            std::uint64_t seed) {
  // The verdict only uses the Monte Carlo draws; a 2x2 lattice keeps the
  // unused quadrature cheap.
  const DominanceAnalyzer analyzer(dist, {radius_grid_size, n_mc, seed}, 2);
  return analyzer.stochastic_dominance(x);
}

DominanceReport classify_point(const ProductDistribution& dist,
                               std::span<const double> x, double tau_threshold,
                               DominanceOptions options) {
  const DominanceAnalyzer analyzer(dist, options);
  return analyzer.classify(x, tau_threshold);
}

double rho_quadrature(const ProductDistribution& dist,
                      std::span<const double> x, double radius) {
  require(radius > 0, "radius must be positive");
  if (std::isinf(radius)) return dist.prior(1) / dist.prior(0);
  const SignalQuadrature quadrature(dist.signal());
  return BallRatio(quadrature, dist, x)(radius);
}

MonteCarloRatio rho_monte_carlo(const ProductDistribution& dist,
                                std::span<const double> x, double radius,
                                std::size_t n_mc, std::uint64_t seed) {
  require(radius > 0, "radius must be positive");
  require(n_mc >= 1, "n_mc must be positive");
  require(x.size() == static_cast<std::size_t>(dist.d()),
          "point dimension does not match the distribution");
  const double r2 = radius * radius;
  std::vector<double> point(x.size());
  std::array<double, 2> fraction{};
  for (int c = 0; c < 2; ++c) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    std::size_t inside = 0;
    for (std::size_t i = 0; i < n_mc; ++i) {
      const SignalPoint s = dist.signal().sample_conditional(c, rng);
      point[0] = s[0];
      point[1] = s[1];
      for (int j = 0; j < dist.noise_dim(); ++j) point[2 + j] = dist.noise().sample(rng);
      double sum = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) sum += (point[j] - x[j]) * (point[j] - x[j]);
      inside += sum <= r2;
    }
    fraction[c] = static_cast<double>(inside) / static_cast<double>(n_mc);
  }
  if (fraction[0] == 0.0 && fraction[1] == 0.0) {
    throw EmptyBallError("no Monte Carlo draw fell in B(x, " +
                         std::to_string(radius) +
                         "); increase the radius or n_mc");
  }
  MonteCarloRatio out;
  out.ball_fraction = fraction;
  const double prior_ratio = dist.prior(1) / dist.prior(0);
  const auto n = static_cast<double>(n_mc);
  if (fraction[0] == 0.0) {
    out.value = std::numeric_limits<double>::infinity();
    out.std_error = std::numeric_limits<double>::infinity();
    out.denominator_empty = true;
    return out;
  }
  out.value = prior_ratio * fraction[1] / fraction[0];
  if (fraction[1] == 0.0) {
    out.std_error = prior_ratio / (fraction[0] * n);
  } else {
    out.std_error = out.value * std::sqrt((1 - fraction[1]) / (n * fraction[1]) +
                                          (1 - fraction[0]) / (n * fraction[0]));
  }
  return out;
}

double t_k_empirical(const KnnModel& model, const BallRatio& ratio,
                     std::span<const double> x, std::size_t k) {
  require(k >= 1 && k <= model.n(), "k must lie in [1, n]");
  return ratio(model.neighbor_radius(x, k + 1));
}

double t_k_empirical(const KnnModel& model, const ProductDistribution& dist,
                     std::span<const double> x, std::size_t k) {
  require(k >= 1 && k <= model.n(), "k must lie in [1, n]");
  const double radius = model.neighbor_radius(x, k + 1);
  return rho_quadrature(dist, x, radius);
}

}  // namespace knnscale
