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

#include "knnscale/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "knnscale/dominance.hpp"
#include "knnscale/error.hpp"
#include "knnscale/knn.hpp"
#include "knnscale/special.hpp"

namespace knnscale {

using detail::require;

double binary_relative_entropy(double p, double q) {
  require(q > 0 && q < 1 && p >= 0 && p <= 1, "invalid Bernoulli parameters");
  double out = 0.0;
  if (p > 0) out += p * std::log(p / q);
  if (p < 1) out += (1 - p) * std::log((1 - p) / (1 - q));
  return out;
}

double chernoff_vote_bound(double rho, int k) {
  require(rho > 0, "rho must be positive");
  require(k >= 1, "k must be positive");
  if (std::isinf(rho)) return 0.0;
  const double base = (1.0 + rho) / (2.0 * std::sqrt(rho));
  return std::min(1.0, std::pow(base, -k));
}

namespace {

// Bound term for one realized T: the Chernoff factor at
// max(T, 1) (side 0) or min(T, 1) (side 1).
constexpr double kTieTolerance = 1e-9;

double chernoff_term(double t, int k, bool upper_side) {
  const double clipped = upper_side ? std::max(t, 1.0) : std::min(t, 1.0);
  if (clipped == 0.0) return 0.0;
  return chernoff_vote_bound(clipped, k);
}

}  // namespace

PointBattery point_battery(const ProductDistribution& dist,
                           std::span<const double> x, std::size_t n,
                           std::size_t k, std::size_t n_trials,
                           std::uint64_t seed,
                           const SignalQuadrature* quadrature) {
  require(n_trials >= 1, "need at least one trial");
  require(k >= 1 && k <= n, "k must lie in [1, n]");
  std::unique_ptr<SignalQuadrature> owned;
  if (quadrature == nullptr) {
    owned = std::make_unique<SignalQuadrature>(dist.signal());
    quadrature = owned.get();
  }
  const BallRatio ratio(*quadrature, dist, x);
  const std::vector<double> point(x.begin(), x.end());

  std::vector<double> pred0(n_trials), b0(n_trials), b1(n_trials),
      h0(n_trials), h1(n_trials), tk(n_trials);
  std::vector<std::uint8_t> empty(n_trials, 0);
  parallel_for(n_trials, [&](std::size_t t) {
    const KnnModel model(sample(dist, n, derive_seed(seed, t)));
    const auto vote = model.predict_with_radius(point, k);
    pred0[t] = vote.prediction == 0 ? 1.0 : 0.0;
    double value;
    try {
      value = ratio(vote.next_radius);
    } catch (const EmptyBallError&) {
      empty[t] = 1;
      tk[t] = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    tk[t] = value;
    const int kk = static_cast<int>(k);
    b0[t] = chernoff_term(value, kk, true);
    b1[t] = chernoff_term(value, kk, false);
    // quadrature noise around an exact tie counts as the tie
    const bool tie = std::abs(value - 1.0) <= kTieTolerance;
    h0[t] = value <= 1.0 || tie ? 1.0 : 0.5;
    h1[t] = value >= 1.0 || tie ? 1.0 : 0.5;
  });

  PointBattery out;
  out.trials = n_trials;
  out.bayes_label = dist.bayes_at(x);
  out.predict0 = mean_stderr(pred0);
  std::vector<double> pred1(n_trials);
  for (std::size_t t = 0; t < n_trials; ++t) pred1[t] = 1.0 - pred0[t];
  out.predict1 = mean_stderr(pred1);
  // Bound averages skip trials whose ratio was undefined.
  auto kept = [&](const std::vector<double>& v) {
    std::vector<double> out_v;
    out_v.reserve(v.size());
    for (std::size_t t = 0; t < v.size(); ++t) {
      if (!empty[t]) out_v.push_back(v[t]);
    }
    return out_v;
  };
  for (auto e : empty) out.empty_ball_trials += e;
  out.prop1_bound0 = mean_stderr(kept(b0));
  out.prop1_bound1 = mean_stderr(kept(b1));
  out.half0 = mean_stderr(kept(h0));
  out.half1 = mean_stderr(kept(h1));
  out.t_k = std::move(tk);
  return out;
}

TwoSidedBound prop1_bound_mc(const ProductDistribution& dist,
                             std::span<const double> x, std::size_t n,
                             std::size_t k, std::size_t n_trials,
                             std::uint64_t seed) {
  const auto battery = point_battery(dist, x, n, k, n_trials, seed);
  return {battery.prop1_bound0, battery.prop1_bound1, battery.empty_ball_trials};
}

TwoSidedBound remark1_bounds_mc(const ProductDistribution& dist,
                                std::span<const double> x, std::size_t n,
                                std::size_t k, std::size_t n_trials,
                                std::uint64_t seed) {
  const auto battery = point_battery(dist, x, n, k, n_trials, seed);
  return {battery.half0, battery.half1, battery.empty_ball_trials};
}

BoundReport fast_rate_bound(double k, double d, double tau, double c) {
  require(k >= 1 && d >= 1, "k and d must be at least 1");
  require(tau >= 0, "tau must be non-negative");
  require(c > 0, "constant c must be positive");
  BoundReport report;
  report.name = "fast_rate";
  report.inputs = {{"k", k}, {"d", d}, {"tau", tau}};
  report.constants = {{"c", c}};
  report.raw_value = 2.0 * std::exp(-k / 6.0) + std::exp(-c * tau * tau * k / d);
  report.clamped = report.raw_value > 1.0;
  report.value = std::min(1.0, report.raw_value);
  return report;
}

BoundReport slow_rate_bound(double n, double d, double gamma, double beta,
                            double beta_prime, double M, double c) {
  require(n >= 0, "n must be non-negative");
  require(d > 0 && gamma > 0 && beta > 0 && beta_prime > 0 && M > 0 && c > 0,
          "slow-rate parameters must be positive");
  BoundReport report;
  report.name = "slow_rate";
  report.inputs = {{"n", n},          {"d", d},          {"gamma", gamma},
                   {"beta", beta},    {"beta_prime", beta_prime},
                   {"M", M}};
  report.constants = {{"c", c}};
  const double m4 = std::pow(M, 4);
  const double rate = std::min(gamma * gamma / (beta * m4 * m4),
                               gamma / (beta_prime * m4));
  report.raw_value = 0.5 - n * std::exp(-c * d * rate);
  report.value = report.raw_value;
  report.vacuous = report.raw_value <= 0.0;
  return report;
}

std::pair<double, double> noise_distance_moments(const NoiseSpec& noise,
                                                 std::span<const double> x) {
  require(x.size() == static_cast<std::size_t>(noise.dim()),
          "probe must have one coordinate per noise dimension");
  const double m2 = noise.moment(2);
  const double m3 = noise.moment(3);
  const double m4 = noise.moment(4);
  double mean = 0.0, var = 0.0;
  for (double h : x) {
    // (xi - h)^2 = xi^2 - 2 h xi + h^2
    mean += m2 + h * h;
    var += (m4 - m2 * m2) + 4.0 * h * h * m2 - 4.0 * h * m3;
  }
  return {mean, std::sqrt(var)};
}

GaussianApproxReport berry_esseen_gap(const NoiseSpec& noise,
                                      std::span<const double> x,
                                      std::size_t n_samples,
                                      std::uint64_t seed) {
  require(n_samples >= 10000, "need at least 1e4 samples");
  GaussianApproxReport report;
  report.d_n = noise.dim();
  report.x.assign(x.begin(), x.end());
  report.n_samples = n_samples;
  const auto [mu, sigma] = noise_distance_moments(noise, x);
  report.mu_x = mu;
  report.sigma_x = sigma;
  double lambda = 0.0;
  for (double h : x) {
    lambda += h * h;
    report.norm4 += std::pow(h, 4);
    report.norm6 += std::pow(h, 6);
    report.norm_inf = std::max(report.norm_inf, std::abs(h));
  }

  std::vector<double> z(n_samples);
  Rng rng(seed);
  const bool gaussian = noise.family() == NoiseFamily::kStandardNormal;
  const double shift = std::sqrt(lambda);
  for (auto& v : z) {
    double value = 0.0;
    if (gaussian) {
      // Rotate x onto the first axis: only one coordinate carries the shift.
      const double first = rng.normal() - shift;
      value = first * first;
      if (noise.dim() > 1) value += rng.chi_square(noise.dim() - 1);
    } else {
      for (double h : x) {
        const double diff = noise.sample(rng) - h;
        value += diff * diff;
      }
    }
    v = (value - mu) / sigma;
  }
  std::sort(z.begin(), z.end());

  const auto n = static_cast<double>(n_samples);
  double gap = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double phi = normal_cdf(z[i]);
    gap = std::max({gap, std::abs((i + 1) / n - phi), std::abs(i / n - phi)});
  }
  report.cdf_gap = gap;

  const double width = std::pow(static_cast<double>(noise.dim()), -0.25);
  report.bin_width = width;
  const int bins = static_cast<int>(std::ceil(8.0 / width));
  const double start = -0.5 * bins * width;
  std::vector<std::size_t> counts(bins, 0);
  for (double v : z) {
    const double pos = (v - start) / width;
    if (pos >= 0 && pos < bins) ++counts[static_cast<std::size_t>(pos)];
  }
  double pdf_gap = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double lo = start + b * width;
    const double expected = (normal_cdf(lo + width) - normal_cdf(lo)) / width;
    const double observed = counts[b] / (n * width);
    pdf_gap = std::max(pdf_gap, std::abs(observed - expected));
  }
  report.pdf_gap = pdf_gap;
  return report;
}

namespace {

struct BesselSeries {
  double log_mode_term = 0.0;  // log a_{j*}
  double sum = 0.0;            // sum_j a_j / a_{j*}
  double weighted = 0.0;       // sum_j (j - lambda/2) a_j / a_{j*}
};

// Sums a_j = z^j / (j! (m + j)!) with z = lambda t / 4 outward from the
// largest term so that nothing overflows however large z is.
BesselSeries bessel_series(int m, double lambda, double t) {
  const double z = lambda * t / 4.0;
  BesselSeries out;
  if (z == 0.0) {
    out.log_mode_term = -std::lgamma(m + 1.0);
    out.sum = 1.0;
    out.weighted = 0.0;
    return out;
  }
  const auto mode = static_cast<long>(
      std::floor((-m + std::sqrt(static_cast<double>(m) * m + 4.0 * z)) / 2.0));
  out.log_mode_term = mode * std::log(z) - std::lgamma(mode + 1.0) -
                      std::lgamma(m + mode + 1.0);
  const double half_lambda = lambda / 2.0;
  double sum = 1.0;
  double weighted = mode - half_lambda;
  double abs_weighted = std::abs(weighted);
  constexpr double kRelTail = 1e-14;
  constexpr long kMaxTerms = 10'000'000;

  double term = 1.0;
  for (long j = mode + 1;; ++j) {
    const double ratio = z / (static_cast<double>(j) * (m + j));
    term *= ratio;
    sum += term;
    weighted += (j - half_lambda) * term;
    abs_weighted += std::abs(j - half_lambda) * term;
    // Ratios keep shrinking past the mode, so the tail is at most a
    // geometric series with the current ratio; the weights grow linearly,
    // which the factor (j + 1) covers.
    if (ratio < 1.0) {
      const double tail = term * ratio / (1.0 - ratio);
      if (tail < kRelTail * sum &&
          tail * (j + 1 + half_lambda) < kRelTail * std::max(abs_weighted, 1e-300)) {
        break;
      }
    }
    if (j - mode > kMaxTerms) {
      throw NumericError("noncentral chi-square series did not converge");
    }
  }
  term = 1.0;
  for (long j = mode; j > 0; --j) {
    term *= static_cast<double>(j) * (m + j) / z;
    sum += term;
    weighted += (j - 1 - half_lambda) * term;
    abs_weighted += std::abs(j - 1 - half_lambda) * term;
    if (term < 1e-17 * sum && term * (half_lambda + 1) < 1e-17 * abs_weighted) break;
  }
  out.sum = sum;
  out.weighted = weighted;
  return out;
}

void check_even_degrees(int d_n, double lambda, double t) {
  require(d_n >= 4 && d_n % 2 == 0, "degrees of freedom must be even and >= 4");
  require(lambda >= 0, "noncentrality must be non-negative");
  require(t > 0, "t must be positive");
}

}  // namespace

double noncentral_chi2_logderiv(int d_n, double lambda, double t) {
  check_even_degrees(d_n, lambda, t);
  const int m = d_n / 2 - 1;
  const auto series = bessel_series(m, lambda, t);
  return -0.5 * (1.0 - (2.0 * m + lambda) / t) + series.weighted / (t * series.sum);
}

double noncentral_chi2_density_series(int d_n, double lambda, double t) {
  check_even_degrees(d_n, lambda, t);
  const int m = d_n / 2 - 1;
  const auto series = bessel_series(m, lambda, t);
  // g(t) = (1/2) e^{-(t + lambda)/2} (t/2)^m sum_j a_j
  const double log_g = -std::log(2.0) - 0.5 * (t + lambda) + m * std::log(t / 2.0) +
                       series.log_mode_term + std::log(series.sum);
  return std::exp(log_g);
}

SeriesSmoothness series_smoothness(int d_n, double lambda, double window,
                                   int points) {
  check_even_degrees(d_n, lambda, 1.0);
  require(window > 0 && points >= 2, "invalid smoothness window");
  SeriesSmoothness out;
  out.d_n = d_n;
  out.lambda = lambda;
  const double mu = d_n + lambda;
  const double var = 2.0 * (d_n + 2.0 * lambda);
  const double lo = std::max(mu - window * var, 1e-12);
  const double hi = mu + window * var;
  for (int i = 0; i < points; ++i) {
    const double t = lo + (hi - lo) * i / (points - 1);
    const double v = std::abs(noncentral_chi2_logderiv(d_n, lambda, t));
    if (v > out.max_abs_logderiv) {
      out.max_abs_logderiv = v;
      out.at_t = t;
    }
  }
  const auto g = [&](double t) {
    return t <= 0 ? 0.0 : noncentral_chi2_density_series(d_n, lambda, t);
  };
  using Integrator = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double sd = std::sqrt(var);
  std::vector<double> cuts = {0.0};
  for (double c = -6; c <= 60; c += 2) {
    const double t = mu + c * sd;
    if (t > cuts.back()) cuts.push_back(t);
  }
  double total = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    total += Integrator::integrate(g, cuts[i - 1], cuts[i], 15, 1e-14);
  }
  out.normalization = total;
  return out;
}

QuadraticVariance min_quadratic_variance(std::span<const double> samples,
                                         int grid_points) {
  require(grid_points >= 256, "need at least 256 grid points");
  require(samples.size() >= 2, "need at least two samples");
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  if (*lo_it == *hi_it) {
    throw InvalidArgument("degenerate sample: fewer than two distinct values");
  }
  const MeanStderr summary = mean_stderr(samples);
  const double mean = summary.mean;
  const auto n = static_cast<double>(samples.size());

  std::vector<double> scratch(samples.size());
  auto objective = [&](double h) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double v = samples[i] - h;
      scratch[i] = v * v;
    }
    const double m = pairwise_sum(scratch) / n;
    for (double& v : scratch) v = (v - m) * (v - m);
    return pairwise_sum(scratch) / n;
  };

  std::vector<double> centered(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) centered[i] = samples[i] - mean;
  auto central = [&](int power) {
    std::vector<double> p(centered.size());
    for (std::size_t i = 0; i < centered.size(); ++i) p[i] = std::pow(centered[i], power);
    return pairwise_sum(p) / n;
  };
  const double m2 = central(2);
  const double m3 = central(3);
  const double m4 = central(4);
  const double sd = std::sqrt(m2);

  QuadraticVariance out;
  out.moment_form = m2 * m2 * (m4 / (m2 * m2) - (m3 * m3) / (m2 * m2 * m2) - 1.0);

  const double lo = mean - 3.0 * sd;
  const double hi = mean + 3.0 * sd;
  const double step = (hi - lo) / (grid_points - 1);
  int best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (int g = 0; g < grid_points; ++g) {
    const double value = objective(lo + g * step);
    if (value < best_value) {
      best_value = value;
      best = g;
    }
  }
  // Golden-section refinement on the bracketing grid cells.
  double a = lo + std::max(best - 1, 0) * step;
  double b = lo + std::min(best + 1, grid_points - 1) * step;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(c), fd = objective(d);
  for (int iter = 0; iter < 60 && (b - a) > 1e-12 * (1.0 + std::abs(a)); ++iter) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  out.argmin = 0.5 * (a + b);
  out.minimum = std::min(best_value, objective(out.argmin));
  return out;
}

double quadratic_variance_floor(const NoiseSpec& noise) {
  const double m2 = noise.moment(2);
  const double m3 = noise.moment(3);
  const double m4 = noise.moment(4);
  const double kurtosis = m4 / (m2 * m2);
  const double skew_sq = m3 * m3 / (m2 * m2 * m2);
  return m2 * m2 * (kurtosis - skew_sq - 1.0);
}

}  // namespace knnscale
