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

#include <cmath>
#include <random>

#include <boost/math/distributions/non_central_chi_squared.hpp>

#include "gtest/gtest.h"
#include "knnscale/dominance.hpp"
#include "knnscale/error.hpp"

namespace knnscale {
namespace {

std::vector<double> at(int d, double s0, double s1) {
  std::vector<double> x(static_cast<std::size_t>(d), 0.0);
  x[0] = s0;
  x[1] = s1;
  return x;
}

TEST(ChernoffTest, Examples) {
  for (int k : {1, 7, 100}) EXPECT_EQ(chernoff_vote_bound(1.0, k), 1.0);
  EXPECT_NEAR(chernoff_vote_bound(4.0, 2), 0.64, 1e-15);
  EXPECT_THROW(chernoff_vote_bound(0.0, 3), InvalidArgument);
}

TEST(ChernoffTest, RelativeEntropyIdentity) {
  for (double rho : {0.25, 2.0, 9.0}) {
    for (int k : {1, 10, 50}) {
      const double q = rho / (1 + rho);
      EXPECT_NEAR(chernoff_vote_bound(rho, k),
                  std::exp(-k * binary_relative_entropy(0.5, q)), 1e-12);
    }
  }
}

TEST(ChernoffTest, BinomialMonteCarlo) {
  std::mt19937_64 gen(12);
  for (double rho : {2.0, 4.0, 9.0}) {
    for (int k : {5, 10, 50}) {
      std::binomial_distribution<int> votes(k, rho / (1 + rho));
      const int n = 1000000;
      int wrong = 0;
      for (int i = 0; i < n; ++i) wrong += 2 * votes(gen) < k;
      const double p = wrong / double(n);
      const double bound = chernoff_vote_bound(rho, k);
      EXPECT_LE(p, bound + 3 * std::sqrt(bound * (1 - bound) / n) + 1e-12)
          << rho << " " << k;
    }
  }
}

TEST(BatteryTest, SymmetricPointGivesOne) {
  const auto dist = make_aligned(2, 0.5, 5);
  const auto x = at(5, 0.0, 0.1);
  const auto prop = prop1_bound_mc(dist, x, 50, 5, 200, 1);
  EXPECT_NEAR(prop.side0.mean, 1.0, 1e-9);
  EXPECT_NEAR(prop.side1.mean, 1.0, 1e-9);
  const auto half = remark1_bounds_mc(dist, x, 50, 5, 200, 1);
  EXPECT_EQ(half.side0.mean, 1.0);
  EXPECT_EQ(half.side1.mean, 1.0);
}

TEST(BatteryTest, FullKGivesOne) {
  const auto dist = make_aligned(2, 0.5, 5);
  const auto battery = point_battery(dist, at(5, 1.0, 0), 40, 40, 100, 2);
  EXPECT_EQ(battery.prop1_bound0.mean, 1.0);
  EXPECT_EQ(battery.prop1_bound1.mean, 1.0);
  EXPECT_EQ(battery.half0.mean, 1.0);
  for (double t : battery.t_k) EXPECT_EQ(t, 1.0);
}

TEST(BatteryTest, AlignedDomination) {
  const auto dist = make_aligned(2, 0.5, 5);
  const auto b = point_battery(dist, at(5, 1.0, 0), 200, 20, 10000, 3);
  EXPECT_EQ(b.bayes_label, 1);
  EXPECT_EQ(b.empty_ball_trials, 0u);
  const auto& miss = b.predict0;
  const double se_p = std::hypot(miss.std_error, b.prop1_bound0.std_error);
  EXPECT_LE(miss.mean, b.prop1_bound0.mean + 3 * se_p);
  const double se_h = std::hypot(miss.std_error, b.half0.std_error);
  EXPECT_LE(miss.mean, b.half0.mean + 3 * se_h);
  // Strongly positive: T_k > 1 every time, so half0 is exactly 1/2.
  EXPECT_EQ(b.half0.mean, 0.5);
}

TEST(FastRateTest, Values) {
  EXPECT_EQ(fast_rate_bound(12, 10, 0).value, 1.0);
  EXPECT_TRUE(fast_rate_bound(12, 10, 0).clamped);
  EXPECT_NEAR(fast_rate_bound(60, 10, 1).value, 2 * std::exp(-10.0) + std::exp(-6.0), 1e-15);
  EXPECT_NEAR(fast_rate_bound(60, 10, 1).value, 2.57e-3, 5e-6);
  for (double k = 1; k < 200; k += 7) {
    for (double tau = 0; tau < 3; tau += 0.25) {
      const double v = fast_rate_bound(k, 10, tau).value;
      EXPECT_LE(fast_rate_bound(k + 7, 10, tau).value, v);
      EXPECT_LE(fast_rate_bound(k, 10, tau + 0.25).value, v);
    }
  }
}

TEST(SlowRateTest, Values) {
  EXPECT_EQ(slow_rate_bound(0, 1000, 0.1, 1, 1, 1).value, 0.5);
  EXPECT_NEAR(slow_rate_bound(1e3, 1000, 0.1, 1, 1, 1).value, 0.5 - 1e3 * std::exp(-10.0), 1e-15);
  EXPECT_NEAR(slow_rate_bound(1e3, 1000, 0.1, 1, 1, 1).value, 0.4546, 1e-4);
  const auto big = slow_rate_bound(1e6, 1000, 0.1, 1, 1, 1);
  EXPECT_NEAR(big.raw_value, 0.5 - 1e6 * std::exp(-10.0), 1e-9);
  EXPECT_TRUE(big.vacuous);
  for (double n = 0; n < 1e5; n += 997) {
    EXPECT_LE(slow_rate_bound(n + 997, 1000, 0.1, 1, 1, 1).value,
              slow_rate_bound(n, 1000, 0.1, 1, 1, 1).value);
  }
}

TEST(GaussianTest, CentralMoments) {
  const auto [mu, sigma] = noise_distance_moments(NoiseSpec::standard_normal(8),
                                                  std::vector<double>(8, 0.0));
  EXPECT_EQ(mu, 8.0);
  EXPECT_EQ(sigma * sigma, 16.0);
}

TEST(GaussianTest, ShiftedMomentsAgainstMonteCarlo) {
  const auto noise = NoiseSpec::uniform_scaled(4, 1.5);
  const std::vector<double> x = {0.3, -1.0, 0.0, 2.0};
  const auto [mu, sigma] = noise_distance_moments(noise, x);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  const int n = 400000;
  double s1 = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    double v = 0;
    for (double h : x) v += std::pow(u(gen) - h, 2);
    s1 += v;
    s2 += v * v;
  }
  const double m = s1 / n;
  EXPECT_NEAR(m, mu, 4 * sigma / std::sqrt(n));
  EXPECT_NEAR(std::sqrt(s2 / n - m * m), sigma, 0.01 * sigma);
}

TEST(GaussianTest, GapShrinks) {
  const auto small = berry_esseen_gap(NoiseSpec::standard_normal(8),
                                      std::vector<double>(8, 0.0), 200000, 9);
  const auto large = berry_esseen_gap(NoiseSpec::standard_normal(512),
                                      std::vector<double>(512, 0.0), 200000, 9);
  EXPECT_LT(large.cdf_gap, small.cdf_gap);
  EXPECT_LT(large.pdf_gap, small.pdf_gap);
  EXPECT_DOUBLE_EQ(large.bin_width, std::pow(512.0, -0.25));
}

TEST(GaussianTest, NonGaussianNoiseRoute) {
  const auto r = berry_esseen_gap(NoiseSpec::uniform_scaled(64, 1.0),
                                  std::vector<double>(64, 0.5), 50000, 2);
  EXPECT_LT(r.cdf_gap, 0.05);
  EXPECT_EQ(r.norm_inf, 0.5);
}

TEST(SeriesTest, CentralCase) {
  for (int d_n : {4, 8, 32}) {
    const double m = d_n / 2 - 1;
    for (double t : {0.5, 3.0, 10.0, 40.0}) {
      EXPECT_NEAR(noncentral_chi2_logderiv(d_n, 0.0, t), m / t - 0.5, 1e-10);
    }
  }
}

TEST(SeriesTest, DensityAgainstBoost) {
  for (int d_n : {4, 16, 64}) {
    for (double lambda : {0.0, 2.0, 30.0, 2000.0}) {
      boost::math::non_central_chi_squared_distribution<double> oracle(d_n, lambda);
      const double mu = d_n + lambda, sd = std::sqrt(2 * (d_n + 2 * lambda));
      for (double z : {-2.0, -0.5, 0.0, 1.0, 3.0}) {
        const double t = std::max(0.1, mu + z * sd);
        const double expected = boost::math::pdf(oracle, t);
        EXPECT_NEAR(noncentral_chi2_density_series(d_n, lambda, t), expected,
                    1e-9 * expected)
            << d_n << " " << lambda << " " << t;
      }
    }
  }
}

// Central differences of log g from the Boost density.
TEST(SeriesTest, LogDerivativeBracketsMode) {
  const int d_n = 16;
  const double lambda = 4;
  boost::math::non_central_chi_squared_distribution<double> oracle(d_n, lambda);
  const double mu = d_n + lambda, sigma = std::sqrt(2 * (d_n + 2 * lambda));
  for (double t : {mu - sigma, mu, mu + sigma, 5.0, 60.0}) {
    const double h = 1e-5 * t;
    const double numeric = (std::log(boost::math::pdf(oracle, t + h)) -
                            std::log(boost::math::pdf(oracle, t - h))) / (2 * h);
    EXPECT_NEAR(noncentral_chi2_logderiv(d_n, lambda, t), numeric, 1e-6) << t;
  }
  EXPECT_GT(noncentral_chi2_logderiv(d_n, lambda, mu - sigma), 0.0);
  EXPECT_LT(noncentral_chi2_logderiv(d_n, lambda, mu + sigma), 0.0);
}

TEST(SeriesTest, SmoothnessAndNormalization) {
  for (int d_n : {8, 16, 32}) {
    for (double lambda : {0.0, 2.0, 8.0}) {
      const auto s = series_smoothness(d_n, lambda, 0.1);
      EXPECT_LE(s.max_abs_logderiv, 20 * 0.1) << d_n << " " << lambda;
      EXPECT_NEAR(s.normalization, 1.0, 1e-8) << d_n << " " << lambda;
    }
  }
}

TEST(SeriesTest, RejectsOddDegrees) {
  EXPECT_THROW(noncentral_chi2_logderiv(7, 1, 1), InvalidArgument);
  EXPECT_THROW(noncentral_chi2_logderiv(8, 1, 0), InvalidArgument);
}

TEST(QuadraticTest, MomentFloor) {
  for (double m : {0.5, 1.0, 2.0}) {
    const auto noise = NoiseSpec::uniform_scaled(1, m);
    const double p_inf = 1 / (2 * m);
    EXPECT_NEAR(quadratic_variance_floor(noise), 1 / (180 * std::pow(p_inf, 4)), 1e-6);
    EXPECT_NEAR(quadratic_variance_floor(noise), 4 * std::pow(m, 4) / 45, 1e-12);
  }
  EXPECT_NEAR(quadratic_variance_floor(NoiseSpec::standard_normal(1)), 2.0, 1e-12);
}

TEST(QuadraticTest, GridMatchesSampleMoments) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-1, 1);
  std::normal_distribution<double> z;
  std::vector<double> uniform(200000), triangle(200000), normal(200000);
  for (auto& v : uniform) v = u(gen);
  for (auto& v : triangle) v = (u(gen) + u(gen)) / 2;  // density peak 1 on [-1, 1]
  for (auto& v : normal) v = z(gen);
  for (const auto* s : {&uniform, &triangle, &normal}) {
    const auto q = min_quadratic_variance(*s);
    EXPECT_NEAR(q.minimum, q.moment_form, 1e-6 * q.moment_form);
  }
  EXPECT_NEAR(min_quadratic_variance(uniform).minimum, 4.0 / 45, 0.02 * 4.0 / 45);
  EXPECT_NEAR(min_quadratic_variance(normal).minimum, 2.0, 0.04);
  // ||p||_inf = 1 for both bounded samples.
  EXPECT_GE(min_quadratic_variance(uniform).minimum, 0.98 / 180 / std::pow(0.5, 4) * 1.0);
  EXPECT_GE(min_quadratic_variance(triangle).minimum, 1.0 / 180);
}

TEST(QuadraticTest, Degenerate) {
  const std::vector<double> flat(10, 3.0);
  EXPECT_THROW(min_quadratic_variance(flat), InvalidArgument);
}

}  // namespace
}  // namespace knnscale
