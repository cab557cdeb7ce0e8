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

#include "knnscale/distributions.hpp"

#include <cmath>
#include <filesystem>
#include <random>

#include "gtest/gtest.h"
#include "knnscale/error.hpp"

namespace knnscale {
namespace {

double label_rate(const Dataset& data) {
  return static_cast<double>(data.class_counts()[1]) / data.n;
}

TEST(PresetTest, AlignedShape) {
  const auto dist = make_aligned(2, 0.5, 10);
  EXPECT_EQ(dist.d(), 10);
  EXPECT_EQ(dist.signal_dim(), 2);
  EXPECT_EQ(dist.noise_dim(), 8);
  EXPECT_DOUBLE_EQ(dist.signal().radius(), std::sqrt(4.25));
  const auto small = make_aligned(1, 1, 3);
  EXPECT_DOUBLE_EQ(small.signal().radius(), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(small.prior(1), 0.5);
}

TEST(PresetTest, BalancedLabelRates) {
  EXPECT_NEAR(label_rate(sample(make_aligned(2, 0.5, 10), 100000, 11)), 0.5, 0.005);
  EXPECT_NEAR(label_rate(sample(make_rotated(2, 0.5, 10), 100000, 12)), 0.5, 0.005);
}

TEST(PresetTest, RotatedRule) {
  const auto dist = make_rotated(2, 0.5, 10, 0.5);
  std::vector<double> x(10, 0.0);
  EXPECT_EQ(dist.eta_at(x), 0.0);
  EXPECT_EQ(dist.bayes_at(x), 0);
  x[0] = 0.6;
  x[1] = 0.3 + 0.1;
  EXPECT_EQ(dist.eta_at(x), 1.0);
  EXPECT_THROW(make_rotated(1, 0.5, 10, 0.5), InvalidArgument);
}

TEST(PresetTest, RampEta) {
  const auto dist = make_ramp(2, 0.5, 10);
  std::vector<double> x(10, 0.0);
  EXPECT_EQ(dist.eta_at(x), 0.5);
  EXPECT_EQ(dist.bayes_at(x), 1);
  x[0] = 1;
  EXPECT_EQ(dist.eta_at(x), 1.0);
  x[0] = -1.7;
  EXPECT_EQ(dist.eta_at(x), 0.0);
}

// Independent 1-D Simpson rule for the Bayes risk of the ramp: the s1 margin
// integrates out, leaving (1 / 2a) * integral of min(eta, 1 - eta) over s0.
TEST(PresetTest, RampBayesRiskOracle) {
  const double a = 2.0;
  const int m = 20000;
  double sum = 0;
  for (int i = 0; i <= m; ++i) {
    const double t = -a + 2 * a * i / m;
    const double eta = std::clamp((t + 1) / 2, 0.0, 1.0);
    const double w = (i == 0 || i == m) ? 1 : (i % 2 ? 4 : 2);
    sum += w * std::min(eta, 1 - eta) / (2 * a);
  }
  const double oracle = sum * (2 * a / m) / 3;
  EXPECT_NEAR(oracle, 0.125, 1e-9);
  const auto dist = make_ramp(2, 0.5, 10);
  EXPECT_NEAR(dist.bayes_risk(), oracle, 1e-9);
  EXPECT_NEAR(dist.bayes_risk_quadrature(512), oracle, 1e-5);
}

TEST(PresetTest, EllipseHalfMass) {
  const auto dist = make_ellipse(2, 0.5, 10);
  EXPECT_NEAR(dist.prior(1), 0.5, 1e-4);
  std::vector<double> x(10, 0.0);
  EXPECT_EQ(dist.eta_at(x), 1.0);
  x[0] = 2;
  x[1] = 0.5;
  EXPECT_EQ(dist.eta_at(x), 0.0);
  // Monte Carlo oracle of the area fraction with a separate generator.
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u0(-2, 2), u1(-0.5, 0.5);
  int inside = 0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double s0 = u0(gen), s1 = u1(gen);
    inside += s0 * s0 + 16 * s1 * s1 <= 8 / M_PI;
  }
  EXPECT_NEAR(inside / double(n), 0.5, 0.002);
  EXPECT_NEAR(label_rate(sample(dist, 200000, 3)), 0.5, 0.005);
}

TEST(PresetTest, Unbalanced) {
  const auto dist = make_unbalanced(10);
  const auto data = sample(dist, 100000, 4);
  EXPECT_NEAR(label_rate(data), 0.25, 0.01);
  EXPECT_EQ(dist.bayes_risk(), 0.0);
  double lo = 1e9, hi = -1e9, mean = 0;
  std::size_t ones = 0;
  for (std::size_t i = 0; i < data.n; ++i) {
    if (data.labels[i] != 1) continue;
    lo = std::min(lo, data.row(i)[0]);
    hi = std::max(hi, data.row(i)[0]);
    mean += data.row(i)[0];
    ++ones;
  }
  EXPECT_GE(lo, 0.0);
  EXPECT_LE(hi, 2.0);
  EXPECT_NEAR(mean / ones, 1.0, 0.02);
}

TEST(PresetTest, RealizableRiskIsZero) {
  EXPECT_EQ(make_aligned(2, 0.5, 10).bayes_risk(), 0.0);
  EXPECT_EQ(make_rotated(2, 0.5, 10).bayes_risk(), 0.0);
  EXPECT_EQ(make_ellipse(2, 0.5, 10).bayes_risk(), 0.0);
}

TEST(PresetTest, RejectsSmallDimension) {
  EXPECT_THROW(make_aligned(2, 0.5, 2), InvalidArgument);
  EXPECT_THROW(sample(make_aligned(2, 0.5, 3), 0, 1), InvalidArgument);
}

TEST(SampleTest, Deterministic) {
  const auto dist = make_aligned(2, 0.5, 10);
  EXPECT_EQ(sample(dist, 100, 7), sample(dist, 100, 7));
  EXPECT_NE(sample(dist, 100, 7), sample(dist, 100, 8));
}

TEST(SampleTest, NoiseMomentsAndIndependence) {
  const auto data = sample(make_aligned(2, 0.5, 10), 100000, 21);
  double m = 0, v = 0;
  for (std::size_t i = 0; i < data.n; ++i) m += data.row(i)[3];
  m /= data.n;
  for (std::size_t i = 0; i < data.n; ++i) v += std::pow(data.row(i)[3] - m, 2);
  v /= data.n;
  EXPECT_NEAR(m, 0.0, 0.01);
  EXPECT_NEAR(v, 1.0, 0.02);
  for (int s = 0; s < 2; ++s) {
    for (int j = 2; j < 10; ++j) {
      double ms = 0, mj = 0, c = 0;
      for (std::size_t i = 0; i < data.n; ++i) {
        ms += data.row(i)[s];
        mj += data.row(i)[j];
      }
      ms /= data.n;
      mj /= data.n;
      double vs = 0;
      for (std::size_t i = 0; i < data.n; ++i) {
        c += (data.row(i)[s] - ms) * (data.row(i)[j] - mj);
        vs += std::pow(data.row(i)[s] - ms, 2);
      }
      const double corr = c / std::sqrt(vs * data.n);  // noise variance is 1
      EXPECT_LT(std::abs(corr), 4 / std::sqrt(double(data.n))) << s << "," << j;
    }
  }
}

TEST(SampleTest, AlignedLabelsMatchSign) {
  const auto data = sample(make_aligned(2, 0.5, 10), 5000, 2);
  for (std::size_t i = 0; i < data.n; ++i) {
    EXPECT_EQ(data.labels[i], data.row(i)[0] > 0 ? 1 : 0);
  }
}

TEST(SampleTest, SignalBounded) {
  for (const auto& dist : {make_aligned(2, 0.5, 5), make_rotated(2, 0.5, 5),
                           make_ramp(2, 0.5, 5), make_ellipse(2, 0.5, 5),
                           make_unbalanced(5)}) {
    const auto data = sample(dist, 20000, 8);
    const double r = dist.signal().radius();
    for (std::size_t i = 0; i < data.n; ++i) {
      ASSERT_LE(std::hypot(data.row(i)[0], data.row(i)[1]), r);
    }
  }
}

// For each preset, the label-1 fraction in each cell of a 20 x 20 grid must
// match the cell average of eta, itself taken on a 32 x 32 sub-grid weighted
// by the marginal density.
TEST(SampleTest, LabelsFollowEta) {
  for (const auto& dist : {make_aligned(2, 0.5, 3), make_rotated(2, 0.5, 3),
                           make_ramp(2, 0.5, 3), make_ellipse(2, 0.5, 3),
                           make_unbalanced(3)}) {
    const auto& sig = dist.signal();
    const double a = sig.a(), b = sig.b();
    const auto data = sample(dist, 100000, 31);
    std::vector<int> total(400), ones(400);
    for (std::size_t i = 0; i < data.n; ++i) {
      const int c0 = std::min(19, static_cast<int>((data.row(i)[0] + a) / (2 * a) * 20));
      const int c1 = std::min(19, static_cast<int>((data.row(i)[1] + b) / (2 * b) * 20));
      ++total[c0 * 20 + c1];
      ones[c0 * 20 + c1] += data.labels[i];
    }
    for (int c0 = 0; c0 < 20; ++c0) {
      for (int c1 = 0; c1 < 20; ++c1) {
        double num = 0, den = 0;
        for (int u = 0; u < 32; ++u) {
          for (int v = 0; v < 32; ++v) {
            const SignalPoint s{-a + 2 * a * (c0 + (u + 0.5) / 32) / 20,
                                -b + 2 * b * (c1 + (v + 0.5) / 32) / 20};
            const double p = sig.marginal_density(s);
            num += p * sig.eta(s);
            den += p;
          }
        }
        const int t = total[c0 * 20 + c1];
        if (t == 0) continue;
        const double eta = num / den;
        const double se = std::sqrt(std::max(eta * (1 - eta), 1.0 / t) / t);
        EXPECT_NEAR(ones[c0 * 20 + c1] / double(t), eta, 4 * se + 0.01)
            << to_string(sig.kind()) << " cell " << c0 << "," << c1;
      }
    }
  }
}

TEST(DatasetTest, CsvRoundTrip) {
  const auto data = sample(make_ramp(2, 0.5, 4), 50, 3);
  const auto path = std::filesystem::temp_directory_path() / "knnscale_dataset.csv";
  write_dataset_csv(data, path);
  EXPECT_EQ(read_dataset_csv(path), data);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace knnscale
