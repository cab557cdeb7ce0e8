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
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "knnscale/rng.hpp"

namespace knnscale {

/// n labeled points in R^d, row-major.
struct Dataset {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> points;
  std::vector<std::uint8_t> labels;

  Dataset() = default;
  Dataset(std::size_t rows, std::size_t dim)
      : n(rows), d(dim), points(rows * dim), labels(rows) {}

  std::span<const double> row(std::size_t i) const {
    return {points.data() + i * d, d};
  }
  std::span<double> row(std::size_t i) { return {points.data() + i * d, d}; }

  /// (count of label 0, count of label 1)
  std::array<std::size_t, 2> class_counts() const;

  /// Throws InvalidArgument if the shape or labels are inconsistent.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// CSV with header x0,...,x{d-1},y and round-trip decimal formatting.
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path);

using SignalPoint = std::array<double, 2>;

enum class SignalKind {
  kAlignedRect,
  kRotatedRect,
  kRampRect,
  kEllipseRect,
  kMixtureRect,
  kCustom
};

std::string to_string(SignalKind kind);

/// Two-dimensional signal law carrying the label. Every preset lives on the
/// box [-a, a] x [-b, b]; the marginal density is zero outside it.
class SignalSpec {
 public:
  struct CustomHooks {
    std::function<double(const SignalPoint&)> eta;
    std::function<double(const SignalPoint&)> marginal_density;
    std::function<SignalPoint(Rng&)> marginal_sampler;
    bool realizable = false;
  };

  /// Uniform box, Y = 1{s0 > 0}.
  static SignalSpec aligned(double a, double b);
  /// Uniform box, Y = 1{s1 > slope * s0}.
  static SignalSpec rotated(double a, double b, double slope);
  /// Uniform box, eta = clamp((s0 + 1) / 2, 0, 1), labels Bernoulli(eta).
  static SignalSpec ramp(double a, double b);
  /// Uniform box, Y = 1{s0^2 + 16 s1^2 <= 8 / pi}.
  static SignalSpec ellipse(double a, double b);
  /// s0 ~ w0 U[-a, 0] + w1 U[0, a], s1 ~ U[-b, b], Y = 1{s0 > 0}.
  static SignalSpec mixture(double a, double b, double weight0,
                            double weight1);
  /// User hooks; the prior is computed by quadrature.
  static SignalSpec custom(double a, double b, CustomHooks hooks);

  SignalKind kind() const { return kind_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double slope() const { return slope_; }
  double radius() const;
  double prior(int label) const { return label == 1 ? pi1_ : 1.0 - pi1_; }
  bool realizable() const;

  double eta(const SignalPoint& s) const;
  double marginal_density(const SignalPoint& s) const;
  SignalPoint sample_marginal(Rng& rng) const;
  /// Rejection sampling from the marginal: accept with probability eta
  /// (label 1) or 1 - eta (label 0).
  SignalPoint sample_conditional(int label, Rng& rng) const;

  /// L* when known analytically.
  std::optional<double> closed_form_bayes_risk() const;

 private:
  SignalSpec() = default;

  SignalKind kind_ = SignalKind::kAlignedRect;
  double a_ = 1.0;
  double b_ = 1.0;
  double slope_ = 0.0;
  double pi1_ = 0.5;
  std::array<double, 2> mixture_weights_{0.5, 0.5};
  std::shared_ptr<const CustomHooks> hooks_;
};

enum class NoiseFamily { kStandardNormal, kUniformScaled, kCustom };

/// i.i.d. zero-mean noise coordinates.
class NoiseSpec {
 public:
  struct CustomHooks {
    std::function<double(double)> density;
    std::function<double(Rng&)> sampler;
    // Central moments E[xi^2], E[xi^3], E[xi^4].
    std::array<double, 3> moments{1.0, 0.0, 3.0};
    double density_bound = 1.0;
  };

  static NoiseSpec standard_normal(int dim);
  /// Uniform[-half_width, half_width] per coordinate.
  static NoiseSpec uniform_scaled(int dim, double half_width);
  static NoiseSpec custom(int dim, CustomHooks hooks);

  int dim() const { return dim_; }
  NoiseFamily family() const { return family_; }
  double half_width() const { return half_width_; }
  /// M >= 1 with ||p||_inf <= M and V(p) <= M.
  double density_bound() const;

  double sample(Rng& rng) const;
  double density(double value) const;
  /// k-th central moment for k in {2, 3, 4}.
  double moment(int k) const;

 private:
  NoiseSpec() = default;

  int dim_ = 1;
  NoiseFamily family_ = NoiseFamily::kStandardNormal;
  double half_width_ = 0.0;
  std::shared_ptr<const CustomHooks> hooks_;
};

/// Signal (coordinates 0, 1) times noise (coordinates 2 .. d-1).
class ProductDistribution {
 public:
  ProductDistribution(SignalSpec signal, NoiseSpec noise);

  const SignalSpec& signal() const { return signal_; }
  const NoiseSpec& noise() const { return noise_; }
  int d() const { return 2 + noise_.dim(); }
  int signal_dim() const { return 2; }
  int noise_dim() const { return noise_.dim(); }
  double prior(int label) const { return signal_.prior(label); }

  /// Label from the prior, then the label-conditional signal, then noise.
  void sample_point(Rng& rng, std::span<double> out, std::uint8_t& label) const;

  double eta_at(std::span<const double> x) const;
  int bayes_at(std::span<const double> x) const;
  /// Closed form where available, otherwise a 2048 x 2048 midpoint rule.
  double bayes_risk() const;
  double bayes_risk_quadrature(int grid) const;

 private:
  SignalSpec signal_;
  NoiseSpec noise_;
};

ProductDistribution make_aligned(double a, double b, int d);
/// Requires a > 2b when slope = 1/2. For other slopes balance of the classes
/// is the caller's concern.
ProductDistribution make_rotated(double a, double b, int d,
                                 double slope = 0.5);
ProductDistribution make_ramp(double a, double b, int d);
ProductDistribution make_ellipse(double a, double b, int d);
ProductDistribution make_unbalanced(int d);

/// n i.i.d. draws; bit-identical for identical (dist, n, seed).
Dataset sample(const ProductDistribution& dist, std::size_t n,
               std::uint64_t seed);

inline SignalPoint signal_of(std::span<const double> x) { return {x[0], x[1]}; }

/// Midpoint grid over the signal box. visit(s, w0, w1) receives the cell
/// center and the class masses pi_theta * P_theta[cell], i.e.
/// p(s) * (1 - eta(s)) * area and p(s) * eta(s) * area.
void for_each_signal_cell(
    const SignalSpec& signal, int grid,
    const std::function<void(const SignalPoint&, double, double)>& visit);

}  // namespace knnscale
