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
#include <fstream>
#include <numbers>
#include <sstream>

#include "knnscale/csv.hpp"
#include "knnscale/error.hpp"

namespace knnscale {

using detail::require;

std::array<std::size_t, 2> Dataset::class_counts() const {
  std::array<std::size_t, 2> counts{0, 0};
  for (auto label : labels) ++counts[label != 0];
  return counts;
}

void Dataset::validate() const {
  require(n >= 1, "dataset must hold at least one point");
  require(d >= 1, "dataset dimension must be positive");
  require(points.size() == n * d, "dataset rows do not match dimension");
  require(labels.size() == n, "dataset label count does not match rows");
  for (auto label : labels) require(label <= 1, "labels must be 0 or 1");
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  CsvWriter out(path);
  std::vector<std::string> names;
  for (std::size_t j = 0; j < data.d; ++j) names.push_back("x" + std::to_string(j));
  names.emplace_back("y");
  out.header(names);
  for (std::size_t i = 0; i < data.n; ++i) {
    for (double v : data.row(i)) out.field(v);
    out.field(static_cast<int>(data.labels[i]));
    out.end_row();
  }
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty dataset file");
  const auto header = split(line, ',');
  if (header.size() < 2 || header.back() != "y") {
    throw DataError("dataset header must end with ',y'");
  }
  Dataset data;
  data.d = header.size() - 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != data.d + 1) {
      throw DataError("row " + std::to_string(data.n + 2) +
                      " has the wrong field count");
    }
    for (std::size_t j = 0; j < data.d; ++j) {
      data.points.push_back(parse_double(fields[j]));
    }
    if (fields.back() != "0" && fields.back() != "1") {
      throw DataError("label must be 0 or 1 on row " +
                      std::to_string(data.n + 2));
    }
    data.labels.push_back(fields.back() == "1");
    ++data.n;
  }
  data.validate();
  return data;
}

std::string to_string(SignalKind kind) {
  switch (kind) {
    case SignalKind::kAlignedRect: return "aligned";
    case SignalKind::kRotatedRect: return "rotated";
    case SignalKind::kRampRect: return "ramp";
    case SignalKind::kEllipseRect: return "ellipse";
    case SignalKind::kMixtureRect: return "mixture";
    case SignalKind::kCustom: return "custom";
  }
  return "unknown";
}

namespace {

constexpr double kEllipseLevel = 8.0 / std::numbers::pi;

double integrate_prior(const SignalSpec& signal) {
  double mass1 = 0.0, total = 0.0;
  for_each_signal_cell(signal, 1024,
                       [&](const SignalPoint&, double w0, double w1) {
                         mass1 += w1;
                         total += w0 + w1;
                       });
  return mass1 / total;
}

}  // namespace

SignalSpec SignalSpec::aligned(double a, double b) {
  require(a > 0 && b > 0, "rectangle half-widths must be positive");
  SignalSpec s;
  s.kind_ = SignalKind::kAlignedRect;
  s.a_ = a;
  s.b_ = b;
  s.pi1_ = 0.5;
  return s;
}

SignalSpec SignalSpec::rotated(double a, double b, double slope) {
  require(a > 0 && b > 0, "rectangle half-widths must be positive");
  require(std::isfinite(slope), "slope must be finite");
  SignalSpec s;
  s.kind_ = SignalKind::kRotatedRect;
  s.a_ = a;
  s.b_ = b;
  s.slope_ = slope;
  // A line through the center bisects the centrally symmetric box.
  s.pi1_ = 0.5;
  return s;
}

SignalSpec SignalSpec::ramp(double a, double b) {
  require(a > 1, "ramp preset needs a > 1 so every eta branch is active");
  require(b > 0, "rectangle half-widths must be positive");
  SignalSpec s;
  s.kind_ = SignalKind::kRampRect;
  s.a_ = a;
  s.b_ = b;
  s.pi1_ = 0.5;  // eta(-s) = 1 - eta(s)
  return s;
}

SignalSpec SignalSpec::ellipse(double a, double b) {
  require(a > 0 && b > 0, "rectangle half-widths must be positive");
  SignalSpec s;
  s.kind_ = SignalKind::kEllipseRect;
  s.a_ = a;
  s.b_ = b;
  const double semi0 = std::sqrt(kEllipseLevel);
  const double semi1 = semi0 / 4.0;
  if (semi0 <= a && semi1 <= b) {
    s.pi1_ = std::numbers::pi * semi0 * semi1 / (4.0 * a * b);
  } else {
    s.pi1_ = integrate_prior(s);
  }
  return s;
}

SignalSpec SignalSpec::mixture(double a, double b, double weight0,
                               double weight1) {
  require(a > 0 && b > 0, "rectangle half-widths must be positive");
  require(weight0 > 0 && weight1 > 0, "mixture weights must be positive");
  SignalSpec s;
  s.kind_ = SignalKind::kMixtureRect;
  s.a_ = a;
  s.b_ = b;
  const double total = weight0 + weight1;
  s.mixture_weights_ = {weight0 / total, weight1 / total};
  s.pi1_ = s.mixture_weights_[1];
  return s;
}

SignalSpec SignalSpec::custom(double a, double b, CustomHooks hooks) {
  require(a > 0 && b > 0, "rectangle half-widths must be positive");
  require(hooks.eta && hooks.marginal_density && hooks.marginal_sampler,
          "custom signal needs eta, density and sampler hooks");
  SignalSpec s;
  s.kind_ = SignalKind::kCustom;
  s.a_ = a;
  s.b_ = b;
  s.hooks_ = std::make_shared<const CustomHooks>(std::move(hooks));
  s.pi1_ = integrate_prior(s);
  require(s.pi1_ > 0 && s.pi1_ < 1, "custom signal must put mass on both classes");
  return s;
}

double SignalSpec::radius() const { return std::hypot(a_, b_); }

bool SignalSpec::realizable() const {
  switch (kind_) {
    case SignalKind::kRampRect: return false;
    case SignalKind::kCustom: return hooks_->realizable;
    default: return true;
  }
}

double SignalSpec::eta(const SignalPoint& s) const {
  switch (kind_) {
    case SignalKind::kAlignedRect:
    case SignalKind::kMixtureRect:
      return s[0] > 0 ? 1.0 : 0.0;
    case SignalKind::kRotatedRect:
      return s[1] > slope_ * s[0] ? 1.0 : 0.0;
    case SignalKind::kRampRect:
      if (s[0] < -1) return 0.0;
      if (s[0] > 1) return 1.0;
      return (s[0] + 1.0) / 2.0;
    case SignalKind::kEllipseRect:
      return s[0] * s[0] + 16.0 * s[1] * s[1] <= kEllipseLevel ? 1.0 : 0.0;
    case SignalKind::kCustom:
      return hooks_->eta(s);
  }
  return 0.0;
}

double SignalSpec::marginal_density(const SignalPoint& s) const {
  if (std::abs(s[0]) > a_ || std::abs(s[1]) > b_) return 0.0;
  switch (kind_) {
    case SignalKind::kMixtureRect: {
      const double w = s[0] > 0 ? mixture_weights_[1] : mixture_weights_[0];
      return w / (a_ * 2.0 * b_);
    }
    case SignalKind::kCustom:
      return hooks_->marginal_density(s);
    default:
      return 1.0 / (4.0 * a_ * b_);
  }
}

SignalPoint SignalSpec::sample_marginal(Rng& rng) const {
  switch (kind_) {
    case SignalKind::kMixtureRect: {
      const double half = rng.uniform(0.0, a_);
      const double s0 = rng.bernoulli(mixture_weights_[1]) ? half : -half;
      return {s0, rng.uniform(-b_, b_)};
    }
    case SignalKind::kCustom:
      return hooks_->marginal_sampler(rng);
    default: {
      const double s0 = rng.uniform(-a_, a_);
      return {s0, rng.uniform(-b_, b_)};
    }
  }
}

SignalPoint SignalSpec::sample_conditional(int label, Rng& rng) const {
  const bool indicator = realizable();
  for (;;) {
    const SignalPoint s = sample_marginal(rng);
    const double e = eta(s);
    const double accept = label == 1 ? e : 1.0 - e;
    if (indicator ? accept >= 0.5 : rng.uniform() < accept) return s;
  }
}

std::optional<double> SignalSpec::closed_form_bayes_risk() const {
  if (kind_ == SignalKind::kRampRect) {
    // min(eta, 1 - eta) integrates to 1/2 over |s0| <= 1; density 1/(2a).
    return 1.0 / (4.0 * a_);
  }
  if (kind_ != SignalKind::kCustom) return 0.0;
  return std::nullopt;
}

NoiseSpec NoiseSpec::standard_normal(int dim) {
  require(dim >= 1, "noise dimension must be at least 1");
  NoiseSpec n;
  n.dim_ = dim;
  n.family_ = NoiseFamily::kStandardNormal;
  return n;
}

NoiseSpec NoiseSpec::uniform_scaled(int dim, double half_width) {
  require(dim >= 1, "noise dimension must be at least 1");
  require(half_width > 0, "uniform half-width must be positive");
  NoiseSpec n;
  n.dim_ = dim;
  n.family_ = NoiseFamily::kUniformScaled;
  n.half_width_ = half_width;
  return n;
}

NoiseSpec NoiseSpec::custom(int dim, CustomHooks hooks) {
  require(dim >= 1, "noise dimension must be at least 1");
  require(hooks.density && hooks.sampler, "custom noise needs density and sampler");
  require(hooks.density_bound >= 1, "density bound M must be >= 1");
  NoiseSpec n;
  n.dim_ = dim;
  n.family_ = NoiseFamily::kCustom;
  n.hooks_ = std::make_shared<const CustomHooks>(std::move(hooks));
  return n;
}

double NoiseSpec::density_bound() const {
  switch (family_) {
    case NoiseFamily::kStandardNormal:
      return 1.0;  // sup phi = 0.399, total variation 0.798
    case NoiseFamily::kUniformScaled:
      // sup p = 1/(2w); total variation of the box density = 1/w.
      return std::max(1.0, 1.0 / half_width_);
    case NoiseFamily::kCustom:
      return hooks_->density_bound;
  }
  return 1.0;
}

double NoiseSpec::sample(Rng& rng) const {
  switch (family_) {
    case NoiseFamily::kStandardNormal: return rng.normal();
    case NoiseFamily::kUniformScaled:
      return rng.uniform(-half_width_, half_width_);
    case NoiseFamily::kCustom: return hooks_->sampler(rng);
  }
  return 0.0;
}

double NoiseSpec::density(double v) const {
  switch (family_) {
    case NoiseFamily::kStandardNormal:
      return std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi);
    case NoiseFamily::kUniformScaled:
      return std::abs(v) <= half_width_ ? 0.5 / half_width_ : 0.0;
    case NoiseFamily::kCustom: return hooks_->density(v);
  }
  return 0.0;
}

double NoiseSpec::moment(int k) const {
  require(k >= 2 && k <= 4, "central moment order must be 2, 3 or 4");
  switch (family_) {
    case NoiseFamily::kStandardNormal:
      return k == 2 ? 1.0 : (k == 3 ? 0.0 : 3.0);
    case NoiseFamily::kUniformScaled: {
      const double w2 = half_width_ * half_width_;
      return k == 2 ? w2 / 3.0 : (k == 3 ? 0.0 : w2 * w2 / 5.0);
    }
    case NoiseFamily::kCustom: return hooks_->moments[k - 2];
  }
  return 0.0;
}

ProductDistribution::ProductDistribution(SignalSpec signal, NoiseSpec noise)
    : signal_(std::move(signal)), noise_(std::move(noise)) {}

void ProductDistribution::sample_point(Rng& rng, std::span<double> out,
                                       std::uint8_t& label) const {
  label = rng.bernoulli(signal_.prior(1)) ? 1 : 0;
  const SignalPoint s = signal_.sample_conditional(label, rng);
  out[0] = s[0];
  out[1] = s[1];
  for (int j = 0; j < noise_.dim(); ++j) out[2 + j] = noise_.sample(rng);
}

double ProductDistribution::eta_at(std::span<const double> x) const {
  require(x.size() == static_cast<std::size_t>(d()),
          "point dimension does not match the distribution");
  return signal_.eta(signal_of(x));
}

int ProductDistribution::bayes_at(std::span<const double> x) const {
  return eta_at(x) >= 0.5 ? 1 : 0;
}

double ProductDistribution::bayes_risk() const {
  if (auto closed = signal_.closed_form_bayes_risk()) return *closed;
  return bayes_risk_quadrature(2048);
}

double ProductDistribution::bayes_risk_quadrature(int grid) const {
  double risk = 0.0;
  for_each_signal_cell(signal_, grid,
                       [&](const SignalPoint&, double w0, double w1) {
                         risk += std::min(w0, w1);
                       });
  return risk;
}

ProductDistribution make_aligned(double a, double b, int d) {
  require(d >= 3, "dimension must be at least 3");
  return {SignalSpec::aligned(a, b), NoiseSpec::standard_normal(d - 2)};
}

ProductDistribution make_rotated(double a, double b, int d, double slope) {
  require(d >= 3, "dimension must be at least 3");
  if (slope == 0.5) {
    require(a > 2 * b, "rotated preset with slope 1/2 requires a > 2b");
  }
  return {SignalSpec::rotated(a, b, slope), NoiseSpec::standard_normal(d - 2)};
}

ProductDistribution make_ramp(double a, double b, int d) {
  require(d >= 3, "dimension must be at least 3");
  return {SignalSpec::ramp(a, b), NoiseSpec::standard_normal(d - 2)};
}

ProductDistribution make_ellipse(double a, double b, int d) {
  require(d >= 3, "dimension must be at least 3");
  return {SignalSpec::ellipse(a, b), NoiseSpec::standard_normal(d - 2)};
}

ProductDistribution make_unbalanced(int d) {
  require(d >= 3, "dimension must be at least 3");
  return {SignalSpec::mixture(2.0, 0.5, 0.75, 0.25),
          NoiseSpec::standard_normal(d - 2)};
}

Dataset sample(const ProductDistribution& dist, std::size_t n,
               std::uint64_t seed) {
  require(n >= 1, "sample size must be at least 1");
  Dataset data(n, static_cast<std::size_t>(dist.d()));
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    dist.sample_point(rng, data.row(i), data.labels[i]);
  }
  return data;
}

void for_each_signal_cell(
    const SignalSpec& signal, int grid,
    const std::function<void(const SignalPoint&, double, double)>& visit) {
  require(grid >= 2, "quadrature grid must have at least 2 cells per side");
  const double h0 = 2.0 * signal.a() / grid;
  const double h1 = 2.0 * signal.b() / grid;
  const double area = h0 * h1;
  for (int i = 0; i < grid; ++i) {
    const double s0 = -signal.a() + (i + 0.5) * h0;
    for (int j = 0; j < grid; ++j) {
      const SignalPoint s{s0, -signal.b() + (j + 0.5) * h1};
      const double mass = signal.marginal_density(s) * area;
      const double e = signal.eta(s);
      visit(s, mass * (1.0 - e), mass * e);
    }
  }
}

}  // namespace knnscale
