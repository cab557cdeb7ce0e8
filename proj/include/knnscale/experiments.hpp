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
#include <filesystem>
#include <string>
#include <vector>

#include "knnscale/dominance.hpp"
#include "knnscale/distributions.hpp"
#include "knnscale/knn.hpp"

namespace knnscale {

/// A named distribution preset with its parameters.
struct PresetSpec {
  std::string name = "aligned";  // aligned|rotated|ramp|ellipse|unbalanced
  double a = 2.0;
  double b = 0.5;
  int d = 10;
  double slope = 0.5;
};

ProductDistribution make_preset(const PresetSpec& preset);

/// How k follows n: floor_frac(f) = max(1, floor(f n)), affine = n/100 + 2,
/// fixed(k).
struct KRule {
  enum class Kind { kFloorFraction, kAffine, kFixed };
  Kind kind = Kind::kAffine;
  double fraction = 0.1;
  std::size_t fixed = 1;

  std::size_t operator()(std::size_t n) const;
  std::string describe() const;
  /// Accepts "affine", "floor_frac", "floor_frac:0.1", "fixed:16".
  static KRule parse(const std::string& text);
};

struct ScanConfig {
  PresetSpec preset;
  std::vector<std::size_t> n_grid;
  KRule k_rule;
  std::size_t trials = 20;
  std::size_t n_test = 2000;
  std::uint64_t master_seed = 1;
  bool resample = false;
  ResampleMode resample_mode = ResampleMode::kUndersample;

  /// Throws ConfigError: n_grid must be non-empty and strictly increasing
  /// and the k rule must give 1 <= k <= n everywhere.
  void validate() const;
};

/// Powers of two 2^lo .. 2^hi.
std::vector<std::size_t> power_of_two_grid(int lo, int hi);

struct CurveRow {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t trials = 0;
  double mean_test_error = 0.0;
  double test_error_stderr = 0.0;
  double bayes_risk = 0.0;
  double mean_excess = 0.0;
  double excess_stderr = 0.0;
};

struct ScalingCurve {
  std::vector<CurveRow> rows;
  const CurveRow* at(std::size_t n) const;
};

/// Runs every (n, trial) pair with seed derive_seed(master_seed, {n, t}) and
/// reduces each n by pairwise summation. Deterministic given the config.
ScalingCurve scaling_scan(const ScanConfig& config);

void write_curve_csv(const ScalingCurve& curve, const std::filesystem::path& path);
ScalingCurve read_curve_csv(const std::filesystem::path& path);

struct SlopeFit {
  double slope = 0.0;
  double std_error = 0.0;
  double intercept = 0.0;
  std::size_t used = 0;
  std::size_t excluded = 0;  // rows in range with excess <= 0
};

/// Least squares of log(excess) on log(n) over rows with n_min <= n <= n_max.
/// Throws InvalidArgument (insufficient data) with fewer than 3 usable rows.
SlopeFit slope_fit(const ScalingCurve& curve, std::size_t n_min,
                   std::size_t n_max);

/// Cell-centered lattice on the signal plane.
struct PlaneGrid {
  double s0_min = -2.0, s0_max = 2.0;
  int n0 = 81;
  double s1_min = -0.5, s1_max = 0.5;
  int n1 = 21;

  static PlaneGrid covering(const SignalSpec& signal, int n0, int n1);
  SignalPoint point(int i, int j) const;
  std::size_t size() const { return static_cast<std::size_t>(n0) * n1; }
};

/// Probe in R^d with the given signal coordinates and zero noise.
std::vector<double> probe_point(const ProductDistribution& dist,
                                const SignalPoint& s);

/// DominanceReport for every cell, row-major in (i, j).
std::vector<DominanceReport> tau_map(const DominanceAnalyzer& analyzer,
                                     const PlaneGrid& grid,
                                     double tau_threshold);

/// s0,s1,theta,tau,sd_holds,region; sd_holds is 1, 0 or na.
void write_tau_map_csv(const std::vector<DominanceReport>& map,
                       const std::filesystem::path& path);

struct PredictionCell {
  SignalPoint s{};
  int prediction = 0;
  int bayes = 0;
};

/// One model trained on n points from derive_seed(seed, 0), queried at every
/// cell with zero noise coordinates.
std::vector<PredictionCell> prediction_map(const ProductDistribution& dist,
                                           std::size_t n, std::size_t k,
                                           std::uint64_t seed,
                                           const PlaneGrid& grid);

void write_prediction_map_csv(const std::vector<PredictionCell>& map,
                              const std::filesystem::path& path);

struct OverlayParams {
  double d = 10;
  double tau = 1.0;
  double c_fast = 1.0;
  double gamma = 0.1;
  double beta = 1.0;
  double beta_prime = 1.0;
  double M = 1.0;
  double c_slow = 1.0;
};

struct OverlayRow {
  CurveRow curve;
  double fast_bound = 0.0;
  double slow_bound = 0.0;
};

std::vector<OverlayRow> bound_overlay(const ScalingCurve& curve,
                                      const OverlayParams& params);

void write_overlay_csv(const std::vector<OverlayRow>& rows,
                       const std::filesystem::path& path);

/// Largest c for which the fast-rate bound stays above every row's excess.
/// Returns +infinity when no row constrains it and 0 when a row sits at or
/// above the 2 exp(-k/6) + 1 ceiling.
double fit_fast_rate_constant(const ScalingCurve& curve, double d, double tau);

/// Emits a gnuplot script drawing the curve CSV on log-log axes with error
/// bars.
void write_plot_script(const std::filesystem::path& curve_csv,
                       const std::filesystem::path& script_path,
                       const std::string& title);

}  // namespace knnscale
