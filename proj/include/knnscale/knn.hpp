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
#include <vector>

#include "knnscale/distributions.hpp"

namespace knnscale {

/// Exact brute-force k-nearest-neighbor classifier under Euclidean distance.
///
/// Neighbors are ordered by (squared distance, training index), so distance
/// ties go to the lower index. The vote predicts 1 when the k nearest labels
/// sum to at least k/2; an even split therefore predicts 1.
class KnnModel {
 public:
  explicit KnnModel(Dataset data);

  const Dataset& data() const { return data_; }
  std::size_t n() const { return data_.n; }
  std::size_t d() const { return data_.d; }

  int predict(std::span<const double> x, std::size_t k) const;
  /// Predictions for every row of `queries`.
  std::vector<std::uint8_t> predict_all(const Dataset& queries,
                                        std::size_t k) const;

  /// R_(k)(x), the distance to the k-th nearest training point;
  /// R_(n+1)(x) = +infinity.
  double neighbor_radius(std::span<const double> x, std::size_t k) const;
  /// Indices of the k nearest points, nearest first.
  std::vector<std::size_t> neighbor_indices(std::span<const double> x,
                                            std::size_t k) const;

  /// Prediction and R_(k+1)(x) from a single distance scan.
  struct VoteAndRadius {
    int prediction;
    double next_radius;
  };
  VoteAndRadius predict_with_radius(std::span<const double> x,
                                    std::size_t k) const;

 private:
  struct Candidate {
    double dist2;
    std::uint32_t index;
  };

  void check_query(std::span<const double> x) const;
  void scan(std::span<const double> x, std::vector<Candidate>& out) const;
  // Partitions so that out[0..k) are the k nearest (unordered).
  static void select(std::vector<Candidate>& cand, std::size_t k);

  Dataset data_;
};

enum class ResampleMode { kUndersample, kOversample };

/// Balances the two classes: undersampling draws the abundant class down to
/// the rare count without replacement, oversampling draws the rare class up
/// to the abundant count with replacement. Already balanced input is
/// returned unchanged.
Dataset resample_balance(const Dataset& data, ResampleMode mode,
                         std::uint64_t seed);

/// Fraction of `test` rows the model misclassifies.
double test_error(const KnnModel& model, std::size_t k, const Dataset& test);

/// Mean over test rows of |2 eta - 1| * 1{prediction != f*}.
double conditional_excess(const KnnModel& model, std::size_t k,
                          const ProductDistribution& dist,
                          const Dataset& test);

struct ExcessRiskEstimate {
  double mean_excess = 0.0;
  double excess_stderr = 0.0;
  double mean_test_error = 0.0;
  double test_error_stderr = 0.0;
  std::size_t trials = 0;
};

/// One trial: fresh training set of size n, fresh n_test test points.
struct TrialOutcome {
  double excess = 0.0;
  double test_error = 0.0;
};

struct TrialOptions {
  bool resample = false;
  ResampleMode resample_mode = ResampleMode::kUndersample;
};

TrialOutcome run_trial(const ProductDistribution& dist, std::size_t n,
                       std::size_t k, std::size_t n_test, std::uint64_t seed,
                       const TrialOptions& options = {});

/// Averages `trials` independent trials with seeds derive_seed(seed, t).
ExcessRiskEstimate excess_risk_mc(const ProductDistribution& dist,
                                  std::size_t n, std::size_t k,
                                  std::size_t n_test, std::size_t trials,
                                  std::uint64_t seed,
                                  const TrialOptions& options = {});

}  // namespace knnscale
