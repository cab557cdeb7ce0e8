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

#include "knnscale/knn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "knnscale/error.hpp"
#include "knnscale/parallel.hpp"

namespace knnscale {

using detail::require;

KnnModel::KnnModel(Dataset data) : data_(std::move(data)) {
  data_.validate();
  require(data_.n < std::numeric_limits<std::uint32_t>::max(),
          "training set too large");
}

void KnnModel::check_query(std::span<const double> x) const {
  require(x.size() == data_.d, "query dimension " + std::to_string(x.size()) +
                                   " does not match model dimension " +
                                   std::to_string(data_.d));
}

void KnnModel::scan(std::span<const double> x,
                    std::vector<Candidate>& out) const {
  out.resize(data_.n);
  const double* p = data_.points.data();
  const std::size_t d = data_.d;
  for (std::size_t i = 0; i < data_.n; ++i, p += d) {
    double sum = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = p[j] - x[j];
      sum += diff * diff;
    }
    out[i] = {sum, static_cast<std::uint32_t>(i)};
  }
}

namespace {

inline bool closer(double da, std::uint32_t ia, double db, std::uint32_t ib) {
  return da < db || (da == db && ia < ib);
}

}  // namespace

void KnnModel::select(std::vector<Candidate>& cand, std::size_t k) {
  if (k == 0 || k > cand.size()) return;
  std::nth_element(cand.begin(), cand.begin() + static_cast<long>(k - 1),
                   cand.end(), [](const Candidate& l, const Candidate& r) {
                     return closer(l.dist2, l.index, r.dist2, r.index);
                   });
}

int KnnModel::predict(std::span<const double> x, std::size_t k) const {
  return predict_with_radius(x, k).prediction;
}

KnnModel::VoteAndRadius KnnModel::predict_with_radius(
    std::span<const double> x, std::size_t k) const {
  check_query(x);
  require(k >= 1 && k <= data_.n, "k must lie in [1, n]");
  thread_local std::vector<Candidate> cand;
  scan(x, cand);
  select(cand, k);
  std::size_t votes = 0;
  for (std::size_t i = 0; i < k; ++i) votes += data_.labels[cand[i].index];
  VoteAndRadius out{2 * votes >= k ? 1 : 0,
                    std::numeric_limits<double>::infinity()};
  if (k < data_.n) {
    // The (k+1)-th nearest is the minimum of the tail after partitioning.
    auto next = std::min_element(
        cand.begin() + static_cast<long>(k), cand.end(),
        [](const Candidate& l, const Candidate& r) {
          return closer(l.dist2, l.index, r.dist2, r.index);
        });
    out.next_radius = std::sqrt(next->dist2);
  }
  return out;
}

std::vector<std::uint8_t> KnnModel::predict_all(const Dataset& queries,
                                                std::size_t k) const {
  std::vector<std::uint8_t> out(queries.n);
  for (std::size_t i = 0; i < queries.n; ++i) {
    out[i] = static_cast<std::uint8_t>(predict(queries.row(i), k));
  }
  return out;
}

double KnnModel::neighbor_radius(std::span<const double> x,
                                 std::size_t k) const {
  check_query(x);
  require(k >= 1 && k <= data_.n + 1, "k must lie in [1, n + 1]");
  if (k == data_.n + 1) return std::numeric_limits<double>::infinity();
  thread_local std::vector<Candidate> cand;
  scan(x, cand);
  select(cand, k);
  return std::sqrt(cand[k - 1].dist2);
}

std::vector<std::size_t> KnnModel::neighbor_indices(std::span<const double> x,
                                                    std::size_t k) const {
  check_query(x);
  require(k >= 1 && k <= data_.n, "k must lie in [1, n]");
  std::vector<Candidate> cand;
  scan(x, cand);
  auto less = [](const Candidate& l, const Candidate& r) {
    return closer(l.dist2, l.index, r.dist2, r.index);
  };
  std::partial_sort(cand.begin(), cand.begin() + static_cast<long>(k),
                    cand.end(), less);
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = cand[i].index;
  return out;
}

Dataset resample_balance(const Dataset& data, ResampleMode mode,
                         std::uint64_t seed) {
  data.validate();
  const auto counts = data.class_counts();
  if (counts[0] == 0 || counts[1] == 0) {
    throw UnbalancedDegenerateError("resampling needs both classes present");
  }
  if (counts[0] == counts[1]) return data;

  std::array<std::vector<std::size_t>, 2> members;
  for (std::size_t i = 0; i < data.n; ++i) members[data.labels[i]].push_back(i);
  const int rare = counts[0] < counts[1] ? 0 : 1;
  const int abundant = 1 - rare;

  Rng rng(seed);
  std::vector<std::size_t> keep;
  if (mode == ResampleMode::kUndersample) {
    // Partial Fisher-Yates: the first `target` slots become a uniform
    // subset drawn without replacement.
    auto pool = members[abundant];
    const std::size_t target = counts[rare];
    for (std::size_t i = 0; i < target; ++i) {
      const std::size_t j = i + rng.below(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(target);
    keep = members[rare];
    keep.insert(keep.end(), pool.begin(), pool.end());
    std::sort(keep.begin(), keep.end());
  } else {
    keep.resize(data.n);
    for (std::size_t i = 0; i < data.n; ++i) keep[i] = i;
    const std::size_t extra = counts[abundant] - counts[rare];
    for (std::size_t i = 0; i < extra; ++i) {
      keep.push_back(members[rare][rng.below(members[rare].size())]);
    }
  }
  // Original order for the kept rows, drawn duplicates appended.
  Dataset out(keep.size(), data.d);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const auto src = data.row(keep[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
    out.labels[r] = data.labels[keep[r]];
  }
  return out;
}

double test_error(const KnnModel& model, std::size_t k, const Dataset& test) {
  require(test.n >= 1, "test set is empty");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < test.n; ++i) {
    wrong += model.predict(test.row(i), k) != test.labels[i];
  }
  return static_cast<double>(wrong) / static_cast<double>(test.n);
}

double conditional_excess(const KnnModel& model, std::size_t k,
                          const ProductDistribution& dist,
                          const Dataset& test) {
  require(test.n >= 1, "test set is empty");
  double sum = 0.0;
  for (std::size_t i = 0; i < test.n; ++i) {
    const auto x = test.row(i);
    const double eta = dist.eta_at(x);
    const int bayes = eta >= 0.5 ? 1 : 0;
    if (model.predict(x, k) != bayes) sum += std::abs(2.0 * eta - 1.0);
  }
  return sum / static_cast<double>(test.n);
}

TrialOutcome run_trial(const ProductDistribution& dist, std::size_t n,
                       std::size_t k, std::size_t n_test, std::uint64_t seed,
                       const TrialOptions& options) {
  Dataset train = sample(dist, n, derive_seed(seed, 0));
  if (options.resample) {
    train = resample_balance(train, options.resample_mode, derive_seed(seed, 2));
  }
  const Dataset test = sample(dist, n_test, derive_seed(seed, 1));
  const std::size_t k_eff = std::min(k, train.n);
  const KnnModel model(std::move(train));

  double excess = 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < test.n; ++i) {
    const auto x = test.row(i);
    const int prediction = model.predict(x, k_eff);
    const double eta = dist.eta_at(x);
    const int bayes = eta >= 0.5 ? 1 : 0;
    if (prediction != bayes) excess += std::abs(2.0 * eta - 1.0);
    wrong += prediction != test.labels[i];
  }
  const auto m = static_cast<double>(test.n);
  return {excess / m, static_cast<double>(wrong) / m};
}

ExcessRiskEstimate excess_risk_mc(const ProductDistribution& dist,
                                  std::size_t n, std::size_t k,
                                  std::size_t n_test, std::size_t trials,
                                  std::uint64_t seed,
                                  const TrialOptions& options) {
  require(trials >= 1, "need at least one trial");
  require(n >= 1 && n_test >= 1, "sample sizes must be positive");
  require(k >= 1 && k <= n, "k must lie in [1, n]");
  std::vector<double> excess(trials), error(trials);
  parallel_for(trials, [&](std::size_t t) {
    const auto outcome =
        run_trial(dist, n, k, n_test, derive_seed(seed, t), options);
    excess[t] = outcome.excess;
    error[t] = outcome.test_error;
  });
  const auto e = mean_stderr(excess);
  const auto err = mean_stderr(error);
  return {e.mean, e.std_error, err.mean, err.std_error, trials};
}

}  // namespace knnscale
