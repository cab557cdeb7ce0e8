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
#include <vector>

#include "knnscale/distributions.hpp"
#include "knnscale/error.hpp"
#include "knnscale/experiments.hpp"

namespace knnscale {

class IdxBadMagicError : public DataError {
 public:
  using DataError::DataError;
};

class IdxTruncatedError : public DataError {
 public:
  using DataError::DataError;
};

class IdxDimOverflowError : public DataError {
 public:
  using DataError::DataError;
};

/// Label value outside 0..9 found while pairing images with labels.
class LabelRangeError : public DataError {
 public:
  using DataError::DataError;
};

inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;

/// Unsigned-byte IDX tensor. `values` holds the decoded elements, divided by
/// 255 when `scaled` is set.
struct IdxTensor {
  std::uint32_t magic = kIdxLabelMagic;
  std::vector<std::uint32_t> dims;
  std::vector<double> values;
  bool scaled = false;

  std::size_t element_count() const;
  /// The element as the original byte.
  std::uint8_t byte(std::size_t i) const;
};

/// Throws IdxBadMagicError, IdxTruncatedError or IdxDimOverflowError; a
/// missing file is a plain DataError.
IdxTensor read_idx(const std::filesystem::path& path, bool scale = false);

void write_idx(const IdxTensor& tensor, const std::filesystem::path& path);

inline constexpr std::size_t kAllRows = static_cast<std::size_t>(-1);

/// Keeps rows labelled class_a (-> 0) or class_b (-> 1), flattens each image
/// to rows*cols features in [0, 1] and, if more than n_max remain, keeps a
/// seeded subset of n_max rows in their original order.
Dataset to_binary_dataset(const IdxTensor& images, const IdxTensor& labels,
                          int class_a, int class_b, std::size_t n_max,
                          std::uint64_t seed);

struct RealScanConfig {
  std::vector<std::size_t> n_grid;
  KRule k_rule;
  std::size_t trials = 5;
  std::size_t n_test = 2000;
  std::uint64_t master_seed = 1;
};

/// Learning curve on a real pair: each (n, trial) draws n training rows from
/// `train` and n_test rows from `test` without replacement. Excess and Bayes
/// columns are NaN since the regression function is unknown.
ScalingCurve real_data_scan(const Dataset& train, const Dataset& test,
                            const RealScanConfig& config);

}  // namespace knnscale
