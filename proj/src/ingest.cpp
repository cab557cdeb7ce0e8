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

#include "knnscale/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>

#include "knnscale/knn.hpp"
#include "knnscale/parallel.hpp"

namespace knnscale {

using detail::require;

namespace {

std::uint32_t read_be32(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
         (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

void put_be32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                         static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(bytes, 4);
}

std::size_t expected_rank(std::uint32_t magic) {
  return magic == kIdxLabelMagic ? 1 : 3;
}

// Draws m of [0, n) without replacement and returns them sorted.
std::vector<std::size_t> choose_sorted(std::size_t n, std::size_t m, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < m; ++i) {
    std::swap(idx[i], idx[i + rng.below(n - i)]);
  }
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Dataset take_rows(const Dataset& src, const std::vector<std::size_t>& rows) {
  Dataset out(rows.size(), src.d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(src.points.begin() + rows[i] * src.d, src.d,
                out.points.begin() + i * src.d);
    out.labels[i] = src.labels[rows[i]];
  }
  return out;
}

}  // namespace

std::size_t IdxTensor::element_count() const {
  std::size_t count = 1;
  for (auto dim : dims) count *= dim;
  return count;
}

std::uint8_t IdxTensor::byte(std::size_t i) const {
  const double v = scaled ? values[i] * 255.0 : values[i];
  return static_cast<std::uint8_t>(std::lround(v));
}

IdxTensor read_idx(const std::filesystem::path& path, bool scale) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open IDX file: " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  const std::string where = " in " + path.string();
  if (bytes.size() < 4) throw IdxTruncatedError("IDX header truncated" + where);

  IdxTensor t;
  t.magic = read_be32(bytes.data());
  if (t.magic != kIdxLabelMagic && t.magic != kIdxImageMagic) {
    throw IdxBadMagicError("bad IDX magic 0x" + [&] {
      char buf[9];
      std::snprintf(buf, sizeof buf, "%08x", t.magic);
      return std::string(buf);
    }() + where);
  }
  const std::size_t rank = expected_rank(t.magic);
  const std::size_t header = 4 + 4 * rank;
  if (bytes.size() < header) {
    throw IdxTruncatedError("IDX dimension header truncated" + where);
  }
  std::size_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    const std::uint32_t dim = read_be32(bytes.data() + 4 + 4 * i);
    if (dim != 0 &&
        count > (std::numeric_limits<std::size_t>::max() - header) / dim) {
      throw IdxDimOverflowError("IDX dimensions overflow the element count" +
                                where);
    }
    count *= dim;
    t.dims.push_back(dim);
  }
  if (bytes.size() - header < count) {
    throw IdxTruncatedError("IDX payload truncated: expected " +
                            std::to_string(count) + " bytes, found " +
                            std::to_string(bytes.size() - header) + where);
  }
  if (bytes.size() - header > count) {
    throw IdxTruncatedError("IDX payload has " +
                            std::to_string(bytes.size() - header - count) +
                            " trailing bytes" + where);
  }
  t.scaled = scale;
  t.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double v = bytes[header + i];
    t.values[i] = scale ? v / 255.0 : v;
  }
  return t;
}

void write_idx(const IdxTensor& tensor, const std::filesystem::path& path) {
  require(tensor.magic == kIdxLabelMagic || tensor.magic == kIdxImageMagic,
          "IDX magic must be 0x801 or 0x803");
  require(tensor.dims.size() == expected_rank(tensor.magic),
          "IDX rank does not match the magic");
  require(tensor.values.size() == tensor.element_count(),
          "IDX values do not match the dimensions");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  put_be32(out, tensor.magic);
  for (auto dim : tensor.dims) put_be32(out, dim);
  std::vector<char> payload(tensor.values.size());
  for (std::size_t i = 0; i < payload.size(); ++i) {
    payload[i] = static_cast<char>(tensor.byte(i));
  }
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

Dataset to_binary_dataset(const IdxTensor& images, const IdxTensor& labels,
                          int class_a, int class_b, std::size_t n_max,
                          std::uint64_t seed) {
  require(class_a != class_b, "class_a and class_b must differ");
  require(class_a >= 0 && class_a <= 9 && class_b >= 0 && class_b <= 9,
          "classes must lie in 0..9");
  require(n_max >= 1, "n_max must be positive");
  if (images.magic != kIdxImageMagic || labels.magic != kIdxLabelMagic) {
    throw DataError("expected an image tensor and a label tensor");
  }
  if (images.dims[0] != labels.dims[0]) {
    throw DataError("image count " + std::to_string(images.dims[0]) +
                    " differs from label count " +
                    std::to_string(labels.dims[0]));
  }
  const std::size_t d = std::size_t{images.dims[1]} * images.dims[2];
  std::vector<std::size_t> keep;
  std::array<std::size_t, 2> counts{0, 0};
  for (std::size_t i = 0; i < labels.values.size(); ++i) {
    const int y = labels.byte(i);
    if (y > 9) {
      throw LabelRangeError("label " + std::to_string(y) + " at row " +
                            std::to_string(i) + " outside 0..9");
    }
    if (y == class_a || y == class_b) {
      keep.push_back(i);
      ++counts[y == class_b ? 1 : 0];
    }
  }
  if (counts[0] == 0 || counts[1] == 0) {
    throw DataError("class " + std::to_string(counts[0] == 0 ? class_a : class_b) +
                    " is empty after filtering");
  }
  if (keep.size() > n_max) {
    Rng rng(seed);
    auto chosen = choose_sorted(keep.size(), n_max, rng);
    for (auto& c : chosen) c = keep[c];
    keep = std::move(chosen);
  }
  Dataset out(keep.size(), d);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const std::size_t src = keep[r] * d;
    for (std::size_t j = 0; j < d; ++j) {
      const double v = images.values[src + j];
      out.points[r * d + j] = images.scaled ? v : v / 255.0;
    }
    out.labels[r] = labels.byte(keep[r]) == class_b ? 1 : 0;
  }
  return out;
}

ScalingCurve real_data_scan(const Dataset& train, const Dataset& test,
                            const RealScanConfig& config) {
  ScanConfig check;
  check.n_grid = config.n_grid;
  check.k_rule = config.k_rule;
  check.trials = config.trials;
  check.n_test = config.n_test;
  check.validate();
  require(train.d == test.d, "train and test dimensions differ");
  if (config.n_grid.back() > train.n) {
    throw ConfigError("n = " + std::to_string(config.n_grid.back()) +
                      " exceeds the " + std::to_string(train.n) +
                      " available training rows");
  }
  const std::size_t n_test = std::min(config.n_test, test.n);
  const std::size_t grid = config.n_grid.size();
  const std::size_t trials = config.trials;
  std::vector<double> error(grid * trials);
  parallel_for(grid * trials, [&](std::size_t job) {
    const std::size_t n = config.n_grid[job / trials];
    const std::size_t t = job % trials;
    Rng rng(derive_seed(config.master_seed, {n, t}));
    const KnnModel model(take_rows(train, choose_sorted(train.n, n, rng)));
    const Dataset queries = take_rows(test, choose_sorted(test.n, n_test, rng));
    error[job] = test_error(model, config.k_rule(n), queries);
  });
  ScalingCurve curve;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t g = 0; g < grid; ++g) {
    const auto s = mean_stderr({error.data() + g * trials, trials});
    CurveRow row;
    row.n = config.n_grid[g];
    row.k = config.k_rule(row.n);
    row.trials = trials;
    row.mean_test_error = s.mean;
    row.test_error_stderr = s.std_error;
    row.bayes_risk = nan;
    row.mean_excess = nan;
    row.excess_stderr = nan;
    curve.rows.push_back(row);
  }
  return curve;
}

}  // namespace knnscale
