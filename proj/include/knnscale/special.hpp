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

#include <vector>

namespace knnscale {

double normal_cdf(double x);
double normal_pdf(double x);

/// Central chi-square CDF through the regularized lower incomplete gamma.
double chi_square_cdf(double x, double dof);

/// Noncentral chi-square CDF
///   F(x; k, lambda) = sum_j Pois(j; lambda/2) P(k/2 + j, x/2),
/// summed outward from the modal Poisson index and truncated once the
/// remaining Poisson mass on both sides is below 1e-12.
double noncentral_chi_square_cdf(double x, double dof, double lambda);

/// Matching density, sum_j Pois(j; lambda/2) * chi2_pdf(x; k + 2j).
double noncentral_chi_square_pdf(double x, double dof, double lambda);

/// Cubic Hermite table of the noncentral chi-square CDF for one (k, lambda)
/// pair, using the exact density as the node derivative. Lookups are a few
/// nanoseconds, which is what makes ball-probability quadrature over a
/// million signal cells affordable.
class NoncentralChiSquareTable {
 public:
  NoncentralChiSquareTable(double dof, double lambda, int nodes = 4096);

  double cdf(double x) const;
  double upper() const { return upper_; }
  double dof() const { return dof_; }
  double lambda() const { return lambda_; }

 private:
  double dof_;
  double lambda_;
  double upper_;
  double step_;
  std::vector<double> value_;
  std::vector<double> slope_;
};

}  // namespace knnscale
