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

// Acceptance runner: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance 2 5 7      run a subset
//   acceptance --known-failure 4
//
// Exit status is 0 when the criteria that failed are exactly the declared
// known failures (none by default), 1 otherwise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "knnscale/bounds.hpp"
#include "knnscale/cli.hpp"
#include "knnscale/distributions.hpp"
#include "knnscale/dominance.hpp"
#include "knnscale/experiments.hpp"
#include "knnscale/ingest.hpp"
#include "knnscale/knn.hpp"
#include "knnscale/parallel.hpp"
#include "knnscale/rng.hpp"

namespace fs = std::filesystem;
using namespace knnscale;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buffer[1024];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buffer, sizeof buffer, format, args);
  va_end(args);
  return buffer;
}

double combined(double a, double b) { return std::hypot(a, b); }

ScanConfig two_phase_config(const std::string& preset) {
  ScanConfig config;
  config.preset.name = preset;
  config.preset.a = 2.0;
  config.preset.b = 0.5;
  config.preset.d = 10;
  config.n_grid = power_of_two_grid(7, 15);
  config.k_rule = KRule::parse("affine");
  config.trials = 20;
  config.n_test = 2000;
  config.master_seed = 2024;
  return config;
}

// 1. two-phase learning curves
Outcome criterion1() {
  const auto aligned = scaling_scan(two_phase_config("aligned"));
  const auto rotated = scaling_scan(two_phase_config("rotated"));
  const auto fit_a = slope_fit(aligned, 1u << 10, 1u << 15);
  const auto fit_r = slope_fit(rotated, 1u << 13, 1u << 15);
  const double ea = aligned.at(1u << 15)->mean_excess;
  const double er = rotated.at(1u << 15)->mean_excess;
  const bool i = fit_a.slope >= -0.75 && fit_a.slope <= -0.35;
  const bool ii = er >= 5 * ea;
  const bool iii = fit_r.slope > -0.15;
  return {i && ii && iii,
          fmt("aligned slope %.3f (+/- %.3f) in [-0.75,-0.35]: %s; "
              "rotated/aligned excess at 2^15 = %.4f/%.4f = %.1fx >= 5: %s; "
              "rotated slope 2^13..2^15 %.3f (+/- %.3f) > -0.15: %s",
              fit_a.slope, fit_a.std_error, i ? "yes" : "no", er, ea,
              ea > 0 ? er / ea : std::numeric_limits<double>::infinity(),
              ii ? "yes" : "no", fit_r.slope, fit_r.std_error,
              iii ? "yes" : "no")};
}

// 2. closed-form margin on the aligned preset
Outcome criterion2() {
  const auto dist = make_aligned(2.0, 0.5, 10);
  const DominanceAnalyzer analyzer(dist);
  double worst = 0;
  bool all_hold = true;
  for (double x1 : {0.1, 0.5, 1.0, 1.9}) {
    const auto x = probe_point(dist, {x1, 0.0});
    worst = std::max(worst, std::abs(analyzer.tau(x) - 2 * 2.0 * x1));
    all_hold &= analyzer.stochastic_dominance(x).kind == VerdictKind::kHolds;
  }
  return {worst <= 1e-6 && all_hold,
          fmt("max |tau - 2 a x1| = %.2e (<= 1e-6); dominance holds at all 4 "
              "points: %s",
              worst, all_hold ? "yes" : "no")};
}

// Region between the lines x1 = 0 and x2 = x1 / 2, mirrored.
bool in_wedge(const SignalPoint& s) { return s[0] * (s[0] - 2 * s[1]) <= 0; }
bool in_literal_wedge(const SignalPoint& s) {
  return s[0] * (s[0] - s[1] / 2) <= 0;
}

// 3. negative region on the rotated preset
Outcome criterion3() {
  const auto dist = make_rotated(2.0, 0.5, 10);
  const DominanceAnalyzer analyzer(dist);
  const auto grid = PlaneGrid::covering(dist.signal(), 81, 21);
  std::vector<double> tau(grid.size());
  parallel_for(grid.size(), [&](std::size_t c) {
    const int i = static_cast<int>(c) / grid.n1;
    const int j = static_cast<int>(c) % grid.n1;
    tau[c] = analyzer.tau(probe_point(dist, grid.point(i, j)));
  });
  std::vector<double> wedge_abs;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const auto s = grid.point(static_cast<int>(c) / grid.n1,
                              static_cast<int>(c) % grid.n1);
    if (in_wedge(s)) wedge_abs.push_back(std::abs(tau[c]));
  }
  std::nth_element(wedge_abs.begin(), wedge_abs.begin() + wedge_abs.size() / 2,
                   wedge_abs.end());
  const double threshold = 0.5 * wedge_abs[wedge_abs.size() / 2];

  const auto predictions = prediction_map(dist, 5000, 52, 2024, grid);
  std::size_t negative = 0, outside_wedge = 0, outside_literal = 0;
  std::size_t agree_in = 0, n_out = 0, agree_out = 0;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const auto& cell = predictions[c];
    const bool agree = cell.prediction == cell.bayes;
    if (tau[c] <= -threshold) {
      ++negative;
      outside_wedge += !in_wedge(cell.s);
      outside_literal += !in_literal_wedge(cell.s);
      agree_in += agree;
    } else if (std::abs(cell.s[0]) >= 0.5 && !in_wedge(cell.s)) {
      ++n_out;
      agree_out += agree;
    }
  }
  const double mass = double(negative) / grid.size();
  const double rate_in = negative ? double(agree_in) / negative : 1.0;
  const double rate_out = n_out ? double(agree_out) / n_out : 0.0;
  const bool pass = negative > 0 && outside_wedge == 0 && mass >= 0.05 &&
                    rate_in <= 0.6 && rate_out >= 0.9;
  return {pass,
          fmt("threshold %.4f; negative cells %zu (mass %.3f >= 0.05), %zu "
              "outside wedge x1(x1-2x2)<=0 [%zu outside x1(x1-x2/2)<=0]; "
              "agreement inside %.3f (<= 0.6), outside %.3f over %zu cells "
              "(>= 0.9)",
              threshold, negative, mass, outside_wedge, outside_literal,
              rate_in, rate_out, n_out)};
}

// 4. misclassification <= Chernoff bound <= half-tie bound, random points
Outcome criterion4() {
  const auto dist = make_aligned(2.0, 0.5, 5);
  const SignalQuadrature quadrature(dist.signal());
  const auto points = sample(dist, 20, 77);
  std::size_t violations = 0;
  double worst_prop = -1, worst_remark = -1;
  std::string offenders;
  for (std::size_t p = 0; p < points.n; ++p) {
    const auto battery =
        point_battery(dist, points.row(p), 200, 20, 10000,
                      derive_seed(4, p), &quadrature);
    const auto& miss = battery.misclassification();
    const auto& prop = battery.prop1_bound();
    const auto& remark = battery.remark1_bound();
    const double z1 = (miss.mean - prop.mean) /
                      std::max(combined(miss.std_error, prop.std_error), 1e-300);
    const double z2 = (prop.mean - remark.mean) /
                      std::max(combined(prop.std_error, remark.std_error), 1e-300);
    const bool bad1 = miss.mean - prop.mean > 3 * combined(miss.std_error, prop.std_error);
    const bool bad2 = prop.mean - remark.mean > 3 * combined(prop.std_error, remark.std_error);
    violations += bad1 + bad2;
    if (bad1 || bad2) {
      offenders += fmt(" [x=(%.3f,%.3f) miss %.4f prop1 %.4f+/-%.4f remark1 %.4f+/-%.4f]",
                       points.row(p)[0], points.row(p)[1], miss.mean, prop.mean,
                       prop.std_error, remark.mean, remark.std_error);
    }
    if (miss.mean > prop.mean) worst_prop = std::max(worst_prop, z1);
    if (prop.mean > remark.mean) worst_remark = std::max(worst_remark, z2);
  }
  return {violations == 0,
          fmt("%zu violations over 20 points x 2 inequalities; largest excess "
              "in stderr units: miss>prop1 %.2f, prop1>remark1 %.2f (<= 3)%s",
              violations, std::max(worst_prop, 0.0),
              std::max(worst_remark, 0.0), offenders.c_str())};
}

// 5. Chernoff vote bound
Outcome criterion5() {
  double identity_gap = 0;
  for (double rho : {0.25, 2.0, 9.0}) {
    for (int k : {1, 10, 50}) {
      const double q = rho / (1 + rho);
      identity_gap = std::max(
          identity_gap, std::abs(chernoff_vote_bound(rho, k) -
                                 std::exp(-k * binary_relative_entropy(0.5, q))));
    }
  }
  std::mt19937_64 gen(5);
  double worst_z = -std::numeric_limits<double>::infinity();
  for (double rho : {2.0, 4.0, 9.0}) {
    for (int k : {5, 10, 50}) {
      std::binomial_distribution<int> votes(k, rho / (1 + rho));
      const int draws = 1000000;
      int wrong = 0;
      for (int i = 0; i < draws; ++i) wrong += 2 * votes(gen) < k;
      const double p = double(wrong) / draws;
      const double bound = chernoff_vote_bound(rho, k);
      const double se = std::sqrt(bound * (1 - bound) / draws);
      worst_z = std::max(worst_z, se > 0 ? (p - bound) / se : p - bound);
    }
  }
  return {identity_gap <= 1e-12 && worst_z <= 3,
          fmt("identity max gap %.2e (<= 1e-12); worst (MC - bound) / stderr "
              "%.2f (<= 3)",
              identity_gap, worst_z)};
}

// 6. Gaussian approximation of the noise distance
Outcome criterion6() {
  bool moments_exact = true;
  std::vector<double> scaled;
  double gap512 = 0;
  std::string gaps;
  for (int d_n : {8, 32, 128, 512}) {
    const auto noise = NoiseSpec::standard_normal(d_n);
    const std::vector<double> x(static_cast<std::size_t>(d_n), 0.0);
    const auto [mu, sigma] = noise_distance_moments(noise, x);
    moments_exact &= std::abs(mu - d_n) <= 1e-12 * d_n &&
                     std::abs(sigma * sigma - 2.0 * d_n) <= 1e-12 * d_n;
    const auto report = berry_esseen_gap(noise, x, 1000000, 6 + d_n);
    scaled.push_back(report.cdf_gap * std::sqrt(double(d_n)));
    if (d_n == 512) gap512 = report.cdf_gap;
    gaps += fmt("%s%d:%.4f", gaps.empty() ? "" : " ", d_n, report.cdf_gap);
  }
  const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
  const double ratio = *hi / *lo;
  return {moments_exact && ratio <= 3 && gap512 < 0.02,
          fmt("moments exact: %s; gaps {%s}; max/min of gap*sqrt(d_n) %.2f "
              "(<= 3); gap at 512 %.4f (< 0.02)",
              moments_exact ? "yes" : "no", gaps.c_str(), ratio, gap512)};
}

// 7. log-derivative smoothness of the noncentral chi-square density
Outcome criterion7() {
  double central_gap = 0;
  for (int d_n : {8, 16, 32}) {
    const double m = d_n / 2.0 - 1;
    for (double t : {0.5, 2.0, double(d_n), 3.0 * d_n, 10.0 * d_n}) {
      central_gap = std::max(
          central_gap,
          std::abs(noncentral_chi2_logderiv(d_n, 0.0, t) - (m / t - 0.5)));
    }
  }
  double worst = 0, worst_norm = 0;
  for (int d_n : {8, 16, 32}) {
    for (double lambda : {0.0, 2.0, 8.0}) {
      const auto s = series_smoothness(d_n, lambda, 0.1);
      worst = std::max(worst, s.max_abs_logderiv);
      worst_norm = std::max(worst_norm, std::abs(s.normalization - 1));
    }
  }
  return {central_gap <= 1e-10 && worst <= 2.0 && worst_norm <= 1e-8,
          fmt("central-case gap %.2e (<= 1e-10); max |g'/g| in window %.4f "
              "(<= 2); max |integral - 1| %.2e (<= 1e-8)",
              central_gap, worst, worst_norm)};
}

// 8. variance floor for the quadratic form, uniform noise
Outcome criterion8() {
  double worst_exact = 0, worst_mc = 0;
  for (double M : {0.5, 1.0, 2.0}) {
    const auto noise = NoiseSpec::uniform_scaled(1, M);
    const double p_inf = 1.0 / (2 * M);
    const double target = 1.0 / (180 * std::pow(p_inf, 4));
    worst_exact = std::max(
        worst_exact, std::abs(quadratic_variance_floor(noise) - target));
    Rng rng(derive_seed(8, {static_cast<std::uint64_t>(M * 4)}));
    std::vector<double> draws(1000000);
    for (auto& v : draws) v = noise.sample(rng);
    const auto mc = min_quadratic_variance(draws);
    worst_mc = std::max(worst_mc, std::abs(mc.minimum / target - 1));
  }
  return {worst_exact <= 1e-6 && worst_mc <= 0.02,
          fmt("moment identity max error %.2e (<= 1e-6); Monte Carlo grid "
              "minimum max relative error %.4f (<= 0.02)",
              worst_exact, worst_mc)};
}

// 9. resampling on the unbalanced preset
Outcome criterion9() {
  const auto dist = make_unbalanced(10);
  const std::size_t n = 1u << 14;
  const std::size_t k = KRule::parse("affine")(n);
  const auto vanilla = excess_risk_mc(dist, n, k, 2000, 20, 9);
  TrialOptions balanced;
  balanced.resample = true;
  balanced.resample_mode = ResampleMode::kUndersample;
  const auto under = excess_risk_mc(dist, n, k, 2000, 20, 9, balanced);
  return {vanilla.mean_excess >= 2 * under.mean_excess,
          fmt("excess at 2^14: vanilla %.4f (+/- %.4f), undersampled %.4f "
              "(+/- %.4f), ratio %.2f (>= 2)",
              vanilla.mean_excess, vanilla.excess_stderr, under.mean_excess,
              under.excess_stderr,
              under.mean_excess > 0 ? vanilla.mean_excess / under.mean_excess
                                    : std::numeric_limits<double>::infinity())};
}

// 10. presets without a realizable labelling
Outcome criterion10() {
  auto config = two_phase_config("ramp");
  config.n_grid = power_of_two_grid(9, 14);
  const auto ramp = scaling_scan(config);
  std::size_t rises = 0;
  std::string ramp_values;
  for (std::size_t i = 0; i < ramp.rows.size(); ++i) {
    ramp_values += fmt("%s%.4f", i ? " " : "", ramp.rows[i].mean_excess);
    if (i == 0) continue;
    const auto& prev = ramp.rows[i - 1];
    const auto& cur = ramp.rows[i];
    rises += cur.mean_excess >
             prev.mean_excess + 2 * combined(prev.excess_stderr, cur.excess_stderr);
  }

  const auto dist = make_ellipse(2.0, 0.5, 10);
  const DominanceAnalyzer analyzer(dist);
  const auto grid = PlaneGrid::covering(dist.signal(), 81, 21);
  std::vector<double> tau(grid.size());
  parallel_for(grid.size(), [&](std::size_t c) {
    tau[c] = analyzer.tau(probe_point(
        dist, grid.point(static_cast<int>(c) / grid.n1, static_cast<int>(c) % grid.n1)));
  });
  const auto positive = std::count_if(tau.begin(), tau.end(), [](double t) { return t > 0; });
  const auto negative = std::count_if(tau.begin(), tau.end(), [](double t) { return t < 0; });

  config = two_phase_config("ellipse");
  config.n_grid = power_of_two_grid(9, 15);
  const auto ellipse = scaling_scan(config);
  const std::size_t n_max = config.n_grid.back();
  const auto fit = slope_fit(ellipse, (n_max + 9) / 10, n_max);
  const bool pass = rises == 0 && positive > 0 && negative > 0 && fit.slope > -0.2;
  return {pass,
          fmt("ramp excess 2^9..2^14 {%s}, %zu rises beyond 2 stderr; ellipse "
              "tau cells +%td/-%td; ellipse slope over last decade %.3f "
              "(+/- %.3f, %zu rows) > -0.2",
              ramp_values.c_str(), rises, positive, negative, fit.slope,
              fit.std_error, fit.used)};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "knnlab");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

// 11. core invariants, timed together
Outcome criterion11() {
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::string> broken;

  // brute-force oracle
  std::size_t mismatches = 0;
  for (std::size_t n : {1, 7, 50, 200}) {
    const auto dist = make_rotated(2.0, 0.5, 6);
    const auto train = sample(dist, n, derive_seed(11, {n}));
    const auto queries = sample(dist, 500, derive_seed(12, {n}));
    const KnnModel model(train);
    for (std::size_t k : {std::size_t{1}, std::size_t{4}, n / 2 + 1, n}) {
      if (k < 1 || k > n) continue;
      for (std::size_t q = 0; q < queries.n; ++q) {
        const auto x = queries.row(q);
        std::vector<std::pair<double, std::size_t>> order(n);
        for (std::size_t i = 0; i < n; ++i) {
          double s = 0;
          for (std::size_t j = 0; j < train.d; ++j) {
            const double diff = train.row(i)[j] - x[j];
            s += diff * diff;
          }
          order[i] = {s, i};
        }
        std::sort(order.begin(), order.end());
        std::size_t votes = 0;
        for (std::size_t i = 0; i < k; ++i) votes += train.labels[order[i].second];
        const int expected = 2 * votes >= k ? 1 : 0;
        mismatches += model.predict(x, k) != expected;
      }
    }
  }
  if (mismatches) broken.push_back(fmt("oracle mismatches %zu", mismatches));

  // determinism and manifest replay
  const auto root = fs::temp_directory_path() / "knnscale_acceptance";
  fs::remove_all(root);
  const auto first = (root / "first").string();
  const auto second = (root / "second").string();
  const auto third = (root / "third").string();
  const std::vector<std::string> scan = {"scan", "--n-grid", "64,128,256", "--trials",
                                         "3", "--n-test", "200", "--fit-min", "64",
                                         "--fit-max", "256", "--seed", "11"};
  auto with_dir = [&](const std::string& dir) {
    auto args = scan;
    args.insert(args.end(), {"--output-dir", dir});
    return args;
  };
  int rc = run_cli(with_dir(first));
  rc |= run_cli(with_dir(second));
  rc |= run_cli({"replay", (fs::path(first) / cli::kManifestName).string(),
                 "--output-dir", third});
  const auto reference = slurp(fs::path(first) / "curve.csv");
  if (rc != 0 || reference.empty() ||
      reference != slurp(fs::path(second) / "curve.csv") ||
      reference != slurp(fs::path(third) / "curve.csv")) {
    broken.push_back("replay");
  }

  // IDX round trip
  IdxTensor images;
  images.magic = kIdxImageMagic;
  images.dims = {3, 4, 5};
  for (std::size_t i = 0; i < 60; ++i) images.values.push_back(double((i * 37) % 256));
  write_idx(images, root / "images.idx");
  const auto back = read_idx(root / "images.idx");
  if (back.magic != images.magic || back.dims != images.dims ||
      back.values != images.values) {
    broken.push_back("idx round trip");
  }

  // T_n reduces to the prior ratio
  for (const auto& dist : {make_aligned(2.0, 0.5, 5), make_unbalanced(5)}) {
    const KnnModel model(sample(dist, 64, 13));
    const auto x = probe_point(dist, {0.3, 0.1});
    const double t = t_k_empirical(model, dist, x, 64);
    const double target = dist.prior(1) / dist.prior(0);
    if (std::abs(t - target) > 1e-12 * target) broken.push_back(fmt("T_n %.6f vs %.6f", t, target));
  }
  fs::remove_all(root);

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::string problems;
  for (const auto& b : broken) problems += (problems.empty() ? "" : ", ") + b;
  return {broken.empty() && seconds < 60,
          fmt("oracle, replay, IDX and T_n checks %s; %.1f s (< 60)",
              broken.empty() ? "all hold" : problems.c_str(), seconds)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "two-phase scaling", criterion1},
      {2, "closed-form margin", criterion2},
      {3, "negative region", criterion3},
      {4, "Chernoff and half-tie bound domination", criterion4},
      {5, "Chernoff identity and inequality", criterion5},
      {6, "Gaussian approximation", criterion6},
      {7, "series log-derivative smoothness", criterion7},
      {8, "quadratic variance floor", criterion8},
      {9, "resampling", criterion9},
      {10, "non-realizable presets", criterion10},
      {11, "core invariants", criterion11},
  };
  std::vector<int> wanted, known;
  auto parse_id = [&](const char* text) {
    char* end = nullptr;
    const long id = std::strtol(text, &end, 10);
    if (*end != '\0' || id < 1 || id > 11) {
      std::fprintf(stderr, "usage: %s [--known-failure N]... [criterion 1..11]...\n",
                   argv[0]);
      std::exit(2);
    }
    return static_cast<int>(id);
  };
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--known-failure" && i + 1 < argc) {
      known.push_back(parse_id(argv[++i]));
    } else {
      wanted.push_back(parse_id(argv[i]));
    }
  }

  int surprises = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool expected_fail = std::find(known.begin(), known.end(), c.id) != known.end();
    surprises += outcome.pass == expected_fail;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", outcome.pass ? "PASS" : "FAIL",
                c.id, c.name, outcome.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  return surprises == 0 ? 0 : 1;
}
