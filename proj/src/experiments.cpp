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

#include "knnscale/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "knnscale/bounds.hpp"
#include "knnscale/csv.hpp"
#include "knnscale/error.hpp"
#include "knnscale/parallel.hpp"

namespace knnscale {

using detail::require;

ProductDistribution make_preset(const PresetSpec& p) {
  if (p.name == "aligned") return make_aligned(p.a, p.b, p.d);
  if (p.name == "rotated") return make_rotated(p.a, p.b, p.d, p.slope);
  if (p.name == "ramp") return make_ramp(p.a, p.b, p.d);
  if (p.name == "ellipse") return make_ellipse(p.a, p.b, p.d);
  if (p.name == "unbalanced") return make_unbalanced(p.d);
  throw InvalidArgument("unknown preset '" + p.name + "'");
}

std::size_t KRule::operator()(std::size_t n) const {
  switch (kind) {
    case Kind::kFloorFraction:
      return std::max<std::size_t>(
          1, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n))));
    case Kind::kAffine:
      return n / 100 + 2;
    case Kind::kFixed:
      return fixed;
  }
  return 1;
}

std::string KRule::describe() const {
  switch (kind) {
    case Kind::kFloorFraction: return "floor_frac:" + format_double(fraction);
    case Kind::kAffine: return "affine";
    case Kind::kFixed: return "fixed:" + std::to_string(fixed);
  }
  return "unknown";
}

KRule KRule::parse(const std::string& text) {
  KRule rule;
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  try {
    if (head == "affine" && arg.empty()) {
      rule.kind = Kind::kAffine;
    } else if (head == "floor_frac") {
      rule.kind = Kind::kFloorFraction;
      rule.fraction = arg.empty() ? 0.1 : parse_double(arg);
      if (!(rule.fraction > 0 && rule.fraction <= 1)) throw ConfigError("");
    } else if (head == "fixed" && !arg.empty()) {
      rule.kind = Kind::kFixed;
      const double k = parse_double(arg);
      if (!(k >= 1) || k != std::floor(k)) throw ConfigError("");
      rule.fixed = static_cast<std::size_t>(k);
    } else {
      throw ConfigError("");
    }
  } catch (const std::exception&) {
    throw ConfigError("invalid k rule '" + text +
                      "' (expected affine, floor_frac[:f] or fixed:k)");
  }
  return rule;
}

void ScanConfig::validate() const {
  if (n_grid.empty()) throw ConfigError("n grid is empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] == 0) throw ConfigError("n grid entries must be positive");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) {
      throw ConfigError("n grid must be strictly increasing");
    }
    const std::size_t k = k_rule(n_grid[i]);
    if (k < 1 || k > n_grid[i]) {
      throw ConfigError("k rule " + k_rule.describe() + " gives k = " +
                        std::to_string(k) + " for n = " +
                        std::to_string(n_grid[i]));
    }
  }
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (n_test < 1) throw ConfigError("n_test must be at least 1");
}

std::vector<std::size_t> power_of_two_grid(int lo, int hi) {
  require(lo >= 0 && hi >= lo && hi < 40, "invalid power-of-two range");
  std::vector<std::size_t> grid;
  for (int p = lo; p <= hi; ++p) grid.push_back(std::size_t{1} << p);
  return grid;
}

const CurveRow* ScalingCurve::at(std::size_t n) const {
  for (const auto& row : rows) {
    if (row.n == n) return &row;
  }
  return nullptr;
}

ScalingCurve scaling_scan(const ScanConfig& config) {
  config.validate();
  const ProductDistribution dist = make_preset(config.preset);
  const double bayes_risk = dist.bayes_risk();
  const std::size_t grid = config.n_grid.size();
  const std::size_t trials = config.trials;
  TrialOptions options{config.resample, config.resample_mode};

  std::vector<double> excess(grid * trials), error(grid * trials);
  parallel_for(grid * trials, [&](std::size_t job) {
    const std::size_t g = job / trials;
    const std::size_t t = job % trials;
    const std::size_t n = config.n_grid[g];
    const auto outcome =
        run_trial(dist, n, config.k_rule(n), config.n_test,
                  derive_seed(config.master_seed, {n, t}), options);
    excess[job] = outcome.excess;
    error[job] = outcome.test_error;
  });

  ScalingCurve curve;
  for (std::size_t g = 0; g < grid; ++g) {
    const std::span<const double> e(excess.data() + g * trials, trials);
    const std::span<const double> err(error.data() + g * trials, trials);
    const auto es = mean_stderr(e);
    const auto errs = mean_stderr(err);
    CurveRow row;
    row.n = config.n_grid[g];
    row.k = config.k_rule(row.n);
    row.trials = trials;
    row.mean_test_error = errs.mean;
    row.test_error_stderr = errs.std_error;
    row.bayes_risk = bayes_risk;
    row.mean_excess = es.mean;
    row.excess_stderr = es.std_error;
    curve.rows.push_back(row);
  }
  return curve;
}

void write_curve_csv(const ScalingCurve& curve,
                     const std::filesystem::path& path) {
  CsvWriter out(path);
  out.comment("test points: fresh per trial; excess: mean |2 eta - 1| 1{f != f*}");
  out.header({"n", "k", "trials", "mean_test_error", "stderr", "bayes_risk",
              "mean_excess", "excess_stderr"});
  for (const auto& r : curve.rows) {
    out.field(r.n).field(r.k).field(r.trials).field(r.mean_test_error);
    out.field(r.test_error_stderr).field(r.bayes_risk).field(r.mean_excess);
    out.field(r.excess_stderr);
    out.end_row();
  }
}

ScalingCurve read_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open curve: " + path.string());
  std::string line;
  ScalingCurve curve;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 8) throw DataError("curve row has wrong field count: " + line);
    CurveRow r;
    r.n = static_cast<std::size_t>(parse_double(f[0]));
    r.k = static_cast<std::size_t>(parse_double(f[1]));
    r.trials = static_cast<std::size_t>(parse_double(f[2]));
    r.mean_test_error = parse_double(f[3]);
    r.test_error_stderr = parse_double(f[4]);
    r.bayes_risk = parse_double(f[5]);
    r.mean_excess = parse_double(f[6]);
    r.excess_stderr = parse_double(f[7]);
    curve.rows.push_back(r);
  }
  return curve;
}

SlopeFit slope_fit(const ScalingCurve& curve, std::size_t n_min,
                   std::size_t n_max) {
  std::vector<double> xs, ys;
  SlopeFit fit;
  for (const auto& row : curve.rows) {
    if (row.n < n_min || row.n > n_max) continue;
    if (!(row.mean_excess > 0)) {
      ++fit.excluded;
      continue;
    }
    xs.push_back(std::log(static_cast<double>(row.n)));
    ys.push_back(std::log(row.mean_excess));
  }
  if (xs.size() < 3) {
    throw InvalidArgument("insufficient data: slope fit needs at least 3 rows "
                          "with positive excess in range");
  }
  const auto m = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - fit.intercept - fit.slope * xs[i];
    rss += r * r;
  }
  fit.std_error = std::sqrt(rss / (m - 2.0) / sxx);
  fit.used = xs.size();
  return fit;
}

PlaneGrid PlaneGrid::covering(const SignalSpec& signal, int n0, int n1) {
  require(n0 >= 1 && n1 >= 1, "grid needs at least one cell per axis");
  return {-signal.a(), signal.a(), n0, -signal.b(), signal.b(), n1};
}

SignalPoint PlaneGrid::point(int i, int j) const {
  return {s0_min + (i + 0.5) * (s0_max - s0_min) / n0,
          s1_min + (j + 0.5) * (s1_max - s1_min) / n1};
}

std::vector<double> probe_point(const ProductDistribution& dist,
                                const SignalPoint& s) {
  std::vector<double> x(static_cast<std::size_t>(dist.d()), 0.0);
  x[0] = s[0];
  x[1] = s[1];
  return x;
}

std::vector<DominanceReport> tau_map(const DominanceAnalyzer& analyzer,
                                     const PlaneGrid& grid,
                                     double tau_threshold) {
  const auto& signal = analyzer.distribution().signal();
  require(grid.s0_min >= -signal.a() && grid.s0_max <= signal.a() &&
              grid.s1_min >= -signal.b() && grid.s1_max <= signal.b(),
          "tau map grid must lie inside the signal box");
  std::vector<DominanceReport> out(grid.size());
  parallel_for(grid.size(), [&](std::size_t cell) {
    const int i = static_cast<int>(cell / grid.n1);
    const int j = static_cast<int>(cell % grid.n1);
    const auto x = probe_point(analyzer.distribution(), grid.point(i, j));
    out[cell] = analyzer.classify(x, tau_threshold);
  });
  return out;
}

void write_tau_map_csv(const std::vector<DominanceReport>& map,
                       const std::filesystem::path& path) {
  CsvWriter out(path);
  out.header({"s0", "s1", "theta", "tau", "sd_holds", "region"});
  for (const auto& r : map) {
    out.field(r.x[0]).field(r.x[1]).field(r.theta).field(r.tau);
    switch (r.sd_verdict.kind) {
      case VerdictKind::kHolds: out.field("1"); break;
      case VerdictKind::kViolated: out.field("0"); break;
      case VerdictKind::kUntested: out.field("na"); break;
    }
    out.field(to_string(r.region));
    out.end_row();
  }
}

std::vector<PredictionCell> prediction_map(const ProductDistribution& dist,
                                           std::size_t n, std::size_t k,
                                           std::uint64_t seed,
                                           const PlaneGrid& grid) {
  require(k >= 1 && k <= n, "k must lie in [1, n]");
  const KnnModel model(sample(dist, n, derive_seed(seed, 0)));
  std::vector<PredictionCell> out(grid.size());
  parallel_for(grid.size(), [&](std::size_t cell) {
    const int i = static_cast<int>(cell / grid.n1);
    const int j = static_cast<int>(cell % grid.n1);
    const SignalPoint s = grid.point(i, j);
    const auto x = probe_point(dist, s);
    out[cell] = {s, model.predict(x, k), dist.bayes_at(x)};
  });
  return out;
}

void write_prediction_map_csv(const std::vector<PredictionCell>& map,
                              const std::filesystem::path& path) {
  CsvWriter out(path);
  out.header({"s0", "s1", "prediction", "bayes", "agree"});
  for (const auto& c : map) {
    out.field(c.s[0]).field(c.s[1]).field(c.prediction).field(c.bayes);
    out.field(c.prediction == c.bayes ? 1 : 0);
    out.end_row();
  }
}

std::vector<OverlayRow> bound_overlay(const ScalingCurve& curve,
                                      const OverlayParams& params) {
  std::vector<OverlayRow> rows;
  for (const auto& row : curve.rows) {
    OverlayRow o;
    o.curve = row;
    o.fast_bound = fast_rate_bound(static_cast<double>(row.k), params.d,
                                   params.tau, params.c_fast)
                       .value;
    o.slow_bound = slow_rate_bound(static_cast<double>(row.n), params.d,
                                   params.gamma, params.beta, params.beta_prime,
                                   params.M, params.c_slow)
                       .value;
    rows.push_back(o);
  }
  return rows;
}

void write_overlay_csv(const std::vector<OverlayRow>& rows,
                       const std::filesystem::path& path) {
  CsvWriter out(path);
  out.header({"n", "k", "mean_excess", "excess_stderr", "fast_bound",
              "slow_bound"});
  for (const auto& r : rows) {
    out.field(r.curve.n).field(r.curve.k).field(r.curve.mean_excess);
    out.field(r.curve.excess_stderr).field(r.fast_bound).field(r.slow_bound);
    out.end_row();
  }
}

double fit_fast_rate_constant(const ScalingCurve& curve, double d, double tau) {
  require(d > 0 && tau > 0, "d and tau must be positive");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& row : curve.rows) {
    const double k = static_cast<double>(row.k);
    const double room = row.mean_excess - 2.0 * std::exp(-k / 6.0);
    if (room <= 0) continue;
    if (room >= 1.0) return 0.0;
    // exp(-c tau^2 k / d) >= room  <=>  c <= -log(room) d / (tau^2 k)
    best = std::min(best, -std::log(room) * d / (tau * tau * k));
  }
  return best;
}

void write_plot_script(const std::filesystem::path& curve_csv,
                       const std::filesystem::path& script_path,
                       const std::string& title) {
  std::ofstream out(script_path);
  if (!out) throw DataError("cannot open for writing: " + script_path.string());
  const std::string png = curve_csv.stem().string() + ".png";
  out << "# gnuplot script: excess risk against sample size\n"
      << "set datafile separator ','\n"
      << "set terminal pngcairo size 800,600\n"
      << "set output '" << png << "'\n"
      << "set logscale xy\n"
      << "set xlabel 'n'\n"
      << "set ylabel 'excess risk'\n"
      << "set title '" << title << "'\n"
      << "set key top right\n"
      << "set key autotitle columnhead\n"
      << "plot '" << curve_csv.filename().string()
      << "' using 1:7:8 with yerrorlines title 'mean excess'\n";
  if (!out) throw DataError("write failed: " + script_path.string());
}

}  // namespace knnscale
