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

#include "knnscale/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <tuple>

#include "knnscale/bounds.hpp"
#include "knnscale/csv.hpp"
#include "knnscale/dominance.hpp"
#include "knnscale/error.hpp"
#include "knnscale/experiments.hpp"
#include "knnscale/ingest.hpp"
#include "knnscale/parallel.hpp"

namespace knnscale::cli {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<KeySpec> common_keys() {
  return {{"output_dir", "knnlab_out", "directory for every artifact"},
          {"seed", "1", "master seed"},
          {"threads", "0", "worker threads, 0 = hardware concurrency"}};
}

std::vector<KeySpec> preset_keys() {
  return {{"preset", "aligned", "aligned|rotated|ramp|ellipse|unbalanced"},
          {"a", "2", "signal box half-width"},
          {"b", "0.5", "signal box half-height"},
          {"d", "10", "ambient dimension"},
          {"slope", "0.5", "rotated boundary slope"}};
}

std::vector<KeySpec> build(std::vector<std::vector<KeySpec>> parts) {
  std::vector<KeySpec> all = common_keys();
  for (auto& part : parts) all.insert(all.end(), part.begin(), part.end());
  return all;
}

const std::map<std::string, std::vector<KeySpec>>& schemas() {
  static const auto table = [] {
    std::map<std::string, std::vector<KeySpec>> t;
    t["scan"] = build(
        {preset_keys(),
         {{"n_grid", "2^7..2^15", "training sizes: comma list or 2^lo..2^hi"},
          {"k_rule", "affine", "affine | floor_frac[:f] | fixed:k"},
          {"trials", "20", "trials per n"},
          {"n_test", "2000", "fresh test points per trial"},
          {"resample", "none", "none | undersample | oversample"},
          {"fit_min", "0", "slope fit lower n (0 = no fit)"},
          {"fit_max", "0", "slope fit upper n"},
          {"overlay_tau", "0", "tau for the bound overlay (0 = no overlay)"},
          {"plot", "true", "emit a gnuplot script"}}});
    t["tau-map"] = build(
        {preset_keys(),
         {{"n0", "81", "cells along s0"},
          {"n1", "21", "cells along s1"},
          {"threshold", "0.05", "tau threshold for the regions"},
          {"n_mc", "20000", "signal draws per class for the dominance check"},
          {"radius_grid", "256", "radii in the dominance check"},
          {"quad_grid", "1024", "quadrature lattice per axis"}}});
    t["pred-map"] = build({preset_keys(),
                           {{"n", "5000", "training size"},
                            {"k", "52", "neighbors"},
                            {"n0", "81", "cells along s0"},
                            {"n1", "21", "cells along s1"}}});
    t["diagnose"] = build(
        {preset_keys(),
         {{"point", "0,0", "coordinates, zero padded; a trailing ... is allowed"},
          {"threshold", "0.05", "tau threshold for the region"},
          {"n_mc", "20000", "signal draws per class"},
          {"radius_grid", "256", "radii in the dominance check"}}});
    t["bounds"] = build(
        {preset_keys(),
         {{"point", "", "one point (empty = random points)"},
          {"random_points", "20", "points drawn from the distribution"},
          {"n", "200", "training size"},
          {"k", "20", "neighbors"},
          {"trials", "10000", "training sets per point"}}});
    t["gauss-check"] = build(
        {{{"be_dims", "8,32,128,512", "noise dimensions for the Kolmogorov gap"},
          {"be_samples", "1000000", "draws per dimension"},
          {"series_dims", "8,16,32", "even degrees for the series check"},
          {"series_lambdas", "0,2,8", "noncentralities for the series check"},
          {"window", "0.1", "half-width of the t window in units of sigma^2"},
          {"uniform_m", "0.5,1,2", "half-widths M of Uniform[-M, M]"},
          {"mc_samples", "1000000", "draws for the variance minimization"}}});
    t["ingest-scan"] = build(
        {{{"images", "", "training images (IDX)"},
          {"labels", "", "training labels (IDX)"},
          {"test_images", "", "test images (IDX)"},
          {"test_labels", "", "test labels (IDX)"},
          {"classes", "0,1", "class_a,class_b"},
          {"n_grid", "500,2000,8000", "training sizes"},
          {"k_rule", "affine", "affine | floor_frac[:f] | fixed:k"},
          {"trials", "5", "trials per n"},
          {"n_test", "2000", "test rows per trial"}}});
    return t;
  }();
  return table;
}

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

PresetSpec preset_of(const RunConfig& c) {
  PresetSpec p;
  p.name = c.text("preset");
  p.a = c.real("a");
  p.b = c.real("b");
  p.d = static_cast<int>(c.integer("d"));
  p.slope = c.real("slope");
  return p;
}

std::vector<double> point_of(const RunConfig& c, int d) {
  auto fields = split(c.text("point"), ',');
  if (!fields.empty()) {
    const std::string last = trim(fields.back());
    if (last == "..." || last == "…") fields.pop_back();
  }
  if (static_cast<int>(fields.size()) > d) {
    c.fail("point", "has " + std::to_string(fields.size()) +
                        " coordinates but d = " + std::to_string(d));
  }
  if (fields.size() < 2) c.fail("point", "needs at least the two signal coordinates");
  std::vector<double> x(static_cast<std::size_t>(d), 0.0);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    try {
      x[i] = parse_double(trim(fields[i]));
    } catch (const std::exception&) {
      c.fail("point", "coordinate '" + fields[i] + "' is not a number");
    }
  }
  return x;
}

void write_fit(const SlopeFit& fit, std::size_t lo, std::size_t hi,
               const fs::path& path) {
  CsvWriter out(path);
  out.header({"n_min", "n_max", "slope", "stderr", "intercept", "used",
              "excluded"});
  out.field(lo).field(hi).field(fit.slope).field(fit.std_error);
  out.field(fit.intercept).field(fit.used).field(fit.excluded);
  out.end_row();
}

void run_scan(const RunConfig& c, const fs::path& dir, std::ostream& log) {
  ScanConfig scan;
  scan.preset = preset_of(c);
  scan.n_grid = c.sizes("n_grid");
  scan.k_rule = KRule::parse(c.text("k_rule"));
  scan.trials = c.count("trials");
  scan.n_test = c.count("n_test");
  scan.master_seed = c.seed("seed");
  const std::string resample = c.text("resample");
  if (resample == "undersample" || resample == "oversample") {
    scan.resample = true;
    scan.resample_mode = resample == "undersample" ? ResampleMode::kUndersample
                                                   : ResampleMode::kOversample;
  } else if (resample != "none") {
    c.fail("resample", "must be none, undersample or oversample");
  }
  scan.validate();
  const auto curve = scaling_scan(scan);
  write_curve_csv(curve, dir / "curve.csv");
  log << "wrote " << (dir / "curve.csv").string() << "\n";
  if (c.flag("plot")) {
    write_plot_script(dir / "curve.csv", dir / "curve.gp",
                      scan.preset.name + " k-NN excess risk");
  }
  const std::size_t lo = c.count("fit_min"), hi = c.count("fit_max");
  if (lo > 0) {
    const auto fit = slope_fit(curve, lo, hi);
    write_fit(fit, lo, hi, dir / "fit.csv");
    log << "slope " << format_double(fit.slope) << " +/- "
        << format_double(fit.std_error) << "\n";
  }
  const double tau = c.real("overlay_tau");
  if (tau > 0) {
    OverlayParams params;
    params.d = scan.preset.d;
    params.tau = tau;
    params.c_fast = fit_fast_rate_constant(curve, params.d, tau);
    if (!std::isfinite(params.c_fast)) params.c_fast = 1.0;
    write_overlay_csv(bound_overlay(curve, params), dir / "overlay.csv");
  }
}

void run_tau_map(const RunConfig& c, const fs::path& dir, std::ostream& log) {
  const auto dist = make_preset(preset_of(c));
  DominanceOptions options;
  options.n_mc = c.count("n_mc");
  options.radius_grid_size = static_cast<int>(c.count("radius_grid"));
  options.seed = c.seed("seed");
  const DominanceAnalyzer analyzer(dist, options,
                                   static_cast<int>(c.count("quad_grid")));
  const auto grid = PlaneGrid::covering(dist.signal(),
                                        static_cast<int>(c.count("n0")),
                                        static_cast<int>(c.count("n1")));
  const auto map = tau_map(analyzer, grid, c.real("threshold"));
  write_tau_map_csv(map, dir / "tau_map.csv");
  std::array<std::size_t, 3> regions{};
  for (const auto& r : map) ++regions[static_cast<int>(r.region)];
  log << "positive " << regions[0] << " negative " << regions[1] << " neither "
      << regions[2] << "\n";
}

void run_pred_map(const RunConfig& c, const fs::path& dir, std::ostream& log) {
  const auto dist = make_preset(preset_of(c));
  const auto grid = PlaneGrid::covering(dist.signal(),
                                        static_cast<int>(c.count("n0")),
                                        static_cast<int>(c.count("n1")));
  const auto map =
      prediction_map(dist, c.count("n"), c.count("k"), c.seed("seed"), grid);
  write_prediction_map_csv(map, dir / "pred_map.csv");
  std::size_t agree = 0;
  for (const auto& cell : map) agree += cell.prediction == cell.bayes;
  log << "agreement " << format_double(static_cast<double>(agree) / map.size())
      << "\n";
}

void run_diagnose(const RunConfig& c, const fs::path& dir, std::ostream& log) {
  const auto dist = make_preset(preset_of(c));
  const auto x = point_of(c, dist.d());
  DominanceOptions options;
  options.n_mc = c.count("n_mc");
  options.radius_grid_size = static_cast<int>(c.count("radius_grid"));
  options.seed = c.seed("seed");
  const auto report = classify_point(dist, x, c.real("threshold"), options);
  CsvWriter out(dir / "diagnose.csv");
  out.header({"s0", "s1", "theta", "tau", "sd_verdict", "max_violation",
              "at_radius", "region"});
  out.field(x[0]).field(x[1]).field(report.theta).field(report.tau);
  out.field(to_string(report.sd_verdict.kind));
  out.field(report.sd_verdict.max_violation).field(report.sd_verdict.at_radius);
  out.field(to_string(report.region));
  out.end_row();
  log << "theta=" << report.theta << " tau=" << format_double(report.tau)
      << " sd=" << to_string(report.sd_verdict.kind)
      << " region=" << to_string(report.region) << "\n";
}

void run_bounds(const RunConfig& c, const fs::path& dir, std::ostream& log) {
  const auto dist = make_preset(preset_of(c));
  const std::uint64_t seed = c.seed("seed");
  std::vector<std::vector<double>> points;
  if (!c.text("point").empty()) {
    points.push_back(point_of(c, dist.d()));
  } else {
    const auto drawn = sample(dist, c.count("random_points"), derive_seed(seed, 0));
    for (std::size_t i = 0; i < drawn.n; ++i) {
      points.emplace_back(drawn.row(i).begin(), drawn.row(i).end());
    }
  }
  const SignalQuadrature quadrature(dist.signal());
  CsvWriter out(dir / "bounds.csv");
  out.header({"point", "s0", "s1", "bayes_label", "trials", "empty_ball_trials",
              "misclassification", "misclassification_se", "prop1_bound",
              "prop1_bound_se", "remark1_bound", "remark1_bound_se"});
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto battery =
        point_battery(dist, points[i], c.count("n"), c.count("k"),
                      c.count("trials"), derive_seed(seed, i + 1), &quadrature);
    out.field(i).field(points[i][0]).field(points[i][1]);
    out.field(battery.bayes_label).field(battery.trials);
    out.field(battery.empty_ball_trials);
    for (const MeanStderr* m : {&battery.misclassification(),
                                &battery.prop1_bound(),
                                &battery.remark1_bound()}) {
      out.field(m->mean).field(m->std_error);
    }
    out.end_row();
  }
  log << "wrote " << points.size() << " batteries\n";
}

void run_gauss_check(const RunConfig& c, const fs::path& dir, std::ostream& log) {
  const std::uint64_t seed = c.seed("seed");
  {
    CsvWriter out(dir / "gauss_berry_esseen.csv");
    out.header({"d_n", "samples", "mu", "sigma", "cdf_gap", "scaled_gap",
                "pdf_gap", "bin_width"});
    for (double dim : c.reals("be_dims")) {
      const int d_n = static_cast<int>(dim);
      if (d_n < 1 || d_n != dim) c.fail("be_dims", "entries must be positive integers");
      const std::vector<double> x(static_cast<std::size_t>(d_n), 0.0);
      const auto r = berry_esseen_gap(NoiseSpec::standard_normal(d_n), x,
                                      c.count("be_samples"),
                                      derive_seed(seed, {0, std::uint64_t(d_n)}));
      out.field(d_n).field(r.n_samples).field(r.mu_x).field(r.sigma_x);
      out.field(r.cdf_gap).field(r.cdf_gap * std::sqrt(dim)).field(r.pdf_gap);
      out.field(r.bin_width);
      out.end_row();
    }
  }
  {
    CsvWriter out(dir / "gauss_series.csv");
    out.header({"d_n", "lambda", "max_abs_logderiv", "at_t", "normalization"});
    for (double dim : c.reals("series_dims")) {
      for (double lambda : c.reals("series_lambdas")) {
        const auto s = series_smoothness(static_cast<int>(dim), lambda,
                                         c.real("window"));
        out.field(s.d_n).field(s.lambda).field(s.max_abs_logderiv);
        out.field(s.at_t).field(s.normalization);
        out.end_row();
      }
    }
  }
  {
    CsvWriter out(dir / "gauss_quadratic.csv");
    out.header({"M", "moment_floor", "closed_form", "mc_minimum", "mc_argmin",
                "relative_gap"});
    std::uint64_t index = 0;
    for (double m : c.reals("uniform_m")) {
      const auto noise = NoiseSpec::uniform_scaled(1, m);
      Rng rng(derive_seed(seed, {1, index++}));
      std::vector<double> draws(c.count("mc_samples"));
      for (auto& v : draws) v = noise.sample(rng);
      const auto q = min_quadratic_variance(draws);
      const double p_inf = 1.0 / (2.0 * m);
      const double closed = 1.0 / (180.0 * std::pow(p_inf, 4));
      out.field(m).field(quadratic_variance_floor(noise)).field(closed);
      out.field(q.minimum).field(q.argmin);
      out.field(std::abs(q.minimum - closed) / closed);
      out.end_row();
    }
  }
  log << "wrote gauss_berry_esseen.csv, gauss_series.csv, gauss_quadratic.csv\n";
}

void run_ingest_scan(const RunConfig& c, const fs::path& dir, std::ostream& log) {
  for (const char* key : {"images", "labels", "test_images", "test_labels"}) {
    if (c.text(key).empty()) c.fail(key, "is required");
  }
  const auto classes = c.reals("classes");
  if (classes.size() != 2) c.fail("classes", "must be two labels, e.g. 0,1");
  const std::uint64_t seed = c.seed("seed");
  const auto load = [&](const char* images, const char* labels, std::uint64_t s) {
    return to_binary_dataset(read_idx(c.text(images), true),
                             read_idx(c.text(labels)),
                             static_cast<int>(classes[0]),
                             static_cast<int>(classes[1]), kAllRows, s);
  };
  const Dataset train = load("images", "labels", derive_seed(seed, 0));
  const Dataset test = load("test_images", "test_labels", derive_seed(seed, 1));
  RealScanConfig scan;
  scan.n_grid = c.sizes("n_grid");
  scan.k_rule = KRule::parse(c.text("k_rule"));
  scan.trials = c.count("trials");
  scan.n_test = c.count("n_test");
  scan.master_seed = seed;
  const auto curve = real_data_scan(train, test, scan);
  write_curve_csv(curve, dir / "real_curve.csv");
  log << "train rows " << train.n << ", test rows " << test.n << "\n";
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {
      "scan", "tau-map", "pred-map", "diagnose", "bounds", "gauss-check",
      "ingest-scan"};
  return names;
}

namespace {

std::string describe(const std::string& subcommand) {
  static const std::map<std::string, std::string> text = {
      {"scan", "excess-risk learning curve over a grid of n"},
      {"tau-map", "margin and dominance region over the signal plane"},
      {"pred-map", "one fitted classifier against f* over the signal plane"},
      {"diagnose", "margin, dominance and region at one point"},
      {"bounds", "misclassification against the two T_k bounds"},
      {"gauss-check", "normal approximation, series smoothness, variance floor"},
      {"ingest-scan", "learning curve on an IDX image pair"},
  };
  return text.at(subcommand);
}

}  // namespace

const std::vector<KeySpec>& schema(const std::string& subcommand) {
  const auto it = schemas().find(subcommand);
  if (it == schemas().end()) {
    throw ConfigError("unknown subcommand '" + subcommand + "'");
  }
  return it->second;
}

RunConfig::RunConfig(std::string subcommand) : subcommand_(std::move(subcommand)) {
  for (const auto& spec : schema(subcommand_)) {
    values_[spec.key] = {spec.default_value, "default"};
  }
}

void RunConfig::set(const std::string& key, const std::string& value,
                    const std::string& origin) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    throw ConfigError(origin + ": unknown key '" + key + "' for " + subcommand_);
  }
  it->second = {value, origin};
}

void RunConfig::merge_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    const std::string origin = path.string() + ":" + std::to_string(number);
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ": expected key = value, got '" + body + "'");
    }
    set(trim(std::string_view(body).substr(0, eq)),
        trim(std::string_view(body).substr(eq + 1)), origin);
  }
}

void RunConfig::fail(const std::string& key, const std::string& problem) const {
  const auto it = values_.find(key);
  const std::string origin = it == values_.end() ? "?" : it->second.origin;
  throw ConfigError(origin + ": key '" + key + "' " + problem);
}

const std::string& RunConfig::text(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw ConfigError("key '" + key + "' is not defined for " + subcommand_);
  }
  return it->second.value;
}

double RunConfig::real(const std::string& key) const {
  try {
    const double v = parse_double(text(key));
    if (!std::isfinite(v)) fail(key, "must be finite");
    return v;
  } catch (const DataError&) {
    fail(key, "expects a number, got '" + text(key) + "'");
  }
}

long long RunConfig::integer(const std::string& key) const {
  const std::string& s = text(key);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(key, "expects an integer, got '" + s + "'");
  }
  return v;
}

std::size_t RunConfig::count(const std::string& key) const {
  const long long v = integer(key);
  if (v < 0) fail(key, "must be non-negative");
  return static_cast<std::size_t>(v);
}

std::uint64_t RunConfig::seed(const std::string& key) const {
  const std::string& s = text(key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(key, "expects an unsigned 64-bit integer, got '" + s + "'");
  }
  return v;
}

bool RunConfig::flag(const std::string& key) const {
  const std::string& s = text(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  fail(key, "expects true or false, got '" + s + "'");
}

std::vector<double> RunConfig::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& f : split(text(key), ',')) {
    try {
      out.push_back(parse_double(trim(f)));
    } catch (const DataError&) {
      fail(key, "entry '" + f + "' is not a number");
    }
  }
  if (out.empty()) fail(key, "is empty");
  return out;
}

std::vector<std::size_t> RunConfig::sizes(const std::string& key) const {
  const std::string& s = text(key);
  const auto dots = s.find("..");
  if (dots != std::string::npos) {
    const std::string lo = trim(s.substr(0, dots));
    const std::string hi = trim(s.substr(dots + 2));
    if (lo.rfind("2^", 0) != 0 || hi.rfind("2^", 0) != 0) {
      fail(key, "range must look like 2^lo..2^hi");
    }
    try {
      return power_of_two_grid(std::stoi(lo.substr(2)), std::stoi(hi.substr(2)));
    } catch (const std::exception&) {
      fail(key, "invalid power-of-two range '" + s + "'");
    }
  }
  std::vector<std::size_t> out;
  for (double v : reals(key)) {
    if (!(v >= 1) || v != std::floor(v)) fail(key, "entries must be positive integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> RunConfig::resolved() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [key, entry] : values_) out.emplace_back(key, entry.value);
  return out;
}

void write_manifest(const RunConfig& config, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << "# knnlab manifest; replay with: knnlab replay <this file>\n";
  out << "version = " << kVersion << "\n";
  out << "subcommand = " << config.subcommand() << "\n";
  for (const auto& [key, value] : config.resolved()) {
    out << key << " = " << value << "\n";
  }
  if (!out) throw DataError("write failed: " + path.string());
}

RunConfig read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest " + path.string());
  std::string line, version, subcommand;
  std::vector<std::tuple<std::string, std::string, std::string>> entries;
  for (int number = 1; std::getline(in, line); ++number) {
    const std::string origin = path.string() + ":" + std::to_string(number);
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ": expected key = value, got '" + body + "'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key == "version") {
      version = value;
    } else if (key == "subcommand") {
      subcommand = value;
    } else {
      entries.emplace_back(key, value, origin);
    }
  }
  if (version != kVersion) {
    throw ConfigError(path.string() + ": manifest version '" + version +
                      "' does not match " + kVersion);
  }
  RunConfig config(subcommand);
  for (const auto& [key, value, origin] : entries) config.set(key, value, origin);
  return config;
}

void execute(const RunConfig& config, std::ostream& log) {
  set_thread_count(static_cast<unsigned>(config.count("threads")));
  const fs::path dir = config.text("output_dir");
  if (dir.empty()) config.fail("output_dir", "is empty");
  fs::create_directories(dir);
  const std::string& sub = config.subcommand();
  if (sub == "scan") {
    run_scan(config, dir, log);
  } else if (sub == "tau-map") {
    run_tau_map(config, dir, log);
  } else if (sub == "pred-map") {
    run_pred_map(config, dir, log);
  } else if (sub == "diagnose") {
    run_diagnose(config, dir, log);
  } else if (sub == "bounds") {
    run_bounds(config, dir, log);
  } else if (sub == "gauss-check") {
    run_gauss_check(config, dir, log);
  } else if (sub == "ingest-scan") {
    run_ingest_scan(config, dir, log);
  } else {
    throw ConfigError("unknown subcommand '" + sub + "'");
  }
  write_manifest(config, dir / kManifestName);
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"k-NN scaling-law laboratory", "knnlab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  struct Parsed {
    CLI::App* app;
    std::map<std::string, CLI::Option*> options;
    std::map<std::string, std::string> values;
    std::string config_file;
  };
  std::map<std::string, std::unique_ptr<Parsed>> parsed;
  for (const auto& name : subcommands()) {
    auto p = std::make_unique<Parsed>();
    p->app = app.add_subcommand(name, describe(name));
    p->app->add_option("--config", p->config_file, "flat key = value file");
    for (const auto& spec : schema(name)) {
      std::string names = "--" + dashed(spec.key);
      if (spec.key.find('_') != std::string::npos) names += ",--" + spec.key;
      p->options[spec.key] =
          p->app->add_option(names, p->values[spec.key], spec.help)
              ->default_str(spec.default_value);
    }
    parsed[name] = std::move(p);
  }
  std::string manifest_path, replay_output, replay_threads;
  CLI::App* replay = app.add_subcommand("replay", "re-run a manifest");
  replay->add_option("manifest", manifest_path)->required();
  CLI::Option* replay_dir = replay->add_option("--output-dir,--output_dir", replay_output);
  CLI::Option* replay_thr = replay->add_option("--threads", replay_threads);

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) return app.exit(e, out, err);
      throw ConfigError(e.what());
    }
    if (replay->parsed()) {
      RunConfig config = read_manifest(manifest_path);
      if (replay_dir->count() > 0) config.set("output_dir", replay_output, "flag --output-dir");
      if (replay_thr->count() > 0) config.set("threads", replay_threads, "flag --threads");
      execute(config, out);
      return kOk;
    }
    for (auto& [name, p] : parsed) {
      if (!p->app->parsed()) continue;
      RunConfig config(name);
      if (!p->config_file.empty()) config.merge_file(p->config_file);
      if (const char* env = std::getenv(kOutputDirEnv); env && *env) {
        config.set("output_dir", env, std::string("env ") + kOutputDirEnv);
      }
      for (const auto& [key, option] : p->options) {
        if (option->count() > 0) {
          config.set(key, p->values[key], "flag --" + dashed(key));
        }
      }
      execute(config, out);
    }
    return kOk;
  } catch (const ConfigError& e) {
    err << "error[config]: " << e.what() << "\n";
    return kConfig;
  } catch (const InvalidArgument& e) {
    err << "error[config]: " << e.what() << "\n";
    return kConfig;
  } catch (const DataError& e) {
    err << "error[data]: " << e.what() << "\n";
    return kDataFile;
  } catch (const NumericError& e) {
    err << "error[numeric]: " << e.what() << "\n";
    return kNumeric;
  } catch (const fs::filesystem_error& e) {
    err << "error[data]: " << e.what() << "\n";
    return kDataFile;
  } catch (const std::exception& e) {
    err << "error[internal]: " << e.what() << "\n";
    return kInternal;
  }
}

}  // namespace knnscale::cli
