// Copyright 2026 The rlcalib Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rlcalib/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>

#include "rlcalib/losses.hpp"

namespace rlcalib
{

const std::array<const char *, 6> kParameterNames{"theta_x_deg", "theta_y_deg", "theta_z_deg",
                                                  "t_x_m",       "t_y_m",       "t_z_m"};

std::string format_double(double v)
{
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

// ---------------------------------------------------------------- ablation

std::vector<std::pair<std::string, CalibConfig>> ablation_configs(const CalibConfig & base)
{
  base.validate();
  std::vector<std::pair<std::string, CalibConfig>> out;
  auto variant = [&](const char * name, bool mlp, bool ray) {
    CalibConfig c = base;
    if (!mlp) c.weights.mlp = 0.0;
    if (!ray) c.weights.ray = 0.0;
    out.emplace_back(name, c);
  };
  variant("rep", false, false);
  variant("mlp", true, false);
  variant("mlp+ray", true, true);
  variant("rep+ray", false, true);
  for (const auto & [name, c] : out) {
    try {
      c.weights.validate();
    } catch (const Error & e) {
      throw Error(ErrorKind::Config, "ablation config '" + name + "': " + e.what());
    }
  }
  return out;
}

AblationTable run_ablation(const CalibDataset & dataset, const CalibConfig & base)
{
  const auto configs = ablation_configs(base);
  AblationTable t;
  AblationRow init;
  init.name = "initial";
  init.parameters = parameter_row(base.initial);
  t.rows.push_back(init);
  for (const auto & [name, c] : configs) {
    const CalibrationResult r = run_calibration(dataset, c);
    AblationRow row;
    row.name = name;
    row.parameters = r.table_row();
    row.initial_total = r.initial_loss.total;
    row.final_total = r.final_loss.total;
    row.iterations = r.iterations;
    t.rows.push_back(row);
  }
  return t;
}

// ------------------------------------------------------------- monte carlo

CalibDataset subsample(const CalibDataset & dataset, std::size_t count, std::uint64_t seed)
{
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t f = 0; f < dataset.frames.size(); ++f) {
    for (std::size_t o = 0; o < dataset.frames[f].observations.size(); ++o) all.emplace_back(f, o);
  }
  if (count > all.size()) {
    throw Error(ErrorKind::InvalidArgument, "subsample: count exceeds the observation count");
  }
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates, then restore dataset order.
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, all.size() - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  all.resize(count);
  std::sort(all.begin(), all.end());

  CalibDataset out;
  out.ground_truth = dataset.ground_truth;
  std::size_t k = 0;
  for (std::size_t f = 0; f < dataset.frames.size(); ++f) {
    const Frame & src = dataset.frames[f];
    Frame dst;
    dst.id = src.id;
    dst.poses = src.poses;
    for (; k < all.size() && all[k].first == f; ++k) dst.observations.push_back(src.observations[all[k].second]);
    if (dst.observations.empty()) continue;
    for (const RadarSample & s : src.samples) {
      const bool kept = std::any_of(dst.observations.begin(), dst.observations.end(),
                                    [&](const LidarTargetObservation & o) { return o.target_id == s.target_id; });
      if (kept) dst.samples.push_back(s);
    }
    out.frames.push_back(std::move(dst));
  }
  return out;
}

double quantile(std::vector<double> values, double p)
{
  if (values.empty()) throw Error(ErrorKind::InvalidArgument, "quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

MonteCarloResult monte_carlo(const CalibDataset & dataset, const CalibConfig & config, int runs,
                             double frac, std::uint64_t seed)
{
  config.validate();
  const std::size_t n = dataset.observation_count();
  if (n < 4) throw Error(ErrorKind::InvalidArgument, "monte carlo needs at least 4 observations");
  if (!(frac > 0.0 && frac <= 1.0)) throw Error(ErrorKind::InvalidArgument, "frac must be in (0, 1]");
  if (runs < 1) throw Error(ErrorKind::InvalidArgument, "runs must be positive");
  const auto count = static_cast<std::size_t>(std::ceil(frac * static_cast<double>(n) - 1e-12));

  MonteCarloResult out;
  std::seed_seq base{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::vector<std::uint32_t> run_seeds(static_cast<std::size_t>(2 * runs));
  base.generate(run_seeds.begin(), run_seeds.end());

  for (int i = 0; i < runs; ++i) {
    MonteCarloRun run;
    run.index = i;
    const std::uint64_t s = (static_cast<std::uint64_t>(run_seeds[2 * i]) << 32) | run_seeds[2 * i + 1];
    const CalibDataset sub = subsample(dataset, count, s);
    run.observations = sub.observation_count();
    const LossProblem problem(sub, config.sampling_radius);
    if (config.weights.mlp > 0.0 && problem.sample_count() == 0) {
      run.skipped = true;
      run.reason = "no regression samples in subsample";
    } else {
      run.parameters = run_calibration(sub, config).table_row();
    }
    out.runs.push_back(run);
  }

  for (std::size_t p = 0; p < 6; ++p) {
    std::vector<double> v;
    for (const auto & r : out.runs) {
      if (!r.skipped) v.push_back(r.parameters[p]);
    }
    if (v.empty()) continue;
    out.quantiles[p] = {quantile(v, 0.0), quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75),
                        quantile(v, 1.0)};
    out.completed = v.size();
  }
  return out;
}

// ---------------------------------------------------------------- boundary

BoundaryReport boundary_check(const Extrinsics & extrinsics, const CalibDataset & dataset,
                              const TargetGeometry & geom)
{
  if (!(geom.radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "target radius must be positive");
  BoundaryReport out;
  std::size_t considered = 0, violations = 0;
  for (const Frame & f : dataset.frames) {
    for (const LidarTargetObservation & o : f.observations) {
      BoundaryRecord r;
      r.frame = f.id;
      r.target = o.target_id;
      const Vec3 c = transform_point(extrinsics, o.lidar_center);
      r.rho = c.norm();
      r.elevation = r.rho > 0.0 ? std::asin(std::clamp(c.z() / r.rho, -1.0, 1.0)) : 0.0;
      if (r.rho <= geom.radius) {
        r.inside_sphere = true;
        r.bound = kPi / 2.0;
        ++out.flagged;
      } else {
        r.bound = std::asin(geom.radius / r.rho);
        r.violation = std::abs(r.elevation) > r.bound;
        ++considered;
        if (r.violation) ++violations;
      }
      out.records.push_back(r);
    }
  }
  out.violation_fraction = considered ? static_cast<double>(violations) / static_cast<double>(considered) : 0.0;
  return out;
}

// --------------------------------------------------------------- histograms

Histogram Histogram::build(const std::vector<double> & values, double bin_width)
{
  if (!(bin_width > 0.0)) throw Error(ErrorKind::InvalidArgument, "histogram bin width must be positive");
  Histogram h;
  h.bin_width = bin_width;
  for (double v : values) {
    const auto b = static_cast<std::size_t>(std::max(0.0, std::floor(v / bin_width)));
    if (b >= h.counts.size()) h.counts.resize(b + 1, 0);
    ++h.counts[b];
  }
  return h;
}

std::size_t Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

namespace
{

double mean_of(const std::vector<double> & v)
{
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double ReprojectionReport::mean_range_error() const { return mean_of(range_errors); }
double ReprojectionReport::mean_azimuth_error() const { return mean_of(azimuth_errors); }
double RegressionReport::mean_error() const { return mean_of(errors); }

ReprojectionReport reprojection_histogram(const Extrinsics & extrinsics, const CalibDataset & dataset)
{
  ReprojectionReport out;
  std::vector<double> az_deg;
  for (const Frame & f : dataset.frames) {
    for (const LidarTargetObservation & o : f.observations) {
      const SphericalPoint sp = to_spherical(transform_point(extrinsics, o.lidar_center));
      out.range_errors.push_back(std::abs(sp.range - o.radar_range));
      out.azimuth_errors.push_back(std::abs(wrap_angle(sp.azimuth - o.radar_azimuth)));
      az_deg.push_back(rad2deg(out.azimuth_errors.back()));
    }
  }
  out.range_histogram = Histogram::build(out.range_errors, kRangeBin);
  out.azimuth_histogram = Histogram::build(az_deg, kAzimuthBinDeg);
  return out;
}

RegressionReport regression_error_report(const MlpWeights & weights,
                                         const std::vector<TargetLocalSample> & samples)
{
  weights.validate();
  RegressionReport out;
  out.pe_enabled = weights.encoding.enabled;
  const auto n = static_cast<ad::Index>(samples.size());
  ad::Matrix pos(n, 3), dir(n, 3);
  for (ad::Index i = 0; i < n; ++i) {
    pos.row(i) = samples[static_cast<std::size_t>(i)].position.transpose();
    dir.row(i) = samples[static_cast<std::size_t>(i)].direction.transpose();
  }
  if (n > 0) {
    const Eigen::VectorXd pred = predict_energies(weights, pos, dir);
    for (ad::Index i = 0; i < n; ++i) {
      out.errors.push_back(std::abs(pred(i) - samples[static_cast<std::size_t>(i)].energy));
    }
  }
  out.histogram = Histogram::build(out.errors, kEnergyBin);
  return out;
}

EncodingComparison compare_positional_encoding(const std::vector<TargetLocalSample> & train,
                                               const std::vector<TargetLocalSample> & eval,
                                               int depth, int steps, double lr, std::uint64_t seed)
{
  PositionalEncoding on;
  on.depth = depth;
  PositionalEncoding off = on;
  off.enabled = false;
  EncodingComparison out;
  out.with_pe = regression_error_report(fit_mlp(train, on, steps, lr, seed).weights, eval);
  out.without_pe = regression_error_report(fit_mlp(train, off, steps, lr, seed).weights, eval);
  return out;
}

std::vector<TargetLocalSample> target_samples(const CalibDataset & dataset, const Extrinsics & extrinsics,
                                              double sampling_radius)
{
  const LossProblem problem(dataset, sampling_radius);
  ad::Matrix pos, dir;
  problem.target_local_samples(extrinsics, pos, dir);
  std::vector<TargetLocalSample> out;
  for (ad::Index i = 0; i < pos.rows(); ++i) {
    TargetLocalSample s;
    s.position = pos.row(i).transpose();
    s.direction = dir.row(i).transpose();
    s.energy = problem.sample_energies()(i);
    out.push_back(s);
  }
  return out;
}

// ------------------------------------------------------------------ reports

namespace
{

void header(std::ostream & os, const CalibConfig & c, const std::string & kind)
{
  std::string json = config_to_string(c);
  json.erase(std::remove(json.begin(), json.end(), '\n'), json.end());
  os << "# report: " << kind << "\n# config: " << json << "\n# seed: " << c.seed << "\n";
}

void params_cells(std::ostream & os, const std::array<double, 6> & p)
{
  for (double v : p) os << '\t' << format_double(v);
}

void params_header(std::ostream & os)
{
  for (const char * n : kParameterNames) os << '\t' << n;
}

void histogram_table(std::ostream & os, const char * name, const Histogram & h)
{
  os << "# histogram: " << name << " bin_width=" << format_double(h.bin_width) << "\n";
  os << "bin_lo\tbin_hi\tcount\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    os << format_double(static_cast<double>(i) * h.bin_width) << '\t'
       << format_double(static_cast<double>(i + 1) * h.bin_width) << '\t' << h.counts[i] << "\n";
  }
}

}  // namespace

void write_ablation(std::ostream & os, const AblationTable & t, const CalibConfig & c)
{
  header(os, c, "ablation");
  os << "config";
  params_header(os);
  os << "\tinitial_loss\tfinal_loss\titerations\n";
  for (const AblationRow & r : t.rows) {
    os << r.name;
    params_cells(os, r.parameters);
    os << '\t' << format_double(r.initial_total) << '\t' << format_double(r.final_total) << '\t'
       << r.iterations << "\n";
  }
}

void write_history(std::ostream & os, const CalibrationResult & r, const CalibConfig & c)
{
  header(os, c, "history");
  os << "step\ttotal\tl_rep\tl_mlp\tl_ray";
  params_header(os);
  os << "\n";
  for (const StepRecord & s : r.history) {
    os << s.step << '\t' << format_double(s.loss.total) << '\t' << format_double(s.loss.rep) << '\t'
       << format_double(s.loss.mlp) << '\t' << format_double(s.loss.ray);
    params_cells(os, {s.euler_deg.x(), s.euler_deg.y(), s.euler_deg.z(), s.translation.x(),
                      s.translation.y(), s.translation.z()});
    os << "\n";
  }
}

void write_calibration(std::ostream & os, const CalibrationResult & r, const CalibConfig & c)
{
  header(os, c, "calibration");
  os << "row";
  params_header(os);
  os << "\ttotal\tl_rep\tl_mlp\tl_ray\n";
  auto line = [&](const char * name, const std::array<double, 6> & p, const LossBreakdown & l) {
    os << name;
    params_cells(os, p);
    os << '\t' << format_double(l.total) << '\t' << format_double(l.rep) << '\t' << format_double(l.mlp)
       << '\t' << format_double(l.ray) << "\n";
  };
  line("initial", parameter_row(r.initial), r.initial_loss);
  line("final", r.table_row(), r.final_loss);
  os << "# iterations: " << r.iterations << (r.plateau_stop ? " (plateau)" : "") << "\n";
  if (r.final_euler.gimbal_lock) os << "# warning: final rotation is at gimbal lock\n";
}

void write_monte_carlo(std::ostream & os, const MonteCarloResult & m, const CalibConfig & c,
                       std::uint64_t mc_seed, double frac)
{
  header(os, c, "monte-carlo");
  os << "# monte_carlo_seed: " << mc_seed << "\n# frac: " << format_double(frac) << "\n# runs: "
     << m.runs.size() << " completed: " << m.completed << "\n";
  os << "run\tstatus\tobservations";
  params_header(os);
  os << "\n";
  for (const MonteCarloRun & r : m.runs) {
    os << r.index << '\t' << (r.skipped ? "skipped:" + r.reason : std::string("ok")) << '\t' << r.observations;
    params_cells(os, r.parameters);
    os << "\n";
  }
  os << "# quantiles\nparameter\tmin\tq1\tmedian\tq3\tmax\tiqr\n";
  for (std::size_t p = 0; p < 6; ++p) {
    const Quantiles & q = m.quantiles[p];
    os << kParameterNames[p] << '\t' << format_double(q.min) << '\t' << format_double(q.q1) << '\t'
       << format_double(q.median) << '\t' << format_double(q.q3) << '\t' << format_double(q.max) << '\t'
       << format_double(q.iqr()) << "\n";
  }
}

void write_boundary(std::ostream & os, const BoundaryReport & b, const CalibConfig & c)
{
  header(os, c, "boundary");
  os << "# target_radius: " << format_double(c.target.radius) << "\n# violation_fraction: "
     << format_double(b.violation_fraction) << "\n# inside_sphere: " << b.flagged << "\n";
  os << "frame\ttarget\trho_m\televation_deg\tbound_deg\tviolation\tinside_sphere\n";
  for (const BoundaryRecord & r : b.records) {
    os << r.frame << '\t' << r.target << '\t' << format_double(r.rho) << '\t'
       << format_double(rad2deg(r.elevation)) << '\t' << format_double(rad2deg(r.bound)) << '\t'
       << (r.violation ? 1 : 0) << '\t' << (r.inside_sphere ? 1 : 0) << "\n";
  }
}

void write_reprojection(std::ostream & os, const ReprojectionReport & r, const CalibConfig & c)
{
  header(os, c, "reprojection");
  os << "# mean_range_error_m: " << format_double(r.mean_range_error())
     << "\n# mean_azimuth_error_rad: " << format_double(r.mean_azimuth_error()) << "\n";
  histogram_table(os, "range_error_m", r.range_histogram);
  histogram_table(os, "azimuth_error_deg", r.azimuth_histogram);
  os << "# samples\nobservation\trange_error_m\tazimuth_error_rad\n";
  for (std::size_t i = 0; i < r.range_errors.size(); ++i) {
    os << i << '\t' << format_double(r.range_errors[i]) << '\t' << format_double(r.azimuth_errors[i]) << "\n";
  }
}

void write_regression(std::ostream & os, const RegressionReport & r, const CalibConfig & c)
{
  header(os, c, "regression");
  os << "# positional_encoding: " << (r.pe_enabled ? "on" : "off") << "\n# mean_abs_error: "
     << format_double(r.mean_error()) << "\n";
  histogram_table(os, "abs_energy_error", r.histogram);
  os << "# samples\nsample\tabs_error\n";
  for (std::size_t i = 0; i < r.errors.size(); ++i) os << i << '\t' << format_double(r.errors[i]) << "\n";
}

}  // namespace rlcalib
