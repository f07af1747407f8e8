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

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rlcalib/config.hpp"
#include "rlcalib/dataset.hpp"
#include "rlcalib/optimizer.hpp"

namespace rlcalib
{

/// Names of the six reported parameters, in table order.
extern const std::array<const char *, 6> kParameterNames;

// ---------------------------------------------------------------- ablation

struct AblationRow
{
  std::string name;
  std::array<double, 6> parameters{};
  double initial_total = 0.0;  // loss of the run's own objective at the init
  double final_total = 0.0;
  int iterations = 0;
};

struct AblationTable
{
  std::vector<AblationRow> rows;  // initial, rep, mlp, mlp+ray, rep+ray
};

/// The four objective variants derived from a base config's weights.
std::vector<std::pair<std::string, CalibConfig>> ablation_configs(const CalibConfig & base);

AblationTable run_ablation(const CalibDataset & dataset, const CalibConfig & base);

// ------------------------------------------------------------- monte carlo

struct MonteCarloRun
{
  int index = 0;
  bool skipped = false;
  std::string reason;
  std::size_t observations = 0;
  std::array<double, 6> parameters{};
};

/// Five-number summary of one parameter over the completed runs.
struct Quantiles
{
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;

  double iqr() const { return q3 - q1; }
};

struct MonteCarloResult
{
  std::vector<MonteCarloRun> runs;
  std::array<Quantiles, 6> quantiles{};
  std::size_t completed = 0;
};

/// Keep `count` observations drawn without replacement; frames keep their
/// poses and the samples of targets still observed in them.
CalibDataset subsample(const CalibDataset & dataset, std::size_t count, std::uint64_t seed);

MonteCarloResult monte_carlo(const CalibDataset & dataset, const CalibConfig & config, int runs = 100,
                             double frac = 0.5, std::uint64_t seed = 0);

/// Linear-interpolated quantile of unsorted values, p in [0, 1].
double quantile(std::vector<double> values, double p);

// ---------------------------------------------------------------- boundary

struct BoundaryRecord
{
  int frame = 0;
  int target = 0;
  double rho = 0.0;        // meters
  double elevation = 0.0;  // radians
  double bound = 0.0;      // asin(r / rho), radians
  bool violation = false;
  bool inside_sphere = false;  // rho <= r, bound undefined
};

struct BoundaryReport
{
  std::vector<BoundaryRecord> records;
  double violation_fraction = 0.0;
  std::size_t flagged = 0;
};

BoundaryReport boundary_check(const Extrinsics & extrinsics, const CalibDataset & dataset,
                              const TargetGeometry & geom);

// --------------------------------------------------------------- histograms

/// Fixed-width bins starting at zero, as many as the largest value needs.
struct Histogram
{
  double bin_width = 0.0;
  std::vector<std::size_t> counts;

  static Histogram build(const std::vector<double> & values, double bin_width);
  std::size_t total() const;
};

constexpr double kRangeBin = 0.02;     // meters
constexpr double kAzimuthBinDeg = 0.2; // degrees
constexpr double kEnergyBin = 0.02;

struct ReprojectionReport
{
  std::vector<double> range_errors;    // meters
  std::vector<double> azimuth_errors;  // radians, wrapped
  Histogram range_histogram;
  Histogram azimuth_histogram;         // degrees

  double mean_range_error() const;
  double mean_azimuth_error() const;
};

ReprojectionReport reprojection_histogram(const Extrinsics & extrinsics, const CalibDataset & dataset);

struct RegressionReport
{
  bool pe_enabled = true;
  std::vector<double> errors;  // |predicted - measured| per sample
  Histogram histogram;

  double mean_error() const;
};

RegressionReport regression_error_report(const MlpWeights & weights,
                                         const std::vector<TargetLocalSample> & samples);

struct EncodingComparison
{
  RegressionReport with_pe;
  RegressionReport without_pe;
};

/// Train PE-on and PE-off networks with the same seed, step budget and rate
/// on `train`, then report errors on `eval`.
EncodingComparison compare_positional_encoding(const std::vector<TargetLocalSample> & train,
                                               const std::vector<TargetLocalSample> & eval,
                                               int depth, int steps, double lr, std::uint64_t seed);

/// Regression samples of a dataset in target frames under given extrinsics.
std::vector<TargetLocalSample> target_samples(const CalibDataset & dataset, const Extrinsics & extrinsics,
                                              double sampling_radius);

// ------------------------------------------------------------------ reports

/// Each writer starts with "# config: <json>" and "# seed: <n>" lines and
/// then a tab-separated table with a header row.
void write_ablation(std::ostream & os, const AblationTable & t, const CalibConfig & c);
void write_history(std::ostream & os, const CalibrationResult & r, const CalibConfig & c);
void write_calibration(std::ostream & os, const CalibrationResult & r, const CalibConfig & c);
void write_monte_carlo(std::ostream & os, const MonteCarloResult & m, const CalibConfig & c,
                       std::uint64_t mc_seed, double frac);
void write_boundary(std::ostream & os, const BoundaryReport & b, const CalibConfig & c);
void write_reprojection(std::ostream & os, const ReprojectionReport & r, const CalibConfig & c);
void write_regression(std::ostream & os, const RegressionReport & r, const CalibConfig & c);

/// Shortest round-trip decimal text of a double.
std::string format_double(double v);

}  // namespace rlcalib
