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

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rlcalib/autodiff.hpp"
#include "rlcalib/config.hpp"
#include "rlcalib/dataset.hpp"
#include "rlcalib/losses.hpp"
#include "rlcalib/model.hpp"

namespace rlcalib
{

struct AdamOptions
{
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// A named block of optimized values. `group` selects the learning rate.
struct Parameter
{
  std::string name;
  std::string group;
  ad::Matrix value;
};

/// Bias-corrected Adam with one learning rate per parameter group.
class Adam
{
public:
  Adam(std::map<std::string, double> group_lr, AdamOptions options = {});

  /// Update `params` in place. Throws PoisonedValue naming the parameter if a
  /// gradient holds NaN/Inf; parameters and state are untouched in that case.
  void step(std::vector<Parameter> & params, const std::vector<ad::Matrix> & grads);

  long step_count() const { return t_; }
  const std::vector<ad::Matrix> & first_moment() const { return m_; }
  const std::vector<ad::Matrix> & second_moment() const { return v_; }
  double learning_rate(const std::string & group) const;

private:
  std::map<std::string, double> lr_;
  AdamOptions opt_;
  std::vector<ad::Matrix> m_;
  std::vector<ad::Matrix> v_;
  long t_ = 0;
};

/// One row of the optimization log; losses are evaluated at the parameters
/// the step started from.
struct StepRecord
{
  int step = 0;
  LossBreakdown loss;
  Vec3 euler_deg = Vec3::Zero();
  Vec3 translation = Vec3::Zero();
};

struct CalibrationResult
{
  Extrinsics initial;
  Extrinsics final_extrinsics;
  EulerAngles final_euler;
  LossBreakdown initial_loss;
  LossBreakdown final_loss;
  std::vector<StepRecord> history;
  std::optional<MlpWeights> mlp;
  int iterations = 0;
  bool plateau_stop = false;

  /// (theta_x, theta_y, theta_z) in degrees followed by (t_x, t_y, t_z) in meters.
  std::array<double, 6> table_row() const;
};

/// Raised when the loss or a gradient stops being finite. Carries the last
/// state whose loss was finite.
class DivergenceError : public Error
{
public:
  DivergenceError(const std::string & what, int step, Extrinsics last)
  : Error(ErrorKind::Divergence, what), step_(step), last_(last)
  {
  }
  int step() const { return step_; }
  const Extrinsics & last_finite() const { return last_; }

private:
  int step_;
  Extrinsics last_;
};

using StepCallback = std::function<void(const StepRecord &)>;

/// Full-batch joint optimization of the extrinsics and (when the regression
/// term is on) the network, starting from `config.initial`. The returned
/// state is the iterate with the lowest total loss.
CalibrationResult run_calibration(const CalibDataset & dataset, const CalibConfig & config,
                                  const StepCallback & on_step = {});

/// Six-parameter row for an extrinsics value, same layout as table_row().
std::array<double, 6> parameter_row(const Extrinsics & e);

struct FitResult
{
  MlpWeights weights;
  double final_loss = 0.0;
};

/// Regress the network alone on fixed target-local samples (Adam, full batch,
/// mean absolute error).
FitResult fit_mlp(const std::vector<TargetLocalSample> & samples, const PositionalEncoding & enc,
                  int steps, double lr, std::uint64_t seed);

}  // namespace rlcalib
