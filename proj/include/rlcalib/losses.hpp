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

#include <memory>
#include <span>
#include <vector>

#include "rlcalib/autodiff.hpp"
#include "rlcalib/dataset.hpp"
#include "rlcalib/geometry.hpp"
#include "rlcalib/model.hpp"

namespace rlcalib
{

/// Outer weights of the total objective plus the inner range/azimuth weights
/// of the reprojection term.
struct LossWeights
{
  double rep = 1000.0;
  double mlp = 1000.0;
  double ray = 100.0;
  double range = 1.0;
  double azimuth = 1.0;

  void validate() const;
};

struct TargetGeometry
{
  double radius = 0.3;  // circumscribed sphere of the reflector, meters
};

/// RADAR sample -> target frame through target <- world <- lidar <- radar.
/// The radar <- lidar extrinsics are inverted along the way; the direction
/// is rotated only.
TargetLocalSample to_target_frame(const Extrinsics & extrinsics, const Pose & lidar_pose,
                                  const Pose & target_pose, const RadarSample & sample);

/// Weighted L1 between the RADAR detection and the LIDAR center projected into
/// the RADAR frame, azimuth difference wrapped into (-pi, pi].
double reprojection_loss(const Extrinsics & extrinsics, const LidarTargetObservation & obs,
                         double w_range, double w_azimuth);

/// Mean absolute energy error over the batch.
double regression_loss(const MlpWeights & weights, std::span<const TargetLocalSample> samples);

/// Distance from the target origin to the sample's ray (a half-line from the
/// RADAR origin), both expressed in the target frame.
double ray_distance(const Extrinsics & extrinsics, const Pose & lidar_pose, const Pose & target_pose,
                    const RadarSample & ray);

/// max(0, d - r).
double ray_pass_loss(const Extrinsics & extrinsics, const Pose & lidar_pose, const Pose & target_pose,
                     const RadarSample & ray, const TargetGeometry & geom);

/// The ray through an observation's RADAR detection.
RadarSample detection_ray(const LidarTargetObservation & obs);

struct LossBreakdown
{
  double total = 0.0;
  double rep = 0.0;
  double mlp = 0.0;
  double ray = 0.0;
};

/// Combine already evaluated terms with the outer weights, in the same order
/// and with the same zero-weight skipping as the batched evaluation.
LossBreakdown weighted_sum(const LossWeights & w, double rep, double mlp, double ray);

/// Differentiable rotation matrix of a 1x3 rotation vector.
ad::Var exp_so3(const ad::Var & w);

/// Constant arrays of a dataset laid out for batched evaluation on a tape.
/// Observations feed the reprojection and ray-pass terms (one detection ray
/// each); samples within `sampling_radius` of their frame's detection feed the
/// regression term.
class LossProblem
{
public:
  LossProblem(const CalibDataset & dataset, double sampling_radius);

  struct Terms
  {
    ad::Var total;
    ad::Var rep;  // unweighted; invalid when the term is disabled
    ad::Var mlp;
    ad::Var ray;
  };

  /// `rotation` and `translation` are 1x3; `mlp` may be null when the
  /// regression term is disabled.
  Terms evaluate(const ad::Var & rotation, const ad::Var & translation, const MlpVars * mlp,
                 const MlpWeights * shape, const LossWeights & weights, const TargetGeometry & geom) const;

  /// Sample positions and directions in target frames for given extrinsics.
  void target_local_samples(const Extrinsics & extrinsics, ad::Matrix & positions,
                            ad::Matrix & directions) const;

  std::size_t observation_count() const { return static_cast<std::size_t>(obs_centers_.rows()); }
  std::size_t sample_count() const { return static_cast<std::size_t>(sample_positions_.rows()); }
  const Eigen::VectorXd & sample_energies() const { return sample_energies_; }

private:
  ad::Var chain_points(ad::Tape & tape, const ad::Matrix & points, const ad::Var & rot,
                       const ad::Var & trans, const std::shared_ptr<const std::vector<Mat3>> & mats,
                       const ad::Matrix & offsets) const;
  ad::Var chain_directions(ad::Tape & tape, const ad::Matrix & dirs, const ad::Var & rot,
                           const std::shared_ptr<const std::vector<Mat3>> & mats) const;

  // observations
  ad::Matrix obs_centers_;     // lidar frame, Nx3
  ad::Matrix obs_range_;       // Nx1
  ad::Matrix obs_azimuth_;     // Nx1
  ad::Matrix ray_dirs_;        // radar frame, Nx3
  std::shared_ptr<const std::vector<Mat3>> obs_rot_;  // target <- lidar rotation
  ad::Matrix obs_offset_;      // target <- lidar translation, Nx3
  // samples
  ad::Matrix sample_positions_;
  ad::Matrix sample_dirs_;
  Eigen::VectorXd sample_energies_;
  std::shared_ptr<const std::vector<Mat3>> sample_rot_;
  ad::Matrix sample_offset_;
};

/// Weighted sum of the three terms; terms with zero weight are skipped and
/// reported as 0.
LossBreakdown total_loss(const Extrinsics & extrinsics, const MlpWeights * weights,
                         const CalibDataset & dataset, const LossWeights & w,
                         const TargetGeometry & geom, double sampling_radius = 0.6);

}  // namespace rlcalib
