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

#include <cstdint>
#include <string>
#include <vector>

#include "rlcalib/dataset.hpp"
#include "rlcalib/geometry.hpp"

namespace rlcalib
{

/// Return energy as a Gaussian bump around the sensor->center ray:
/// peak * exp(-da^2 / 2 sa^2) * exp(-dr^2 / 2 sr^2), plus Gaussian noise.
struct EnergyModel
{
  double peak = 1.0;
  double sigma_angle = deg2rad(1.0);  // radians
  double sigma_range = 0.15;          // meters
  double noise = 0.01;
};

struct RadarGrid
{
  double range_bin = 0.044;             // meters
  double azimuth_bin = deg2rad(0.9);    // radians
  double min_range = 1.0;
  double max_range = 40.0;
};

struct SceneSpec
{
  Extrinsics true_extrinsics;            // radar <- lidar
  std::vector<Pose> target_poses;        // world <- target
  std::vector<Pose> lidar_poses;         // world <- lidar, one per frame
  EnergyModel energy;
  RadarGrid grid;
  double sampling_radius = 0.6;
  int samples_per_target = 24;           // grid cells kept per detection
  double lidar_noise = 0.005;            // per-axis sigma on LIDAR centers
  double target_radius = 0.3;            // a target is seen when the beam passes this close
  bool quantize = true;                  // snap detections to the polar grid
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticDataset
{
  CalibDataset data;  // carries the truth in data.ground_truth
  Extrinsics truth;
  std::vector<std::string> warnings;
};

/// Noise-free energy of a ray (unit direction, radar frame) at range
/// `sample_range` for a target centered at `center`.
double model_energy(const EnergyModel & m, const Vec3 & ray_direction, double sample_range,
                    const Vec3 & center);

SyntheticDataset generate(const SceneSpec & spec);

/// Rotation of exactly `rot_deg` about a random axis composed on the left,
/// plus a random translation offset of norm `trans_m`.
Extrinsics perturb(const Extrinsics & e, double rot_deg, double trans_m, std::uint64_t seed);

/// Options for the default desk-scale layout.
struct SceneLayout
{
  int frames = 30;
  int targets = 3;
  double circle_radius = 6.0;
  double terrain_tilt_deg = 1.0;   // max robot roll/pitch
  double target_tilt_deg = 180.0;  // max target roll/pitch; 180 gives arbitrary orientations
  double target_height_spread = 0.12;
};

/// Targets near the origin and the robot driving a circle around them, with
/// ground-truth extrinsics of a RADAR on a ~3 degree wedge.
SceneSpec default_scene(std::uint64_t seed, const SceneLayout & layout = {});

/// Ground truth used by default_scene.
Extrinsics default_true_extrinsics();

}  // namespace rlcalib
