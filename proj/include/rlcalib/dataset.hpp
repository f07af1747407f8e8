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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rlcalib/geometry.hpp"

namespace rlcalib
{

/// One raw RADAR return in the RADAR frame.
struct RadarSample
{
  int target_id = 0;
  Vec3 position = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();  // unit ray from the sensor origin
  double energy = 0.0;             // normalized to [0, 1]
};

/// A target center seen by the LIDAR, paired with the RADAR detection of the
/// same target in the same frame.
struct LidarTargetObservation
{
  int target_id = 0;
  Vec3 lidar_center = Vec3::Zero();
  double radar_range = 0.0;    // meters
  double radar_azimuth = 0.0;  // radians
};

struct FramePoseSet
{
  Pose lidar_pose;                   // world <- lidar
  std::map<int, Pose> target_poses;  // world <- target
};

struct Frame
{
  int id = 0;
  FramePoseSet poses;
  std::vector<LidarTargetObservation> observations;
  std::vector<RadarSample> samples;
};

struct CalibDataset
{
  std::vector<Frame> frames;
  /// Present for simulator output; ignored by calibration.
  std::optional<Extrinsics> ground_truth;

  std::size_t observation_count() const;
  std::size_t sample_count() const;
};

/// Throws an Error whose kind names the violated invariant and whose message
/// names the offending record (frame index, record kind and index).
void validate(const CalibDataset & d);

std::string dataset_to_string(const CalibDataset & d);
CalibDataset dataset_from_string(const std::string & text);

void save_dataset(const CalibDataset & d, const std::string & path);
CalibDataset load_dataset(const std::string & path);

bool operator==(const RigidTransform & a, const RigidTransform & b);
bool operator==(const CalibDataset & a, const CalibDataset & b);

}  // namespace rlcalib
