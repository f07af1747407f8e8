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

#include "rlcalib/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Geometry>

namespace rlcalib
{

void SceneSpec::validate() const
{
  auto positive = [](const char * what, double v) {
    if (!(v > 0.0)) throw Error(ErrorKind::InvalidArgument, std::string("scene: ") + what + " must be positive");
  };
  positive("sigma_angle", energy.sigma_angle);
  positive("sigma_range", energy.sigma_range);
  positive("range_bin", grid.range_bin);
  positive("azimuth_bin", grid.azimuth_bin);
  positive("sampling_radius", sampling_radius);
  positive("target_radius", target_radius);
  if (energy.noise < 0.0 || lidar_noise < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "scene: noise levels must be non-negative");
  }
  if (target_poses.empty()) throw Error(ErrorKind::InvalidArgument, "scene: needs at least one target");
  if (lidar_poses.size() < 3) throw Error(ErrorKind::InvalidArgument, "scene: needs at least three frames");
  if (samples_per_target < 1) throw Error(ErrorKind::InvalidArgument, "scene: samples_per_target must be >= 1");
}

double model_energy(const EnergyModel & m, const Vec3 & ray_direction, double sample_range,
                    const Vec3 & center)
{
  const double cn = center.norm();
  const Vec3 u = ray_direction.normalized();
  const double da = std::atan2(u.cross(center).norm(), u.dot(center));
  const double dr = sample_range - cn;
  return m.peak * std::exp(-da * da / (2.0 * m.sigma_angle * m.sigma_angle)) *
         std::exp(-dr * dr / (2.0 * m.sigma_range * m.sigma_range));
}

namespace
{

Vec3 planar(double azimuth) { return Vec3(std::cos(azimuth), std::sin(azimuth), 0.0); }

Vec3 random_unit(std::mt19937_64 & rng)
{
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-9);
  return v.normalized();
}

}  // namespace

SyntheticDataset generate(const SceneSpec & spec)
{
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> unit(0.0, 1.0);

  SyntheticDataset out;
  out.truth = spec.true_extrinsics;
  out.data.ground_truth = spec.true_extrinsics;
  const double rb = spec.grid.range_bin;
  const double ab = spec.grid.azimuth_bin;
  std::vector<int> seen(spec.target_poses.size(), 0);

  for (std::size_t fi = 0; fi < spec.lidar_poses.size(); ++fi) {
    const Pose & world_lidar = spec.lidar_poses[fi];
    const Pose lidar_world = invert(world_lidar);
    Frame frame;
    frame.id = static_cast<int>(fi);
    frame.poses.lidar_pose = world_lidar;
    for (std::size_t k = 0; k < spec.target_poses.size(); ++k) {
      frame.poses.target_poses.emplace(static_cast<int>(k), spec.target_poses[k]);
    }

    for (std::size_t k = 0; k < spec.target_poses.size(); ++k) {
      const int tid = static_cast<int>(k);
      const Vec3 center_l = transform_point(lidar_world, spec.target_poses[k].translation);
      const Vec3 center_r = transform_point(spec.true_extrinsics, center_l);
      const SphericalPoint sp = to_spherical(center_r);
      if (sp.range < spec.grid.min_range || sp.range > spec.grid.max_range) continue;

      double det_range = sp.range;
      double det_az = sp.azimuth;
      if (spec.quantize) {
        det_range = std::round(sp.range / rb) * rb;
        det_az = wrap_angle(std::round(sp.azimuth / ab) * ab);
      }
      // The planar beam must pass through the target's circumscribed sphere.
      const Vec3 u = planar(det_az);
      const double along = center_r.dot(u);
      if (along <= 0.0 || (center_r - along * u).norm() >= spec.target_radius) continue;
      ++seen[k];

      LidarTargetObservation obs;
      obs.target_id = tid;
      obs.lidar_center = center_l + spec.lidar_noise * Vec3(unit(rng), unit(rng), unit(rng));
      obs.radar_range = det_range;
      obs.radar_azimuth = det_az;
      frame.observations.push_back(obs);

      // Polar grid cells within the sampling radius of both the detection and
      // the true center.
      const Vec3 det = det_range * u;
      const double span_r = spec.sampling_radius;
      const double span_a = std::asin(std::min(1.0, spec.sampling_radius / det_range));
      const long r_lo = static_cast<long>(std::ceil((det_range - span_r) / rb));
      const long r_hi = static_cast<long>(std::floor((det_range + span_r) / rb));
      const long a_lo = static_cast<long>(std::ceil((det_az - span_a) / ab));
      const long a_hi = static_cast<long>(std::floor((det_az + span_a) / ab));
      struct Cell { double range; double azimuth; };
      std::vector<Cell> cells;
      Cell centre{det_range, det_az};
      for (long ir = std::max(1L, r_lo); ir <= r_hi; ++ir) {
        for (long ia = a_lo; ia <= a_hi; ++ia) {
          const Cell c{static_cast<double>(ir) * rb, wrap_angle(static_cast<double>(ia) * ab)};
          const Vec3 at = c.range * planar(c.azimuth);
          if ((at - det).norm() > spec.sampling_radius || (at - center_r).norm() > spec.sampling_radius) continue;
          if (std::abs(c.range - centre.range) < 1e-12 && std::abs(wrap_angle(c.azimuth - centre.azimuth)) < 1e-12) continue;
          cells.push_back(c);
        }
      }
      std::shuffle(cells.begin(), cells.end(), rng);
      if (static_cast<int>(cells.size()) > spec.samples_per_target - 1) {
        cells.resize(static_cast<std::size_t>(spec.samples_per_target - 1));
      }
      cells.insert(cells.begin(), centre);
      for (const Cell & c : cells) {
        RadarSample s;
        s.target_id = tid;
        s.direction = planar(c.azimuth);
        s.position = c.range * s.direction;
        const double e = model_energy(spec.energy, s.direction, c.range, center_r) +
                         spec.energy.noise * unit(rng);
        s.energy = std::clamp(e, 0.0, 1.0);
        frame.samples.push_back(s);
      }
    }
    out.data.frames.push_back(std::move(frame));
  }

  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (seen[k] == 0) {
      out.warnings.push_back("target " + std::to_string(k) +
                             " never falls inside the RADAR vertical field of view; its elevation is unobservable");
    }
  }
  return out;
}

Extrinsics perturb(const Extrinsics & e, double rot_deg, double trans_m, std::uint64_t seed)
{
  if (rot_deg < 0.0 || trans_m < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "perturb: magnitudes must be non-negative");
  }
  std::mt19937_64 rng(seed);
  const Vec3 axis = random_unit(rng);
  const Vec3 shift = random_unit(rng);
  if (rot_deg == 0.0 && trans_m == 0.0) return e;
  const Mat3 r = exp_so3(Vec3(axis * deg2rad(rot_deg))) * e.rotation_matrix();
  return Extrinsics(log_so3(r), e.translation + trans_m * shift);
}

Extrinsics default_true_extrinsics()
{
  return Extrinsics(from_euler(EulerAngles{Vec3(0.4, 3.0, 1.0), false}), Vec3(0.56, -0.26, -0.02));
}

SceneSpec default_scene(std::uint64_t seed, const SceneLayout & layout)
{
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto sym = [&](double a) { return a * (2.0 * u01(rng) - 1.0); };

  SceneSpec spec;
  spec.seed = seed;
  spec.true_extrinsics = default_true_extrinsics();

  const double lidar_height = 1.0;
  // Height of the RADAR origin when the robot stands level.
  const double radar_height = lidar_height + transform_point(invert(spec.true_extrinsics), Vec3::Zero()).z();

  const std::vector<Vec3> anchors{Vec3(0.0, 0.0, 0.0), Vec3(2.5, 1.0, 0.0), Vec3(-1.0, 2.6, 0.0),
                                  Vec3(1.2, -2.2, 0.0), Vec3(-2.4, -0.8, 0.0)};
  Vec3 centroid = Vec3::Zero();
  for (int k = 0; k < layout.targets; ++k) {
    const Vec3 & a = anchors[static_cast<std::size_t>(k) % anchors.size()];
    Vec3 p = a + Vec3(sym(0.3), sym(0.3), 0.0);
    p.z() = radar_height + sym(layout.target_height_spread);
    const Vec3 tilt(sym(deg2rad(layout.target_tilt_deg)), sym(deg2rad(layout.target_tilt_deg)), 0.0);
    const Mat3 r = exp_so3(Vec3(0, 0, sym(kPi))) * exp_so3(tilt);
    spec.target_poses.emplace_back(log_so3(r), p);
    centroid += p;
  }
  centroid /= static_cast<double>(layout.targets);

  for (int f = 0; f < layout.frames; ++f) {
    const double phi = 2.0 * kPi * (static_cast<double>(f) + 0.5 * u01(rng)) / layout.frames;
    const double rad = layout.circle_radius + sym(1.0);
    const Vec3 pos(centroid.x() + rad * std::cos(phi), centroid.y() + rad * std::sin(phi), lidar_height);
    const double yaw = sym(kPi);
    const Vec3 tilt(sym(deg2rad(layout.terrain_tilt_deg)), sym(deg2rad(layout.terrain_tilt_deg)), 0.0);
    const Mat3 r = exp_so3(Vec3(0, 0, yaw)) * exp_so3(tilt);
    spec.lidar_poses.emplace_back(log_so3(r), pos);
  }
  return spec;
}

}  // namespace rlcalib
