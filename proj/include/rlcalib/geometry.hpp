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

#include <Eigen/Core>

#include "rlcalib/error.hpp"

namespace rlcalib
{

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rotation vector (unit axis scaled by the angle in radians). The stored
/// vector is always the canonical representative with norm <= pi.
class AxisAngle
{
public:
  AxisAngle() : w_(Vec3::Zero()) {}
  explicit AxisAngle(const Vec3 & w);
  AxisAngle(double x, double y, double z) : AxisAngle(Vec3(x, y, z)) {}

  const Vec3 & vector() const { return w_; }
  double angle() const { return w_.norm(); }

private:
  Vec3 w_;
};

/// Rotation + translation acting as x -> R(w) x + t.
struct RigidTransform
{
  AxisAngle rotation;
  Vec3 translation = Vec3::Zero();

  Mat3 rotation_matrix() const;
};

/// General SE(3) element used for frame chains (world<-lidar, world<-target).
struct Pose : RigidTransform
{
  Pose() = default;
  Pose(const AxisAngle & r, const Vec3 & t) : RigidTransform{r, t} {}
  static Pose identity() { return {}; }
};

/// The calibrated transform. Maps a point in the LIDAR frame into the RADAR
/// frame: x_radar = R(w) x_lidar + t.
struct Extrinsics : RigidTransform
{
  Extrinsics() = default;
  Extrinsics(const AxisAngle & r, const Vec3 & t) : RigidTransform{r, t} {}
  static Extrinsics identity() { return {}; }
  Pose as_pose() const { return {rotation, translation}; }
};

/// Intrinsic X-then-Y-then-Z Euler angles in degrees: R = Rx(x) Ry(y) Rz(z).
struct EulerAngles
{
  Vec3 degrees = Vec3::Zero();
  bool gimbal_lock = false;
};

struct SphericalPoint
{
  double range = 0.0;
  double azimuth = 0.0;    // atan2(y, x), radians
  double elevation = 0.0;  // asin(z / range), radians
};

Mat3 hat(const Vec3 & w);
Vec3 vee(const Mat3 & m);

Mat3 exp_so3(const AxisAngle & w);
Mat3 exp_so3(const Vec3 & w);

/// Partial derivatives dR/dw_k of the Rodrigues map, k = 0, 1, 2.
std::array<Mat3, 3> exp_so3_derivatives(const Vec3 & w);

AxisAngle log_so3(const Mat3 & r);

/// Largest absolute entry of R^T R - I.
double orthonormality_error(const Mat3 & r);

EulerAngles to_euler(const AxisAngle & w);
AxisAngle from_euler(const EulerAngles & e);

Vec3 transform_point(const RigidTransform & t, const Vec3 & x);
Vec3 rotate(const RigidTransform & t, const Vec3 & v);

Pose compose(const RigidTransform & a, const RigidTransform & b);
Pose invert(const RigidTransform & a);

SphericalPoint to_spherical(const Vec3 & x);

/// Wrap an angle into (-pi, pi].
double wrap_angle(double a);

/// Geodesic angle between two rotations, radians.
double rotation_distance(const Mat3 & a, const Mat3 & b);

constexpr double kPi = 3.14159265358979323846;
constexpr double deg2rad(double d) { return d * kPi / 180.0; }
constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

}  // namespace rlcalib
