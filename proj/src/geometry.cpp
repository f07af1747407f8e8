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

#include "rlcalib/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

namespace rlcalib
{

const char * to_string(ErrorKind kind)
{
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::DegeneratePoint: return "degenerate-point";
    case ErrorKind::PoisonedValue: return "poisoned-value";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::Config: return "config";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::EmptyDataset: return "empty-dataset";
    case ErrorKind::NonUnitDirection: return "non-unit-direction";
    case ErrorKind::EnergyOutOfRange: return "energy-out-of-range";
    case ErrorKind::DanglingTarget: return "dangling-target";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

namespace
{

constexpr double kSmallAngle = 1e-8;
constexpr double kSeriesAngle = 1e-2;

void require_finite(const Vec3 & w, const char * where)
{
  if (!w.allFinite()) {
    throw Error(ErrorKind::InvalidArgument, std::string(where) + ": non-finite input");
  }
}

// sin(t)/t and (1 - cos t)/t^2
void rodrigues_coefficients(double theta, double & a, double & b)
{
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
    return;
  }
  const double s = std::sin(0.5 * theta);
  a = std::sin(theta) / theta;
  b = 2.0 * s * s / (theta * theta);
}

}  // namespace

AxisAngle::AxisAngle(const Vec3 & w)
{
  require_finite(w, "AxisAngle");
  const double theta = w.norm();
  if (theta <= kPi) {
    w_ = w;
    return;
  }
  // Same rotation, angle reduced into (-pi, pi] about the same axis.
  const double reduced = std::remainder(theta, 2.0 * kPi);
  w_ = w * (reduced / theta);
}

Mat3 RigidTransform::rotation_matrix() const { return exp_so3(rotation); }

Mat3 hat(const Vec3 & w)
{
  Mat3 k;
  k << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return k;
}

Vec3 vee(const Mat3 & m) { return Vec3(m(2, 1), m(0, 2), m(1, 0)); }

Mat3 exp_so3(const AxisAngle & w) { return exp_so3(w.vector()); }

Mat3 exp_so3(const Vec3 & w)
{
  require_finite(w, "exp_so3");
  double a = 0.0;
  double b = 0.0;
  rodrigues_coefficients(w.norm(), a, b);
  const Mat3 k = hat(w);
  return Mat3::Identity() + a * k + b * (k * k);
}

std::array<Mat3, 3> exp_so3_derivatives(const Vec3 & w)
{
  require_finite(w, "exp_so3_derivatives");
  const double theta = w.norm();
  double a = 0.0;
  double b = 0.0;
  rodrigues_coefficients(theta, a, b);

  // a1 = A'(t)/t, b1 = B'(t)/t
  double a1 = 0.0;
  double b1 = 0.0;
  if (theta < kSeriesAngle) {
    const double t2 = theta * theta;
    a1 = -1.0 / 3.0 + t2 / 30.0 - t2 * t2 / 840.0;
    b1 = -1.0 / 12.0 + t2 / 180.0 - t2 * t2 / 6720.0;
  } else {
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    const double t2 = theta * theta;
    a1 = (theta * c - s) / (t2 * theta);
    b1 = (theta * s - 2.0 * (1.0 - c)) / (t2 * t2);
  }

  const Mat3 k = hat(w);
  const Mat3 k2 = k * k;
  std::array<Mat3, 3> out;
  for (int i = 0; i < 3; ++i) {
    const Mat3 e = hat(Vec3::Unit(i));
    out[i] = (a1 * w[i]) * k + a * e + (b1 * w[i]) * k2 + b * (e * k + k * e);
  }
  return out;
}

double orthonormality_error(const Mat3 & r)
{
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

AxisAngle log_so3(const Mat3 & r)
{
  if (!r.allFinite() || orthonormality_error(r) > 1e-6 || r.determinant() <= 0.0) {
    throw Error(ErrorKind::InvalidArgument, "log_so3: matrix is not a rotation");
  }
  const Vec3 v = 0.5 * vee(r - r.transpose());  // sin(theta) * axis
  const double s = v.norm();
  const double c = 0.5 * (r.trace() - 1.0);
  const double theta = std::atan2(s, c);

  if (theta < kSmallAngle) {
    return AxisAngle(v * (1.0 + theta * theta / 6.0));
  }
  if (theta < 2.5) {
    return AxisAngle(v * (theta / s));
  }
  // Towards pi the antisymmetric part vanishes; recover the axis from the
  // symmetric part, (R + R^T)/2 = c I + (1 - c) n n^T.
  const Mat3 nn = (0.5 * (r + r.transpose()) - c * Mat3::Identity()) / (1.0 - c);
  int k = 0;
  nn.diagonal().maxCoeff(&k);
  Vec3 n = nn.col(k) / std::sqrt(nn(k, k));
  n.normalize();
  if (n.dot(v) < 0.0) {
    n = -n;
  }
  return AxisAngle(n * theta);
}

EulerAngles to_euler(const AxisAngle & w)
{
  const Mat3 r = exp_so3(w);
  EulerAngles e;
  const double ty = std::atan2(r(0, 2), std::hypot(r(0, 0), r(0, 1)));
  double tx = 0.0;
  double tz = 0.0;
  if (std::abs(std::abs(rad2deg(ty)) - 90.0) < 1e-6) {
    e.gimbal_lock = true;
    tx = std::atan2(r(2, 1), r(1, 1));
  } else {
    tx = std::atan2(-r(1, 2), r(2, 2));
    tz = std::atan2(-r(0, 1), r(0, 0));
  }
  auto to_deg = [](double a) {
    const double d = rad2deg(a);
    return d <= -180.0 ? d + 360.0 : d;
  };
  e.degrees = Vec3(to_deg(tx), to_deg(ty), to_deg(tz));
  return e;
}

AxisAngle from_euler(const EulerAngles & e)
{
  const Vec3 rad = e.degrees * (kPi / 180.0);
  const Mat3 r = exp_so3(Vec3(rad.x(), 0, 0)) * exp_so3(Vec3(0, rad.y(), 0)) *
                 exp_so3(Vec3(0, 0, rad.z()));
  return log_so3(r);
}

Vec3 transform_point(const RigidTransform & t, const Vec3 & x)
{
  return t.rotation_matrix() * x + t.translation;
}

Vec3 rotate(const RigidTransform & t, const Vec3 & v) { return t.rotation_matrix() * v; }

Pose compose(const RigidTransform & a, const RigidTransform & b)
{
  const Mat3 ra = a.rotation_matrix();
  return Pose(log_so3(ra * b.rotation_matrix()), ra * b.translation + a.translation);
}

Pose invert(const RigidTransform & a)
{
  const Mat3 rt = a.rotation_matrix().transpose();
  return Pose(AxisAngle(-a.rotation.vector()), -(rt * a.translation));
}

SphericalPoint to_spherical(const Vec3 & x)
{
  const double range = x.norm();
  if (!(range > 0.0) || !std::isfinite(range)) {
    throw Error(ErrorKind::DegeneratePoint, "to_spherical: zero-norm or non-finite point");
  }
  return {range, std::atan2(x.y(), x.x()), std::asin(std::clamp(x.z() / range, -1.0, 1.0))};
}

double wrap_angle(double a)
{
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) {
    r += 2.0 * kPi;
  }
  return r;
}

double rotation_distance(const Mat3 & a, const Mat3 & b)
{
  return log_so3(a.transpose() * b).angle();
}

}  // namespace rlcalib
