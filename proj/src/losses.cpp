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

#include "rlcalib/losses.hpp"

#include <cmath>
#include <string>

namespace rlcalib
{

void LossWeights::validate() const
{
  for (double v : {rep, mlp, ray, range, azimuth}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::InvalidArgument, "loss weights must be finite and non-negative");
    }
  }
  if (rep == 0.0 && mlp == 0.0 && ray == 0.0) {
    throw Error(ErrorKind::InvalidArgument, "at least one of w_rep, w_mlp, w_ray must be positive");
  }
}

namespace
{

Pose radar_to_target(const Extrinsics & e, const Pose & lidar_pose, const Pose & target_pose)
{
  return compose(invert(target_pose), compose(lidar_pose, invert(e)));
}

}  // namespace

TargetLocalSample to_target_frame(const Extrinsics & extrinsics, const Pose & lidar_pose,
                                  const Pose & target_pose, const RadarSample & sample)
{
  const Pose chain = radar_to_target(extrinsics, lidar_pose, target_pose);
  return {transform_point(chain, sample.position), rotate(chain, sample.direction), sample.energy};
}

double reprojection_loss(const Extrinsics & extrinsics, const LidarTargetObservation & obs,
                         double w_range, double w_azimuth)
{
  const SphericalPoint s = to_spherical(transform_point(extrinsics, obs.lidar_center));
  return w_range * std::abs(s.range - obs.radar_range) +
         w_azimuth * std::abs(wrap_angle(s.azimuth - obs.radar_azimuth));
}

double regression_loss(const MlpWeights & weights, std::span<const TargetLocalSample> samples)
{
  if (samples.empty()) {
    throw Error(ErrorKind::InvalidArgument, "regression_loss: empty batch");
  }
  ad::Matrix pos(static_cast<ad::Index>(samples.size()), 3);
  ad::Matrix dir(static_cast<ad::Index>(samples.size()), 3);
  Eigen::VectorXd e(static_cast<ad::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto k = static_cast<ad::Index>(i);
    pos.row(k) = samples[i].position.transpose();
    dir.row(k) = samples[i].direction.transpose();
    e(k) = samples[i].energy;
  }
  return (predict_energies(weights, pos, dir) - e).cwiseAbs().mean();
}

double ray_distance(const Extrinsics & extrinsics, const Pose & lidar_pose, const Pose & target_pose,
                    const RadarSample & ray)
{
  const Pose chain = radar_to_target(extrinsics, lidar_pose, target_pose);
  const Vec3 origin = transform_point(chain, Vec3::Zero());
  const Vec3 dir = rotate(chain, ray.direction);
  const double along = std::max(0.0, -origin.dot(dir));
  return (origin + along * dir).norm();
}

double ray_pass_loss(const Extrinsics & extrinsics, const Pose & lidar_pose, const Pose & target_pose,
                     const RadarSample & ray, const TargetGeometry & geom)
{
  return std::max(0.0, ray_distance(extrinsics, lidar_pose, target_pose, ray) - geom.radius);
}

RadarSample detection_ray(const LidarTargetObservation & obs)
{
  RadarSample s;
  s.target_id = obs.target_id;
  s.direction = Vec3(std::cos(obs.radar_azimuth), std::sin(obs.radar_azimuth), 0.0);
  s.position = obs.radar_range * s.direction;
  s.energy = 1.0;
  return s;
}

// ---------------------------------------------------------------------------

ad::Var exp_so3(const ad::Var & w)
{
  if (w.rows() != 1 || w.cols() != 3) {
    throw Error(ErrorKind::InvalidArgument, "exp_so3: expects a 1x3 rotation vector");
  }
  const Vec3 wv = w.value().row(0).transpose();
  ad::Matrix r = rlcalib::exp_so3(wv);
  return w.tape()->record("exp_so3", std::move(r), {w}, [w, wv](ad::Tape & t, const ad::Matrix & g) {
    const auto d = exp_so3_derivatives(wv);
    ad::Matrix gw(1, 3);
    for (int k = 0; k < 3; ++k) {
      gw(0, k) = g.cwiseProduct(d[static_cast<std::size_t>(k)]).sum();
    }
    t.accumulate(w, gw);
  });
}

LossProblem::LossProblem(const CalibDataset & dataset, double sampling_radius)
{
  std::vector<Vec3> centers, ray_dirs, offsets, spos, sdir, soff;
  std::vector<double> ranges, azimuths, energies;
  auto orot = std::make_shared<std::vector<Mat3>>();
  auto srot = std::make_shared<std::vector<Mat3>>();

  for (const Frame & f : dataset.frames) {
    const Mat3 r_wl = f.poses.lidar_pose.rotation_matrix();
    for (const auto & o : f.observations) {
      const Pose & tp = f.poses.target_poses.at(o.target_id);
      const Mat3 r_tw = tp.rotation_matrix().transpose();
      const Mat3 m = r_tw * r_wl;
      const Vec3 c = r_tw * (f.poses.lidar_pose.translation - tp.translation);
      centers.push_back(o.lidar_center);
      ranges.push_back(o.radar_range);
      azimuths.push_back(o.radar_azimuth);
      ray_dirs.push_back(detection_ray(o).direction);
      orot->push_back(m);
      offsets.push_back(c);

      const Vec3 det = detection_ray(o).position;
      for (const auto & s : f.samples) {
        if (s.target_id != o.target_id || (s.position - det).norm() > sampling_radius) {
          continue;
        }
        spos.push_back(s.position);
        sdir.push_back(s.direction);
        energies.push_back(s.energy);
        srot->push_back(m);
        soff.push_back(c);
      }
    }
  }

  auto rows = [](const std::vector<Vec3> & v) {
    ad::Matrix m(static_cast<ad::Index>(v.size()), 3);
    for (std::size_t i = 0; i < v.size(); ++i) m.row(static_cast<ad::Index>(i)) = v[i].transpose();
    return m;
  };
  auto column = [](const std::vector<double> & v) {
    return ad::Matrix(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<ad::Index>(v.size())));
  };
  obs_centers_ = rows(centers);
  obs_range_ = column(ranges);
  obs_azimuth_ = column(azimuths);
  ray_dirs_ = rows(ray_dirs);
  obs_rot_ = orot;
  obs_offset_ = rows(offsets);
  sample_positions_ = rows(spos);
  sample_dirs_ = rows(sdir);
  sample_energies_ = Eigen::Map<const Eigen::VectorXd>(energies.data(), static_cast<ad::Index>(energies.size()));
  sample_rot_ = srot;
  sample_offset_ = rows(soff);
}

ad::Var LossProblem::chain_points(ad::Tape & tape, const ad::Matrix & points, const ad::Var & rot,
                                  const ad::Var & trans,
                                  const std::shared_ptr<const std::vector<Mat3>> & mats,
                                  const ad::Matrix & offsets) const
{
  // Row form of R^T (x - t): (x - t)^T R.
  const ad::Var radar_in_lidar = ad::matmul(ad::sub_row(tape.constant(points), trans), rot);
  return ad::add(ad::per_row_linear(radar_in_lidar, mats), tape.constant(offsets));
}

ad::Var LossProblem::chain_directions(ad::Tape & tape, const ad::Matrix & dirs, const ad::Var & rot,
                                      const std::shared_ptr<const std::vector<Mat3>> & mats) const
{
  return ad::per_row_linear(ad::matmul(tape.constant(dirs), rot), mats);
}

LossProblem::Terms LossProblem::evaluate(const ad::Var & rotation, const ad::Var & translation,
                                         const MlpVars * mlp, const MlpWeights * shape,
                                         const LossWeights & weights, const TargetGeometry & geom) const
{
  weights.validate();
  ad::Tape & tape = *rotation.tape();
  const ad::Var rot = exp_so3(rotation);
  Terms terms;
  std::vector<ad::Var> weighted;

  if (weights.rep > 0.0 || weights.ray > 0.0) {
    if (obs_centers_.rows() == 0) {
      throw Error(ErrorKind::InvalidArgument, "loss: no observations for the reprojection/ray terms");
    }
  }

  if (weights.rep > 0.0) {
    const ad::Var p = ad::add_row(ad::matmul(tape.constant(obs_centers_), ad::transpose(rot)), translation);
    const ad::Var range = ad::row_norm(p);
    if ((range.value().array() <= 0.0).any()) {
      throw Error(ErrorKind::DegeneratePoint, "reprojection: LIDAR center maps onto the RADAR origin");
    }
    const ad::Var az = ad::atan2(ad::col(p, 1), ad::col(p, 0));
    const ad::Var dr = ad::sub(range, tape.constant(obs_range_));
    const ad::Var da0 = ad::sub(az, tape.constant(obs_azimuth_));
    const ad::Var da = ad::atan2(ad::sin(da0), ad::cos(da0));
    terms.rep = ad::add(ad::scale(ad::mean(ad::abs(dr)), weights.range),
                        ad::scale(ad::mean(ad::abs(da)), weights.azimuth));
    weighted.push_back(ad::scale(terms.rep, weights.rep));
  }

  if (weights.mlp > 0.0) {
    if (mlp == nullptr || shape == nullptr) {
      throw Error(ErrorKind::InvalidArgument, "loss: regression term enabled without network weights");
    }
    if (sample_positions_.rows() == 0) {
      throw Error(ErrorKind::InvalidArgument, "loss: no RADAR samples for the regression term");
    }
    const ad::Var pos =
      chain_points(tape, sample_positions_, rot, translation, sample_rot_, sample_offset_);
    const ad::Var dir = chain_directions(tape, sample_dirs_, rot, sample_rot_);
    const ad::Var pred = mlp_forward(*mlp, encode_features(pos, dir, shape->encoding));
    terms.mlp = ad::mean(ad::abs(ad::sub(pred, tape.constant(ad::Matrix(sample_energies_)))));
    weighted.push_back(ad::scale(terms.mlp, weights.mlp));
  }

  if (weights.ray > 0.0) {
    const ad::Matrix zeros = ad::Matrix::Zero(obs_centers_.rows(), 3);
    const ad::Var origin = chain_points(tape, zeros, rot, translation, obs_rot_, obs_offset_);
    const ad::Var dir = chain_directions(tape, ray_dirs_, rot, obs_rot_);
    const ad::Var along = ad::relu(ad::neg(ad::row_dot(origin, dir)));
    const ad::Var closest = ad::add(origin, ad::scale_rows(along, dir));
    const ad::Var dist = ad::row_norm(closest);
    terms.ray = ad::mean(ad::relu(ad::add_scalar(dist, -geom.radius)));
    weighted.push_back(ad::scale(terms.ray, weights.ray));
  }

  terms.total = weighted.front();
  for (std::size_t i = 1; i < weighted.size(); ++i) {
    terms.total = ad::add(terms.total, weighted[i]);
  }
  return terms;
}

void LossProblem::target_local_samples(const Extrinsics & extrinsics, ad::Matrix & positions,
                                       ad::Matrix & directions) const
{
  ad::Tape tape;
  const ad::Var w = tape.constant(extrinsics.rotation.vector().transpose());
  const ad::Var t = tape.constant(extrinsics.translation.transpose());
  const ad::Var rot = exp_so3(w);
  positions = chain_points(tape, sample_positions_, rot, t, sample_rot_, sample_offset_).value();
  directions = chain_directions(tape, sample_dirs_, rot, sample_rot_).value();
}

LossBreakdown weighted_sum(const LossWeights & w, double rep, double mlp, double ray)
{
  w.validate();
  LossBreakdown out;
  if (w.rep > 0.0) {
    out.rep = rep;
    out.total += w.rep * rep;
  }
  if (w.mlp > 0.0) {
    out.mlp = mlp;
    out.total += w.mlp * mlp;
  }
  if (w.ray > 0.0) {
    out.ray = ray;
    out.total += w.ray * ray;
  }
  return out;
}

LossBreakdown total_loss(const Extrinsics & extrinsics, const MlpWeights * weights,
                         const CalibDataset & dataset, const LossWeights & w,
                         const TargetGeometry & geom, double sampling_radius)
{
  const LossProblem problem(dataset, sampling_radius);
  ad::Tape tape;
  const ad::Var rot = tape.constant(extrinsics.rotation.vector().transpose());
  const ad::Var trans = tape.constant(extrinsics.translation.transpose());
  MlpVars vars;
  if (weights != nullptr) {
    vars = mlp_leaves(tape, *weights, false);
  }
  const auto terms =
    problem.evaluate(rot, trans, weights ? &vars : nullptr, weights, w, geom);
  LossBreakdown out;
  out.total = terms.total.scalar();
  if (terms.rep.valid()) out.rep = terms.rep.scalar();
  if (terms.mlp.valid()) out.mlp = terms.mlp.scalar();
  if (terms.ray.valid()) out.ray = terms.ray.scalar();
  return out;
}

}  // namespace rlcalib
