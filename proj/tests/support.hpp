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

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "rlcalib/autodiff.hpp"
#include "rlcalib/losses.hpp"
#include "rlcalib/model.hpp"
#include "rlcalib/simulator.hpp"

namespace rlcalib::testing
{

inline Vec3 random_vector(std::mt19937_64 & rng, double scale)
{
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

/// Rotation vector with norm below `max_angle`.
inline Vec3 random_rotation(std::mt19937_64 & rng, double max_angle)
{
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, max_angle);
  Vec3 axis(n(rng), n(rng), n(rng));
  return axis.normalized() * u(rng);
}

inline Pose random_pose(std::mt19937_64 & rng)
{
  return Pose(AxisAngle(random_rotation(rng, kPi - 1e-3)), random_vector(rng, 5.0));
}

/// A few frames of the default layout with a handful of samples each.
inline SyntheticDataset small_scene(std::uint64_t seed, int frames = 3, int samples_per_target = 4)
{
  SceneLayout layout;
  layout.frames = frames;
  SceneSpec spec = default_scene(seed, layout);
  spec.samples_per_target = samples_per_target;
  return generate(spec);
}

/// Leaves: rotation (1x3), translation (1x3), then weight/bias per layer.
inline std::vector<ad::Matrix> loss_point(const Extrinsics & e, const MlpWeights & w)
{
  std::vector<ad::Matrix> p;
  p.emplace_back(e.rotation.vector().transpose());
  p.emplace_back(e.translation.transpose());
  for (const LinearLayer & l : w.layers) {
    p.push_back(l.weight);
    p.push_back(l.bias);
  }
  return p;
}

inline ad::Builder loss_builder(const LossProblem & problem, const MlpWeights & shape, const LossWeights & lw,
                                const TargetGeometry & geom)
{
  return [&problem, &shape, lw, geom](ad::Tape &, const std::vector<ad::Var> & leaves) {
    MlpVars vars;
    for (int k = 0; k < MlpWeights::kLayers; ++k) {
      vars.weight[k] = leaves[2 + 2 * k];
      vars.bias[k] = leaves[3 + 2 * k];
    }
    return problem.evaluate(leaves[0], leaves[1], &vars, &shape, lw, geom).total;
  };
}

inline Extrinsics extrinsics_of(const std::vector<ad::Matrix> & point)
{
  return Extrinsics(AxisAngle(Vec3(point[0].row(0).transpose())), point[1].row(0).transpose());
}

inline MlpWeights weights_of(const std::vector<ad::Matrix> & point, const PositionalEncoding & enc)
{
  MlpWeights w = MlpWeights::zeros(enc);
  for (int k = 0; k < MlpWeights::kLayers; ++k) {
    w.layers[k].weight = point[2 + 2 * k];
    w.layers[k].bias = point[3 + 2 * k];
  }
  return w;
}

/// Which side of every kink of the objective a point sits on.
struct KinkPattern
{
  std::vector<bool> relu;     // hidden pre-activations > 0
  std::vector<bool> residual; // regression residuals > 0
  std::vector<bool> range;    // reprojection range residuals > 0
  std::vector<bool> azimuth;  // wrapped azimuth residuals > 0
  std::vector<bool> behind;   // target center behind the ray origin
  std::vector<bool> hinge;    // ray distance > r
};

/// Independent scalar evaluation of the weighted objective written straight
/// from the dataset. With `frozen` set, every kink keeps the branch recorded
/// there, giving the smooth piece the point lies on; otherwise the natural
/// branches are taken and written to `record`.
inline double reference_objective(const CalibDataset & data, const std::vector<ad::Matrix> & point,
                                  const PositionalEncoding & enc, const LossWeights & lw,
                                  const TargetGeometry & geom, double sampling_radius,
                                  const KinkPattern * frozen, KinkPattern * record)
{
  const Extrinsics e = extrinsics_of(point);
  const MlpWeights w = weights_of(point, enc);
  const Mat3 r = exp_so3(e.rotation);
  const Vec3 & t = e.translation;
  std::size_t i_relu = 0, i_res = 0, i_obs = 0;
  auto branch = [](const std::vector<bool> * fixed, std::vector<bool> * out, std::size_t & i, bool natural) {
    const bool b = fixed ? (*fixed)[i] : natural;
    if (out) out->push_back(b);
    ++i;
    return b;
  };

  double rep_r = 0.0, rep_a = 0.0, mlp = 0.0, ray = 0.0;
  std::size_t n_obs = 0, n_samples = 0;
  for (const Frame & f : data.frames) {
    for (const LidarTargetObservation & o : f.observations) {
      const Pose & tp = f.poses.target_poses.at(o.target_id);
      // radar -> lidar -> world -> target
      auto to_target = [&](const Vec3 & x_r) {
        const Vec3 x_l = r.transpose() * (x_r - t);
        return transform_point(invert(tp), transform_point(f.poses.lidar_pose, x_l));
      };
      auto dir_to_target = [&](const Vec3 & d_r) {
        return tp.rotation_matrix().transpose() * (f.poses.lidar_pose.rotation_matrix() * (r.transpose() * d_r));
      };

      const Vec3 p = r * o.lidar_center + t;
      const double dr = p.norm() - o.radar_range;
      const double da = std::atan2(std::sin(std::atan2(p.y(), p.x()) - o.radar_azimuth),
                                   std::cos(std::atan2(p.y(), p.x()) - o.radar_azimuth));
      std::size_t k = i_obs;
      rep_r += branch(frozen ? &frozen->range : nullptr, record ? &record->range : nullptr, k, dr > 0) ? dr : -dr;
      k = i_obs;
      rep_a += branch(frozen ? &frozen->azimuth : nullptr, record ? &record->azimuth : nullptr, k, da > 0) ? da : -da;

      const Vec3 u(std::cos(o.radar_azimuth), std::sin(o.radar_azimuth), 0.0);
      const Vec3 origin = to_target(Vec3::Zero());
      const Vec3 dir = dir_to_target(u);
      const double along = -origin.dot(dir);
      k = i_obs;
      const bool ahead = branch(frozen ? &frozen->behind : nullptr, record ? &record->behind : nullptr, k, along > 0);
      const double dist = (origin + (ahead ? along : 0.0) * dir).norm();
      k = i_obs;
      if (branch(frozen ? &frozen->hinge : nullptr, record ? &record->hinge : nullptr, k, dist > geom.radius)) {
        ray += dist - geom.radius;
      }
      ++i_obs;
      ++n_obs;

      const Vec3 det = o.radar_range * u;
      for (const RadarSample & s : f.samples) {
        if (s.target_id != o.target_id || (s.position - det).norm() > sampling_radius) continue;
        TargetLocalSample local;
        local.position = to_target(s.position);
        local.direction = dir_to_target(s.direction);
        Eigen::RowVectorXd h = encode_sample(local, enc).transpose();
        for (int l = 0; l < MlpWeights::kLayers; ++l) {
          h = h * w.layers[l].weight + w.layers[l].bias;
          if (l + 1 < MlpWeights::kLayers) {
            for (Eigen::Index j = 0; j < h.size(); ++j) {
              if (!branch(frozen ? &frozen->relu : nullptr, record ? &record->relu : nullptr, i_relu, h(j) > 0)) {
                h(j) = 0.0;
              }
            }
          }
        }
        const double res = h(0) - s.energy;
        mlp += branch(frozen ? &frozen->residual : nullptr, record ? &record->residual : nullptr, i_res, res > 0)
                 ? res
                 : -res;
        ++n_samples;
      }
    }
  }
  const double n = static_cast<double>(n_obs);
  double total = 0.0;
  if (lw.rep > 0.0) total += lw.rep * (lw.range * rep_r / n + lw.azimuth * rep_a / n);
  if (lw.mlp > 0.0) total += lw.mlp * mlp / static_cast<double>(n_samples);
  if (lw.ray > 0.0) total += lw.ray * ray / n;
  return total;
}

struct FiniteDifferenceReport
{
  double max_rel_error = 0.0;
  double value_mismatch = 0.0;  // |tape value - reference value| at the point
  std::size_t coordinates = 0;
};

/// Central differences (step h) of the reference objective on the smooth
/// piece containing the point, against the tape gradient. Error per
/// coordinate is |analytic - numeric| / max(1, |analytic|).
inline FiniteDifferenceReport objective_grad_check(const CalibDataset & data, const LossProblem & problem,
                                                   const Extrinsics & e, const MlpWeights & w,
                                                   const LossWeights & lw, const TargetGeometry & geom,
                                                   double h, double sampling_radius = 0.6)
{
  const ad::Builder f = loss_builder(problem, w, lw, geom);
  const std::vector<ad::Matrix> point = loss_point(e, w);
  const std::vector<ad::Matrix> analytic = ad::gradient(f, point);

  KinkPattern base;
  const double ref = reference_objective(data, point, w.encoding, lw, geom, sampling_radius, nullptr, &base);
  ad::Tape tape;
  std::vector<ad::Var> leaves;
  for (const ad::Matrix & m : point) leaves.push_back(tape.constant(m));
  FiniteDifferenceReport r;
  r.value_mismatch = std::abs(f(tape, leaves).scalar() - ref);

  std::vector<ad::Matrix> p = point;
  for (std::size_t l = 0; l < p.size(); ++l) {
    for (ad::Index i = 0; i < p[l].size(); ++i) {
      const double x = point[l](i);
      p[l](i) = x + h;
      const double fp = reference_objective(data, p, w.encoding, lw, geom, sampling_radius, &base, nullptr);
      p[l](i) = x - h;
      const double fm = reference_objective(data, p, w.encoding, lw, geom, sampling_radius, &base, nullptr);
      p[l](i) = x;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[l](i);
      r.max_rel_error = std::max(r.max_rel_error, std::abs(a - numeric) / std::max(1.0, std::abs(a)));
      ++r.coordinates;
    }
  }
  return r;
}

}  // namespace rlcalib::testing
