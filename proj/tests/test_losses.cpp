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


#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "rlcalib/losses.hpp"
#include "rlcalib/simulator.hpp"
#include "support.hpp"

using namespace rlcalib;

namespace
{

LidarTargetObservation observation(const Vec3 & center, double range, double azimuth)
{
  LidarTargetObservation o;
  o.lidar_center = center;
  o.radar_range = range;
  o.radar_azimuth = azimuth;
  return o;
}

SyntheticDataset clean_scene(std::uint64_t seed, int frames = 10)
{
  SceneLayout layout;
  layout.frames = frames;
  SceneSpec spec = default_scene(seed, layout);
  spec.energy.noise = 0.0;
  spec.lidar_noise = 0.0;
  spec.quantize = false;
  spec.samples_per_target = 6;
  return generate(spec);
}

}  // namespace

TEST_CASE("to_target_frame")
{
  RadarSample s;
  s.position = Vec3(3, -1, 0.2);
  s.direction = Vec3(0.6, 0.8, 0);
  TargetLocalSample t = to_target_frame(Extrinsics::identity(), Pose::identity(), Pose::identity(), s);
  CHECK(t.position == s.position);
  CHECK(t.direction == s.direction);

  // x_lidar = R^T (x_radar - t): a pure radar <- lidar offset moves the
  // sample by -t in the LIDAR (here also target) frame
  const Extrinsics shift(AxisAngle(), Vec3(0.50, -0.25, 0.05));
  t = to_target_frame(shift, Pose::identity(), Pose::identity(), s);
  CHECK((t.position - (s.position - shift.translation)).norm() < 1e-15);
  CHECK(t.direction == s.direction);

  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Extrinsics e(AxisAngle(testing::random_rotation(rng, 3.0)), testing::random_vector(rng, 1.0));
    RadarSample r;
    r.direction = testing::random_vector(rng, 1.0).normalized();
    r.position = 4.0 * r.direction;
    const TargetLocalSample q = to_target_frame(e, testing::random_pose(rng), testing::random_pose(rng), r);
    worst = std::max(worst, std::abs(q.direction.norm() - 1.0));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("reprojection_loss")
{
  CHECK(reprojection_loss(Extrinsics::identity(), observation(Vec3(2, 0, 0), 2.1, 0.0), 1.0, 1.0) ==
        doctest::Approx(0.1).epsilon(1e-12));
  const Vec3 c(std::cos(kPi - 0.01), std::sin(kPi - 0.01), 0.0);
  CHECK(reprojection_loss(Extrinsics::identity(), observation(c, 1.0, -kPi + 0.01), 1.0, 1.0) ==
        doctest::Approx(0.02).epsilon(1e-9));
  CHECK(reprojection_loss(Extrinsics::identity(), observation(Vec3(2, 0, 0), 2.1, 0.0), 3.0, 1.0) ==
        doctest::Approx(0.3).epsilon(1e-12));

  const SyntheticDataset ds = clean_scene(1);
  double worst = 0.0;
  for (const Frame & f : ds.data.frames) {
    for (const LidarTargetObservation & o : f.observations) {
      worst = std::max(worst, reprojection_loss(ds.truth, o, 1.0, 1.0));
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("regression_loss")
{
  PositionalEncoding enc;
  enc.depth = 2;
  MlpWeights w = MlpWeights::zeros(enc);
  std::vector<TargetLocalSample> batch(3);
  for (auto & s : batch) s.energy = 0.5;
  batch[1].position = Vec3(0.1, 0.2, 0.3);
  CHECK(regression_loss(w, batch) == 0.5);

  std::vector<TargetLocalSample> pair(2);
  pair[0].energy = 0.1;
  pair[1].energy = 0.3;
  CHECK(regression_loss(w, pair) == doctest::Approx(0.2).epsilon(1e-15));

  // constant field reproduced by the output bias alone
  w.layers[3].bias(0) = 0.5;
  CHECK(regression_loss(w, batch) == 0.0);

  CHECK_THROWS_AS(regression_loss(w, std::vector<TargetLocalSample>{}), Error);
}

TEST_CASE("ray_pass_loss")
{
  const Pose target(AxisAngle(), Vec3(2, 0, 0));
  RadarSample ray;
  ray.direction = Vec3(1, 0, 0);
  CHECK(ray_pass_loss(Extrinsics::identity(), Pose::identity(), target, ray, TargetGeometry{0.3}) == 0.0);

  ray.direction = Vec3(0, 1, 0);
  CHECK(ray_distance(Extrinsics::identity(), Pose::identity(), target, ray) == doctest::Approx(2.0));
  CHECK(ray_pass_loss(Extrinsics::identity(), Pose::identity(), target, ray, TargetGeometry{0.5}) ==
        doctest::Approx(1.5).epsilon(1e-12));
  CHECK(ray_pass_loss(Extrinsics::identity(), Pose::identity(), target, ray, TargetGeometry{2.0}) == 0.0);

  // a half-line: a target behind the sensor is as far as its center
  ray.direction = Vec3(-1, 0, 0);
  CHECK(ray_distance(Extrinsics::identity(), Pose::identity(), target, ray) == doctest::Approx(2.0));

  const RadarSample d = detection_ray(observation(Vec3::Zero(), 4.0, kPi / 2));
  CHECK((d.direction - Vec3(0, 1, 0)).norm() < 1e-15);
  CHECK((d.position - Vec3(0, 4, 0)).norm() < 1e-15);
}

TEST_CASE("weighted sum of the terms")
{
  const LossBreakdown b = weighted_sum(LossWeights{}, 0.01, 0.02, 0.001);
  CHECK(b.total == doctest::Approx(30.1).epsilon(1e-12));

  LossWeights only_rep;
  only_rep.mlp = 0.0;
  only_rep.ray = 0.0;
  const LossBreakdown r = weighted_sum(only_rep, 0.01, 0.02, 0.001);
  CHECK(r.total == 1000.0 * 0.01);
  CHECK(r.mlp == 0.0);

  LossWeights zero = only_rep;
  zero.rep = 0.0;
  CHECK_THROWS_AS(weighted_sum(zero, 0, 0, 0), Error);
  zero.ray = -1.0;
  CHECK_THROWS_AS(zero.validate(), Error);
}

TEST_CASE("total_loss on a synthetic scene")
{
  const SyntheticDataset ds = testing::small_scene(5, 6, 4);
  const Extrinsics e = perturb(ds.truth, 1.5, 0.04, 3);
  PositionalEncoding enc;
  enc.depth = 2;
  const MlpWeights w = init_weights(2, enc);
  const TargetGeometry geom;
  const LossBreakdown full = total_loss(e, &w, ds.data, LossWeights{}, geom);

  // scalar oracle for the reprojection and ray-pass means
  double rep = 0.0, ray = 0.0;
  std::size_t n = 0;
  for (const Frame & f : ds.data.frames) {
    for (const LidarTargetObservation & o : f.observations) {
      rep += reprojection_loss(e, o, 1.0, 1.0);
      ray += ray_pass_loss(e, f.poses.lidar_pose, f.poses.target_poses.at(o.target_id), detection_ray(o), geom);
      ++n;
    }
  }
  CHECK(full.rep == doctest::Approx(rep / double(n)).epsilon(1e-12));
  CHECK(full.ray == doctest::Approx(ray / double(n)).epsilon(1e-12));
  std::vector<TargetLocalSample> local;
  for (const Frame & f : ds.data.frames) {
    for (const LidarTargetObservation & o : f.observations) {
      const Vec3 hit = detection_ray(o).position;
      for (const RadarSample & s : f.samples) {
        if (s.target_id != o.target_id || (s.position - hit).norm() > 0.6) continue;
        local.push_back(to_target_frame(e, f.poses.lidar_pose, f.poses.target_poses.at(s.target_id), s));
        local.back().energy = s.energy;
      }
    }
  }
  REQUIRE(!local.empty());
  CHECK(full.mlp == doctest::Approx(regression_loss(w, local)).epsilon(1e-12));
  CHECK(full.total == doctest::Approx(weighted_sum(LossWeights{}, full.rep, full.mlp, full.ray).total).epsilon(1e-12));

  LossWeights doubled;
  doubled.ray *= 2.0;
  const LossBreakdown d = total_loss(e, &w, ds.data, doubled, geom);
  CHECK(d.total - full.total == doctest::Approx(100.0 * full.ray).epsilon(1e-9));

  LossWeights only_rep;
  only_rep.mlp = 0.0;
  only_rep.ray = 0.0;
  const LossBreakdown r = total_loss(e, nullptr, ds.data, only_rep, geom);
  CHECK(r.total == doctest::Approx(1000.0 * full.rep).epsilon(1e-12));
  CHECK(r.mlp == 0.0);
  CHECK(r.ray == 0.0);
}

TEST_CASE("LossProblem rejects empty inputs")
{
  CalibDataset empty;
  Frame f;
  f.poses.lidar_pose = Pose::identity();
  f.poses.target_poses[0] = Pose::identity();
  empty.frames.push_back(f);
  const LossProblem problem(empty, 0.6);
  ad::Tape tape;
  const ad::Var z = tape.constant(ad::Matrix::Zero(1, 3));
  LossWeights w;
  w.mlp = 0.0;
  w.ray = 0.0;
  CHECK_THROWS_AS(problem.evaluate(z, z, nullptr, nullptr, w, TargetGeometry{}), Error);
}
