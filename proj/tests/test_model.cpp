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


#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>

#include <doctest.h>

#include "rlcalib/model.hpp"
#include "rlcalib/optimizer.hpp"
#include "rlcalib/pipeline.hpp"
#include "rlcalib/simulator.hpp"

using namespace rlcalib;

namespace
{

void check_close(const std::vector<double> & got, const std::vector<double> & want, double tol)
{
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= tol);
}

}  // namespace

TEST_CASE("encode")
{
  check_close(encode(0.0, 2), {0, 1, 0, 1}, 0.0);
  check_close(encode(0.5, 1), {1, 0}, 1e-15);
  const double h = std::sqrt(2.0) / 2;
  check_close(encode(0.25, 2), {h, h, 1, 0}, 1e-15);
}

TEST_CASE("encode_sample layout")
{
  PositionalEncoding enc;
  enc.depth = 4;
  CHECK(enc.input_dim() == 48);

  TargetLocalSample origin;
  origin.direction = Vec3(0, 0, 1);
  for (int depth : {1, 3, 6}) {
    enc.depth = depth;
    const Eigen::VectorXd f = encode_sample(origin, enc);
    for (int i = 0; i < 2 * depth * 3; ++i) CHECK(f(i) == (i % 2 == 0 ? 0.0 : 1.0));
  }

  enc.depth = 3;
  TargetLocalSample s;
  s.position = Vec3(0.1, -0.2, 0.3);
  s.direction = Vec3(0.6, 0.8, 0.0);
  TargetLocalSample p = s;
  p.position = Vec3(0.3, 0.1, -0.2);  // (z, x, y)
  const Eigen::VectorXd a = encode_sample(s, enc), b = encode_sample(p, enc);
  const int n = enc.features_per_scalar();
  const int perm[3] = {2, 0, 1};
  for (int k = 0; k < 3; ++k) CHECK(b.segment(k * n, n) == a.segment(perm[k] * n, n));
  CHECK(b.tail(3 * n) == a.tail(3 * n));

  enc.include_input = true;
  CHECK(encode_sample(s, enc)(0) == 0.1);
  enc.enabled = false;
  CHECK(enc.input_dim() == 6);
  CHECK(encode_sample(s, enc)(4) == 0.8);
}

TEST_CASE("predict_energy")
{
  PositionalEncoding enc;
  const MlpWeights zero = MlpWeights::zeros(enc);
  TargetLocalSample s;
  s.position = Vec3(0.2, 0.1, -0.3);
  CHECK(predict_energy(zero, s) == 0.0);

  const MlpWeights w = init_weights(17, enc);
  const double a = predict_energy(w, s);
  const double b = predict_energy(init_weights(17, enc), s);
  CHECK(std::memcmp(&a, &b, sizeof a) == 0);

  ad::Matrix pos(1, 3), dir(1, 3);
  pos.row(0) = s.position.transpose();
  dir.row(0) = s.direction.transpose();
  CHECK(predict_energies(w, pos, dir)(0) == doctest::Approx(a).epsilon(1e-12));
}

TEST_CASE("init_weights")
{
  PositionalEncoding enc;
  const MlpWeights a = init_weights(3, enc), b = init_weights(3, enc), c = init_weights(4, enc);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  CHECK(a.layers[0].weight.rows() == enc.input_dim());
  CHECK(a.layers[3].weight.cols() == 1);
  CHECK(a.parameter_count() == std::size_t(72 * 128 + 128 + 2 * (128 * 128 + 128) + 128 + 1));

  // uniform(-b, b) has sigma b / sqrt(3)
  const ad::Matrix & w0 = a.layers[0].weight;
  const double bound = 1.0 / std::sqrt(double(enc.input_dim()));
  const double n = double(w0.size());
  CHECK(std::abs(w0.mean()) < 3.0 * bound / std::sqrt(3.0) / std::sqrt(n));
  CHECK(w0.cwiseAbs().maxCoeff() <= bound);
}

TEST_CASE("weights validation and checkpoints")
{
  PositionalEncoding enc;
  enc.depth = 2;
  MlpWeights w = init_weights(8, enc);
  CHECK(deserialize_weights(serialize_weights(w)) == w);

  const auto path = std::filesystem::temp_directory_path() / "rlcalib_weights_test.txt";
  save_weights(w, path.string());
  CHECK(load_weights(path.string()) == w);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(deserialize_weights("garbage"), Error);
  w.layers[1].weight.resize(3, 3);
  CHECK_THROWS_AS(w.validate(), Error);
}

TEST_CASE("network fits a synthetic energy bump")
{
  SceneLayout layout;
  layout.frames = 30;
  SceneSpec spec = default_scene(4, layout);
  spec.samples_per_target = 8;
  const SyntheticDataset ds = generate(spec);
  std::vector<TargetLocalSample> all = target_samples(ds.data, ds.truth, spec.sampling_radius);
  REQUIRE(all.size() > 100);
  std::vector<TargetLocalSample> train, held;
  for (std::size_t i = 0; i < all.size(); ++i) (i % 5 == 0 ? held : train).push_back(all[i]);

  PositionalEncoding enc;
  enc.depth = 2;
  const FitResult fit = fit_mlp(train, enc, 2000, 0.005, 1);
  const RegressionReport r = regression_error_report(fit.weights, held);
  CHECK(r.errors.size() == held.size());
  CHECK(r.mean_error() < 0.05);
}
