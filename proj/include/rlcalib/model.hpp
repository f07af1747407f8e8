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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rlcalib/autodiff.hpp"
#include "rlcalib/geometry.hpp"

namespace rlcalib
{

/// Sinusoidal feature map applied to each scalar input separately:
/// [sin(2^0 pi x), cos(2^0 pi x), ..., sin(2^(L-1) pi x), cos(2^(L-1) pi x)],
/// optionally preceded by x itself. With `enabled` off the six raw inputs are
/// fed to the network unchanged.
struct PositionalEncoding
{
  int depth = 6;
  bool include_input = false;
  bool enabled = true;

  int features_per_scalar() const;
  int input_dim() const { return 6 * features_per_scalar(); }
  void validate() const;
};

/// A RADAR return expressed in a target's local frame.
struct TargetLocalSample
{
  Vec3 position = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();
  double energy = 0.0;
};

struct LinearLayer
{
  ad::Matrix weight;  // in x out
  ad::RowVector bias;  // 1 x out
};

/// Four linear layers (in -> 128 -> 128 -> 128 -> 1), ReLU between them and a
/// linear output.
struct MlpWeights
{
  static constexpr int kHidden = 128;
  static constexpr int kLayers = 4;

  PositionalEncoding encoding;
  std::array<LinearLayer, kLayers> layers;

  /// Throws InvalidArgument if any layer shape disagrees with the encoding.
  void validate() const;
  std::size_t parameter_count() const;
  static MlpWeights zeros(const PositionalEncoding & enc);
};

std::vector<double> encode(double x, int depth);
Eigen::VectorXd encode_sample(const TargetLocalSample & s, const PositionalEncoding & enc);

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
MlpWeights init_weights(std::uint64_t seed, const PositionalEncoding & enc);

double predict_energy(const MlpWeights & w, const TargetLocalSample & s);
/// Batched prediction; positions and directions are Nx3.
Eigen::VectorXd predict_energies(const MlpWeights & w, const ad::Matrix & positions,
                                 const ad::Matrix & directions);

/// Network parameters as tape leaves.
struct MlpVars
{
  std::array<ad::Var, MlpWeights::kLayers> weight;
  std::array<ad::Var, MlpWeights::kLayers> bias;
};

MlpVars mlp_leaves(ad::Tape & tape, const MlpWeights & w, bool requires_grad);

/// Feature matrix for Nx3 positions and Nx3 directions.
ad::Var encode_features(const ad::Var & positions, const ad::Var & directions,
                        const PositionalEncoding & enc);
ad::Var mlp_forward(const MlpVars & vars, const ad::Var & features);

/// Plain-text checkpoint: header, encoding line, then per layer its shape and
/// row-major values written as hexadecimal floats (exact round trip).
void save_weights(const MlpWeights & w, const std::string & path);
MlpWeights load_weights(const std::string & path);
std::string serialize_weights(const MlpWeights & w);
MlpWeights deserialize_weights(const std::string & text);

bool operator==(const MlpWeights & a, const MlpWeights & b);

}  // namespace rlcalib
