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

#include "rlcalib/geometry.hpp"
#include "rlcalib/losses.hpp"
#include "rlcalib/model.hpp"

namespace rlcalib
{

struct LearningRates
{
  double mlp = 0.005;
  double rotation = 0.005;
  double translation = 0.001;
};

/// Everything a calibration run needs besides the data.
struct CalibConfig
{
  LossWeights weights;
  LearningRates lr;
  PositionalEncoding encoding;
  TargetGeometry target;
  double sampling_radius = 0.6;
  int iterations = 2000;
  /// Stop once the best total loss improved by less than this fraction over
  /// the last `plateau_window` steps. A window of 0 disables the rule.
  int plateau_window = 50;
  double plateau_tolerance = 1e-7;
  std::uint64_t seed = 0;
  Extrinsics initial;

  /// Throws Config on any out-of-range value.
  void validate() const;
};

/// JSON text of the fully resolved config (every field present).
std::string config_to_string(const CalibConfig & c);

/// Parse a JSON config document and then apply `key=value` overrides in
/// order. Values are JSON literals (numbers, booleans, arrays). Missing keys
/// keep their defaults; unknown keys raise a Config error.
CalibConfig parse_config(const std::string & text, const std::vector<std::string> & overrides = {});
CalibConfig load_config(const std::string & path, const std::vector<std::string> & overrides = {});

/// The keys accepted by parse_config.
std::vector<std::string> config_keys();

}  // namespace rlcalib
