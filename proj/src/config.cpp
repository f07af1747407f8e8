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

#include "rlcalib/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

namespace rlcalib
{

using nlohmann::json;

namespace
{

[[noreturn]] void config_error(const std::string & msg) { throw Error(ErrorKind::Config, msg); }

double get_number(const std::string & key, const json & v)
{
  if (!v.is_number()) config_error(key + ": expected a number");
  return v.get<double>();
}

Vec3 get_vec(const std::string & key, const json & v)
{
  if (!v.is_array() || v.size() != 3) config_error(key + ": expected a 3-element array");
  Vec3 out;
  for (std::size_t i = 0; i < 3; ++i) out[static_cast<int>(i)] = get_number(key, v[i]);
  return out;
}

long long get_int(const std::string & key, const json & v)
{
  if (!v.is_number_integer()) config_error(key + ": expected an integer");
  return v.get<long long>();
}

bool get_bool(const std::string & key, const json & v)
{
  if (!v.is_boolean()) config_error(key + ": expected true or false");
  return v.get<bool>();
}

using Setter = std::function<void(CalibConfig &, const json &)>;

const std::map<std::string, Setter> & setters()
{
  static const std::map<std::string, Setter> s = {
    {"w_rep", [](CalibConfig & c, const json & v) { c.weights.rep = get_number("w_rep", v); }},
    {"w_mlp", [](CalibConfig & c, const json & v) { c.weights.mlp = get_number("w_mlp", v); }},
    {"w_ray", [](CalibConfig & c, const json & v) { c.weights.ray = get_number("w_ray", v); }},
    {"w_r", [](CalibConfig & c, const json & v) { c.weights.range = get_number("w_r", v); }},
    {"w_theta", [](CalibConfig & c, const json & v) { c.weights.azimuth = get_number("w_theta", v); }},
    {"lr_mlp", [](CalibConfig & c, const json & v) { c.lr.mlp = get_number("lr_mlp", v); }},
    {"lr_rotation", [](CalibConfig & c, const json & v) { c.lr.rotation = get_number("lr_rotation", v); }},
    {"lr_translation",
     [](CalibConfig & c, const json & v) { c.lr.translation = get_number("lr_translation", v); }},
    {"pe_depth", [](CalibConfig & c, const json & v) { c.encoding.depth = int(get_int("pe_depth", v)); }},
    {"pe_enabled", [](CalibConfig & c, const json & v) { c.encoding.enabled = get_bool("pe_enabled", v); }},
    {"pe_include_input",
     [](CalibConfig & c, const json & v) { c.encoding.include_input = get_bool("pe_include_input", v); }},
    {"target_radius",
     [](CalibConfig & c, const json & v) { c.target.radius = get_number("target_radius", v); }},
    {"sampling_radius",
     [](CalibConfig & c, const json & v) { c.sampling_radius = get_number("sampling_radius", v); }},
    {"iterations", [](CalibConfig & c, const json & v) { c.iterations = int(get_int("iterations", v)); }},
    {"plateau_window",
     [](CalibConfig & c, const json & v) { c.plateau_window = int(get_int("plateau_window", v)); }},
    {"plateau_tolerance",
     [](CalibConfig & c, const json & v) { c.plateau_tolerance = get_number("plateau_tolerance", v); }},
    {"seed",
     [](CalibConfig & c, const json & v) {
       const long long s = get_int("seed", v);
       if (s < 0) config_error("seed: must be non-negative");
       c.seed = static_cast<std::uint64_t>(s);
     }},
    {"init_euler_deg",
     [](CalibConfig & c, const json & v) {
       c.initial.rotation = from_euler(EulerAngles{get_vec("init_euler_deg", v), false});
     }},
    {"init_rotation_vector",
     [](CalibConfig & c, const json & v) { c.initial.rotation = AxisAngle(get_vec("init_rotation_vector", v)); }},
    {"init_translation",
     [](CalibConfig & c, const json & v) { c.initial.translation = get_vec("init_translation", v); }},
  };
  return s;
}

void apply(CalibConfig & c, const std::string & key, const json & value)
{
  const auto it = setters().find(key);
  if (it == setters().end()) config_error("unknown config key '" + key + "'");
  it->second(c, value);
}

}  // namespace

void CalibConfig::validate() const
{
  auto positive = [](const char * name, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) config_error(std::string(name) + ": must be positive");
  };
  try {
    weights.validate();
  } catch (const Error & e) {
    config_error(e.what());
  }
  positive("lr_mlp", lr.mlp);
  positive("lr_rotation", lr.rotation);
  positive("lr_translation", lr.translation);
  positive("target_radius", target.radius);
  positive("sampling_radius", sampling_radius);
  if (encoding.enabled && encoding.depth <= 0) config_error("pe_depth: must be positive");
  if (iterations < 0) config_error("iterations: must be non-negative");
  if (plateau_window < 0) config_error("plateau_window: must be non-negative");
  if (!(plateau_tolerance >= 0.0)) config_error("plateau_tolerance: must be non-negative");
  if (!initial.translation.allFinite()) config_error("init_translation: must be finite");
}

std::vector<std::string> config_keys()
{
  std::vector<std::string> keys;
  for (const auto & [k, v] : setters()) keys.push_back(k);
  return keys;
}

std::string config_to_string(const CalibConfig & c)
{
  const Vec3 & w = c.initial.rotation.vector();
  const Vec3 & t = c.initial.translation;
  const Vec3 e = to_euler(c.initial.rotation).degrees + Vec3::Zero();  // no -0 in the echo
  const json j = {
    {"w_rep", c.weights.rep},
    {"w_mlp", c.weights.mlp},
    {"w_ray", c.weights.ray},
    {"w_r", c.weights.range},
    {"w_theta", c.weights.azimuth},
    {"lr_mlp", c.lr.mlp},
    {"lr_rotation", c.lr.rotation},
    {"lr_translation", c.lr.translation},
    {"pe_depth", c.encoding.depth},
    {"pe_enabled", c.encoding.enabled},
    {"pe_include_input", c.encoding.include_input},
    {"target_radius", c.target.radius},
    {"sampling_radius", c.sampling_radius},
    {"iterations", c.iterations},
    {"plateau_window", c.plateau_window},
    {"plateau_tolerance", c.plateau_tolerance},
    {"seed", c.seed},
    {"init_rotation_vector", {w.x(), w.y(), w.z()}},
    {"init_euler_deg", {e.x(), e.y(), e.z()}},
    {"init_translation", {t.x(), t.y(), t.z()}},
  };
  return j.dump();
}

CalibConfig parse_config(const std::string & text, const std::vector<std::string> & overrides)
{
  CalibConfig c;
  json root = json::object();
  const bool blank = text.find_first_not_of(" \t\r\n") == std::string::npos;
  if (!blank) {
    try {
      root = json::parse(text);
    } catch (const json::parse_error & e) {
      config_error(std::string("config parse error: ") + e.what());
    }
  }
  if (!root.is_object()) config_error("config must be a JSON object");
  // Axis-angle and Euler initial rotations are alternatives; the echoed
  // config carries both, so prefer the exact rotation vector when present.
  for (const auto & [key, value] : root.items()) {
    if (key == "init_euler_deg" && root.contains("init_rotation_vector")) continue;
    apply(c, key, value);
  }
  for (const std::string & o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) config_error("override '" + o + "' is not key=value");
    const std::string key = o.substr(0, eq);
    json value;
    try {
      value = json::parse(o.substr(eq + 1));
    } catch (const json::parse_error &) {
      config_error("override '" + o + "': value is not a JSON literal");
    }
    apply(c, key, value);
  }
  c.validate();
  return c;
}

CalibConfig load_config(const std::string & path, const std::vector<std::string> & overrides)
{
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::Io, "cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), overrides);
}

}  // namespace rlcalib
