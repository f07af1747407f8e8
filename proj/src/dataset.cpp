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

#include "rlcalib/dataset.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace rlcalib
{

using nlohmann::json;

namespace
{

constexpr const char * kFormat = "rlcalib-dataset";
constexpr int kVersion = 1;

json vec_json(const Vec3 & v) { return json::array({v.x(), v.y(), v.z()}); }

std::string where(std::size_t frame, const char * kind, std::size_t index)
{
  return "frame[" + std::to_string(frame) + "]." + kind + "[" + std::to_string(index) + "]";
}

Vec3 vec_from(const json & j, const std::string & ctx)
{
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorKind::Schema, ctx + ": expected a 3-element array");
  }
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) {
      throw Error(ErrorKind::Schema, ctx + ": expected numbers");
    }
    v[i] = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

const json & field(const json & j, const char * key, const std::string & ctx)
{
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorKind::Schema, ctx + ": missing field '" + key + "'");
  }
  return j.at(key);
}

double number(const json & j, const char * key, const std::string & ctx)
{
  const json & v = field(j, key, ctx);
  if (!v.is_number()) {
    throw Error(ErrorKind::Schema, ctx + "." + key + ": expected a number");
  }
  return v.get<double>();
}

int integer(const json & j, const char * key, const std::string & ctx)
{
  const json & v = field(j, key, ctx);
  if (!v.is_number_integer()) {
    throw Error(ErrorKind::Schema, ctx + "." + key + ": expected an integer");
  }
  return v.get<int>();
}

json transform_json(const RigidTransform & t)
{
  return {{"rotation", vec_json(t.rotation.vector())}, {"translation", vec_json(t.translation)}};
}

Pose pose_from(const json & j, const std::string & ctx)
{
  const Vec3 w = vec_from(field(j, "rotation", ctx), ctx + ".rotation");
  if (w.norm() > kPi) {
    throw Error(ErrorKind::Schema, ctx + ".rotation: rotation vector norm exceeds pi");
  }
  return Pose(AxisAngle(w), vec_from(field(j, "translation", ctx), ctx + ".translation"));
}

}  // namespace

std::size_t CalibDataset::observation_count() const
{
  std::size_t n = 0;
  for (const Frame & f : frames) n += f.observations.size();
  return n;
}

std::size_t CalibDataset::sample_count() const
{
  std::size_t n = 0;
  for (const Frame & f : frames) n += f.samples.size();
  return n;
}

void validate(const CalibDataset & d)
{
  if (d.frames.empty()) {
    throw Error(ErrorKind::EmptyDataset, "empty dataset: no frames");
  }
  std::set<int> ids;
  for (std::size_t fi = 0; fi < d.frames.size(); ++fi) {
    const Frame & f = d.frames[fi];
    const std::string fctx = "frame[" + std::to_string(fi) + "]";
    if (!ids.insert(f.id).second) {
      throw Error(ErrorKind::Schema, fctx + ": duplicate frame id " + std::to_string(f.id));
    }
    if (!f.poses.lidar_pose.translation.allFinite()) {
      throw Error(ErrorKind::Schema, fctx + ".lidar_pose: non-finite translation");
    }
    for (const auto & [tid, p] : f.poses.target_poses) {
      if (!p.translation.allFinite()) {
        throw Error(ErrorKind::Schema, fctx + ".target_poses[" + std::to_string(tid) + "]: non-finite");
      }
    }
    for (std::size_t i = 0; i < f.observations.size(); ++i) {
      const auto & o = f.observations[i];
      const std::string ctx = where(fi, "observations", i);
      if (!o.lidar_center.allFinite() || !std::isfinite(o.radar_range) ||
          !std::isfinite(o.radar_azimuth) || o.radar_range < 0.0)
      {
        throw Error(ErrorKind::Schema, ctx + ": non-finite or negative field");
      }
      if (!f.poses.target_poses.count(o.target_id)) {
        throw Error(ErrorKind::DanglingTarget,
                    ctx + ": references unknown target " + std::to_string(o.target_id));
      }
    }
    for (std::size_t i = 0; i < f.samples.size(); ++i) {
      const auto & s = f.samples[i];
      const std::string ctx = where(fi, "samples", i);
      if (!s.position.allFinite() || !s.direction.allFinite() || !std::isfinite(s.energy)) {
        throw Error(ErrorKind::Schema, ctx + ": non-finite field");
      }
      if (std::abs(s.direction.norm() - 1.0) > 1e-6) {
        throw Error(ErrorKind::NonUnitDirection,
                    ctx + ": direction norm " + std::to_string(s.direction.norm()) + " is not 1");
      }
      if (s.energy < 0.0 || s.energy > 1.0) {
        throw Error(ErrorKind::EnergyOutOfRange, ctx + ": energy " + std::to_string(s.energy) +
                                                   " outside [0, 1]");
      }
      if (!f.poses.target_poses.count(s.target_id)) {
        throw Error(ErrorKind::DanglingTarget,
                    ctx + ": references unknown target " + std::to_string(s.target_id));
      }
    }
  }
}

std::string dataset_to_string(const CalibDataset & d)
{
  json frames = json::array();
  for (const Frame & f : d.frames) {
    json targets = json::array();
    for (const auto & [tid, p] : f.poses.target_poses) {
      json t = transform_json(p);
      t["target_id"] = tid;
      targets.push_back(std::move(t));
    }
    json obs = json::array();
    for (const auto & o : f.observations) {
      obs.push_back({{"target_id", o.target_id},
                     {"lidar_center", vec_json(o.lidar_center)},
                     {"radar_range", o.radar_range},
                     {"radar_azimuth", o.radar_azimuth}});
    }
    json samples = json::array();
    for (const auto & s : f.samples) {
      samples.push_back({{"target_id", s.target_id},
                         {"position", vec_json(s.position)},
                         {"direction", vec_json(s.direction)},
                         {"energy", s.energy}});
    }
    frames.push_back({{"id", f.id},
                      {"lidar_pose", transform_json(f.poses.lidar_pose)},
                      {"target_poses", std::move(targets)},
                      {"observations", std::move(obs)},
                      {"samples", std::move(samples)}});
  }
  json root = {{"format", kFormat}, {"version", kVersion}, {"frames", std::move(frames)}};
  if (d.ground_truth) {
    root["ground_truth"] = {{"extrinsics", transform_json(*d.ground_truth)}};
  }
  return root.dump(1) + "\n";
}

CalibDataset dataset_from_string(const std::string & text)
{
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error & e) {
    throw Error(ErrorKind::Schema, std::string("dataset: parse error: ") + e.what());
  }
  if (!root.is_object() || root.value("format", "") != kFormat) {
    throw Error(ErrorKind::Schema, "dataset: missing or wrong 'format' tag");
  }
  if (integer(root, "version", "dataset") != kVersion) {
    throw Error(ErrorKind::Schema, "dataset: unsupported version");
  }
  const json & frames = field(root, "frames", "dataset");
  if (!frames.is_array()) {
    throw Error(ErrorKind::Schema, "dataset.frames: expected an array");
  }
  CalibDataset d;
  for (std::size_t fi = 0; fi < frames.size(); ++fi) {
    const json & jf = frames[fi];
    const std::string fctx = "frame[" + std::to_string(fi) + "]";
    Frame f;
    f.id = integer(jf, "id", fctx);
    f.poses.lidar_pose = pose_from(field(jf, "lidar_pose", fctx), fctx + ".lidar_pose");
    const json & tp = field(jf, "target_poses", fctx);
    for (std::size_t i = 0; i < tp.size(); ++i) {
      const std::string ctx = where(fi, "target_poses", i);
      const int tid = integer(tp[i], "target_id", ctx);
      if (!f.poses.target_poses.emplace(tid, pose_from(tp[i], ctx)).second) {
        throw Error(ErrorKind::Schema, ctx + ": duplicate target id");
      }
    }
    const json & obs = field(jf, "observations", fctx);
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const std::string ctx = where(fi, "observations", i);
      LidarTargetObservation o;
      o.target_id = integer(obs[i], "target_id", ctx);
      o.lidar_center = vec_from(field(obs[i], "lidar_center", ctx), ctx + ".lidar_center");
      o.radar_range = number(obs[i], "radar_range", ctx);
      o.radar_azimuth = number(obs[i], "radar_azimuth", ctx);
      f.observations.push_back(o);
    }
    const json & samples = field(jf, "samples", fctx);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const std::string ctx = where(fi, "samples", i);
      RadarSample s;
      s.target_id = integer(samples[i], "target_id", ctx);
      s.position = vec_from(field(samples[i], "position", ctx), ctx + ".position");
      s.direction = vec_from(field(samples[i], "direction", ctx), ctx + ".direction");
      s.energy = number(samples[i], "energy", ctx);
      f.samples.push_back(s);
    }
    d.frames.push_back(std::move(f));
  }
  if (root.contains("ground_truth")) {
    const Pose p = pose_from(field(root["ground_truth"], "extrinsics", "ground_truth"),
                             "ground_truth.extrinsics");
    d.ground_truth = Extrinsics(p.rotation, p.translation);
  }
  validate(d);
  return d;
}

void save_dataset(const CalibDataset & d, const std::string & path)
{
  validate(d);
  std::ofstream f(path);
  if (!f) {
    throw Error(ErrorKind::Io, "cannot write " + path);
  }
  f << dataset_to_string(d);
}

CalibDataset load_dataset(const std::string & path)
{
  std::ifstream f(path);
  if (!f) {
    throw Error(ErrorKind::Io, "cannot read " + path);
  }
  std::stringstream ss;
  ss << f.rdbuf();
  return dataset_from_string(ss.str());
}

bool operator==(const RigidTransform & a, const RigidTransform & b)
{
  return a.rotation.vector() == b.rotation.vector() && a.translation == b.translation;
}

bool operator==(const CalibDataset & a, const CalibDataset & b)
{
  if (a.frames.size() != b.frames.size() || a.ground_truth.has_value() != b.ground_truth.has_value()) {
    return false;
  }
  if (a.ground_truth && !(*a.ground_truth == *b.ground_truth)) {
    return false;
  }
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    const Frame & fa = a.frames[i];
    const Frame & fb = b.frames[i];
    if (fa.id != fb.id || !(fa.poses.lidar_pose == fb.poses.lidar_pose) ||
        fa.poses.target_poses.size() != fb.poses.target_poses.size() ||
        fa.observations.size() != fb.observations.size() || fa.samples.size() != fb.samples.size())
    {
      return false;
    }
    for (const auto & [tid, p] : fa.poses.target_poses) {
      auto it = fb.poses.target_poses.find(tid);
      if (it == fb.poses.target_poses.end() || !(it->second == p)) return false;
    }
    for (std::size_t k = 0; k < fa.observations.size(); ++k) {
      const auto & x = fa.observations[k];
      const auto & y = fb.observations[k];
      if (x.target_id != y.target_id || x.lidar_center != y.lidar_center ||
          x.radar_range != y.radar_range || x.radar_azimuth != y.radar_azimuth)
      {
        return false;
      }
    }
    for (std::size_t k = 0; k < fa.samples.size(); ++k) {
      const auto & x = fa.samples[k];
      const auto & y = fb.samples[k];
      if (x.target_id != y.target_id || x.position != y.position || x.direction != y.direction ||
          x.energy != y.energy)
      {
        return false;
      }
    }
  }
  return true;
}

}  // namespace rlcalib
