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


#include <array>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rlcalib/config.hpp"
#include "rlcalib/dataset.hpp"
#include "rlcalib/error.hpp"
#include "rlcalib/geometry.hpp"
#include "rlcalib/optimizer.hpp"
#include "rlcalib/pipeline.hpp"
#include "rlcalib/simulator.hpp"

namespace py = pybind11;
using namespace rlcalib;

namespace
{

using Row = std::array<double, 6>;
using Triple = std::array<double, 3>;

Vec3 vec(const Triple & v) { return {v[0], v[1], v[2]}; }
Triple triple(const Vec3 & v) { return {v.x(), v.y(), v.z()}; }

Extrinsics make_extrinsics(const Triple & euler_deg, const Triple & translation)
{
  return Extrinsics(from_euler(EulerAngles{vec(euler_deg), false}), vec(translation));
}

py::dict loss_dict(const LossBreakdown & l)
{
  py::dict d;
  d["total"] = l.total;
  d["rep"] = l.rep;
  d["mlp"] = l.mlp;
  d["ray"] = l.ray;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
  m.doc() = "RADAR-LIDAR extrinsic calibration";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  py::class_<Extrinsics>(m, "Extrinsics")
    .def(py::init(&make_extrinsics), py::arg("euler_deg") = Triple{0, 0, 0},
         py::arg("translation") = Triple{0, 0, 0})
    .def_property_readonly("euler_deg", [](const Extrinsics & e) { return triple(to_euler(e.rotation).degrees); })
    .def_property_readonly("rotation_vector", [](const Extrinsics & e) { return triple(e.rotation.vector()); })
    .def_property_readonly("translation", [](const Extrinsics & e) { return triple(e.translation); })
    .def("row", &parameter_row)
    .def("__repr__", [](const Extrinsics & e) {
      const Row r = parameter_row(e);
      std::string s = "Extrinsics(";
      for (std::size_t i = 0; i < r.size(); ++i) s += (i ? ", " : "") + format_double(r[i]);
      return s + ")";
    });

  py::class_<CalibDataset>(m, "Dataset")
    .def_property_readonly("frame_count", [](const CalibDataset & d) { return d.frames.size(); })
    .def_property_readonly("observation_count", &CalibDataset::observation_count)
    .def_property_readonly("sample_count", &CalibDataset::sample_count)
    .def_property_readonly("ground_truth", [](const CalibDataset & d) { return d.ground_truth; })
    .def("to_string", &dataset_to_string)
    .def("save", [](const CalibDataset & d, const std::string & path) { save_dataset(d, path); })
    .def("__eq__", [](const CalibDataset & a, const CalibDataset & b) { return a == b; });

  m.def("load_dataset", &load_dataset, py::arg("path"));
  m.def("dataset_from_string", &dataset_from_string, py::arg("text"));

  m.def(
    "simulate",
    [](std::uint64_t seed, int frames, int targets, int samples_per_target, double energy_noise,
       double lidar_noise, bool quantize) {
      SceneLayout layout;
      layout.frames = frames;
      layout.targets = targets;
      SceneSpec spec = default_scene(seed, layout);
      spec.samples_per_target = samples_per_target;
      spec.energy.noise = energy_noise;
      spec.lidar_noise = lidar_noise;
      spec.quantize = quantize;
      SyntheticDataset ds = generate(spec);
      return py::make_tuple(ds.data, ds.truth, ds.warnings);
    },
    py::arg("seed") = 0, py::arg("frames") = 30, py::arg("targets") = 3, py::arg("samples_per_target") = 24,
    py::arg("energy_noise") = 0.01, py::arg("lidar_noise") = 0.005, py::arg("quantize") = true,
    "Generate the default synthetic scene. Returns (dataset, truth, warnings).");

  m.def("perturb", &perturb, py::arg("extrinsics"), py::arg("rot_deg"), py::arg("trans_m"), py::arg("seed"));

  m.def(
    "config",
    [](const std::string & text, const std::vector<std::string> & overrides) {
      const CalibConfig c = parse_config(text, overrides);
      c.validate();
      return config_to_string(c);
    },
    py::arg("text") = "{}", py::arg("overrides") = std::vector<std::string>{},
    "Resolve a JSON config plus key=value overrides; returns the resolved JSON.");

  m.def(
    "calibrate",
    [](const CalibDataset & data, const std::string & config, const std::vector<std::string> & overrides) {
      const CalibConfig c = parse_config(config, overrides);
      c.validate();
      CalibrationResult r;
      {
        py::gil_scoped_release release;
        r = run_calibration(data, c);
      }
      py::dict out;
      out["parameters"] = r.table_row();
      out["extrinsics"] = r.final_extrinsics;
      out["initial_loss"] = loss_dict(r.initial_loss);
      out["final_loss"] = loss_dict(r.final_loss);
      out["iterations"] = r.iterations;
      out["plateau_stop"] = r.plateau_stop;
      return out;
    },
    py::arg("dataset"), py::arg("config") = "{}", py::arg("overrides") = std::vector<std::string>{},
    "Run a calibration; parameters are (theta_x, theta_y, theta_z) in degrees and (t_x, t_y, t_z) in meters.");

  m.def(
    "ablate",
    [](const CalibDataset & data, const std::string & config, const std::vector<std::string> & overrides) {
      const CalibConfig c = parse_config(config, overrides);
      AblationTable t;
      {
        py::gil_scoped_release release;
        t = run_ablation(data, c);
      }
      std::vector<std::pair<std::string, Row>> rows;
      for (const AblationRow & r : t.rows) rows.emplace_back(r.name, r.parameters);
      return rows;
    },
    py::arg("dataset"), py::arg("config") = "{}", py::arg("overrides") = std::vector<std::string>{});

  m.def(
    "boundary_violation_fraction",
    [](const Extrinsics & e, const CalibDataset & data, double radius) {
      return boundary_check(e, data, TargetGeometry{radius}).violation_fraction;
    },
    py::arg("extrinsics"), py::arg("dataset"), py::arg("target_radius") = 0.3);

  m.attr("PARAMETER_NAMES") = std::vector<std::string>(kParameterNames.begin(), kParameterNames.end());
}
