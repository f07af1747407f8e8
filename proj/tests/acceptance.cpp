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


// Acceptance suite. Prints one PASS/FAIL line per criterion and exits 0 only
// when the set of failing criteria equals the --expect-fail set.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rlcalib/autodiff.hpp"
#include "rlcalib/geometry.hpp"
#include "rlcalib/losses.hpp"
#include "rlcalib/optimizer.hpp"
#include "rlcalib/pipeline.hpp"
#include "rlcalib/simulator.hpp"
#include "support.hpp"

#ifndef RLCALIB_CLI_PATH
#error "RLCALIB_CLI_PATH must point at the rlcalib executable"
#endif

namespace
{

using namespace rlcalib;
using Clock = std::chrono::steady_clock;

struct Outcome
{
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char * f, double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Scene used by the calibration criteria: the default layout. The network
// uses a shallow encoding; see the README for why.
constexpr int kCalibDepth = 2;

CalibConfig calib_config(const Extrinsics & init)
{
  CalibConfig c;
  c.encoding.depth = kCalibDepth;
  c.initial = init;
  return c;
}

std::array<double, 6> abs_diff(const std::array<double, 6> & a, const std::array<double, 6> & b)
{
  std::array<double, 6> d{};
  for (int k = 0; k < 6; ++k) d[k] = std::abs(a[k] - b[k]);
  return d;
}

// ------------------------------------------------------------------ 1

Outcome gradient_correctness()
{
  const auto t0 = Clock::now();
  const SyntheticDataset ds = testing::small_scene(3, 3, 2);
  const LossProblem problem(ds.data, 0.6);
  const PositionalEncoding enc;  // default depth
  const MlpWeights w = init_weights(1, enc);
  const Extrinsics e = perturb(ds.truth, 2.0, 0.03, 9);
  const auto r = testing::objective_grad_check(ds.data, problem, e, w, LossWeights{}, TargetGeometry{}, 1e-5);
  const double secs = seconds_since(t0);
  const bool all = r.coordinates == w.parameter_count() + 6 && r.value_mismatch < 1e-9;
  Outcome o;
  o.pass = all && r.max_rel_error < 1e-4 && secs < 60.0;
  o.detail = "max rel err " + fmt("%.2e", r.max_rel_error) + " over " + std::to_string(r.coordinates) +
             " coords, " + fmt("%.1f", secs) + " s";
  return o;
}

// ------------------------------------------------------------------ 2

Outcome synthetic_recovery()
{
  const auto t0 = Clock::now();
  int ok = 0;
  double worst_rot = 0.0, worst_trans = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SyntheticDataset ds = generate(default_scene(seed));
    CalibConfig c = calib_config(perturb(ds.truth, 3.0, 0.05, seed + 100));
    const CalibrationResult r = run_calibration(ds.data, c);
    const auto d = abs_diff(r.table_row(), parameter_row(ds.truth));
    const double rot = std::max({d[0], d[1], d[2]});
    const double trans = std::max({d[3], d[4], d[5]});
    worst_rot = std::max(worst_rot, rot);
    worst_trans = std::max(worst_trans, trans);
    if (rot < 0.5 && trans < 0.02) ++ok;
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = ok == 10 && secs < 600.0;
  o.detail = std::to_string(ok) + "/10 seeds, worst " + fmt("%.3f", worst_rot) + " deg / " +
             fmt("%.4f", worst_trans) + " m, " + fmt("%.0f", secs) + " s";
  return o;
}

// ------------------------------------------------------------------ 3

Outcome observability()
{
  const SyntheticDataset ds = generate(default_scene(0));
  const Extrinsics init = perturb(ds.truth, 3.0, 0.05, 7);
  const auto variants = ablation_configs(calib_config(init));
  auto config_of = [&](const std::string & name) {
    for (const auto & [n, c] : variants)
      if (n == name) return c;
    throw Error(ErrorKind::InvalidArgument, name);
  };
  const MonteCarloResult rep = monte_carlo(ds.data, config_of("rep"), 100, 0.5, 7);
  const MonteCarloResult rep_ray = monte_carlo(ds.data, config_of("rep+ray"), 100, 0.5, 7);
  const MonteCarloResult mlp_ray = monte_carlo(ds.data, config_of("mlp+ray"), 100, 0.5, 7);

  // table order: theta_x, theta_y, theta_z, t_x, t_y, t_z
  const auto & q = rep.quantiles;
  const bool pairs = q[3].iqr() < q[5].iqr() && q[4].iqr() < q[0].iqr() && q[2].iqr() < q[1].iqr();
  const double shrink = 1.0 - mlp_ray.quantiles[5].iqr() / rep_ray.quantiles[5].iqr();
  const bool complete = rep.completed == 100 && rep_ray.completed == 100 && mlp_ray.completed == 100;
  Outcome o;
  o.pass = complete && pairs && shrink >= 0.30;
  o.detail = "rep IQR t_x " + fmt("%.4f", q[3].iqr()) + " < t_z " + fmt("%.4f", q[5].iqr()) + ", t_y " +
             fmt("%.4f", q[4].iqr()) + " < th_x " + fmt("%.3f", q[0].iqr()) + ", th_z " + fmt("%.3f", q[2].iqr()) +
             " < th_y " + fmt("%.3f", q[1].iqr()) + "; IQR t_z rep+ray " + fmt("%.4f", rep_ray.quantiles[5].iqr()) +
             " -> mlp+ray " + fmt("%.4f", mlp_ray.quantiles[5].iqr()) + " (" + fmt("%.0f", 100 * shrink) +
             "% shrink)";
  return o;
}

// ------------------------------------------------------------------ 4

Outcome boundary()
{
  const SyntheticDataset ds = generate(default_scene(0));
  const TargetGeometry geom;
  const double truth = boundary_check(ds.truth, ds.data, geom).violation_fraction;
  Extrinsics bent = ds.truth;
  EulerAngles e = to_euler(ds.truth.rotation);
  e.degrees.y() += 3.0;
  bent.rotation = from_euler(e);
  const double corrupted = boundary_check(bent, ds.data, geom).violation_fraction;
  Outcome o;
  o.pass = truth <= 0.05 && corrupted > truth;
  o.detail = "violations " + fmt("%.3f", truth) + " at truth, " + fmt("%.3f", corrupted) + " with +3 deg theta_y";
  return o;
}

// ------------------------------------------------------------------ 5

Outcome encoding_benefit()
{
  int ok = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SceneSpec spec = default_scene(seed);
    spec.energy.sigma_angle = deg2rad(1.0);
    const SyntheticDataset ds = generate(spec);
    const auto samples = target_samples(ds.data, ds.truth, spec.sampling_radius);
    const PositionalEncoding enc;
    const EncodingComparison c = compare_positional_encoding(samples, samples, enc.depth, 2000, 0.005, seed);
    const double ratio = c.with_pe.mean_error() / c.without_pe.mean_error();
    worst = std::max(worst, ratio);
    if (ratio <= 0.5) ++ok;
  }
  Outcome o;
  o.pass = ok == 5;
  o.detail = std::to_string(ok) + "/5 seeds, worst PE-on/PE-off error ratio " + fmt("%.3f", worst);
  return o;
}

// ------------------------------------------------------------------ 6

Outcome fixed_point()
{
  SceneSpec spec = default_scene(0);
  spec.energy.noise = 0.0;
  spec.lidar_noise = 0.0;
  spec.quantize = false;
  const SyntheticDataset ds = generate(spec);
  const auto truth = parameter_row(ds.truth);
  bool pass = true;
  std::string detail;
  for (const auto & [name, c] : ablation_configs(calib_config(ds.truth))) {
    const auto d = abs_diff(run_calibration(ds.data, c).table_row(), truth);
    const double rot = std::max({d[0], d[1], d[2]});
    const double trans = std::max({d[3], d[4], d[5]});
    const bool ok = rot < 0.1 && trans < 0.005;
    pass = pass && ok;
    detail += (detail.empty() ? "" : ", ") + name + " " + fmt("%.3f", rot) + " deg/" + fmt("%.4f", trans) + " m" +
              (ok ? "" : " (moved)");
  }
  return {pass, detail};
}

// ------------------------------------------------------------------ 7

Outcome hinge_zero()
{
  const SyntheticDataset ds = generate(default_scene(0));
  const TargetGeometry geom;
  double max_d = 0.0;
  for (const Frame & f : ds.data.frames) {
    for (const LidarTargetObservation & o : f.observations) {
      max_d = std::max(max_d, ray_distance(ds.truth, f.poses.lidar_pose, f.poses.target_poses.at(o.target_id),
                                           detection_ray(o)));
    }
  }
  const LossProblem problem(ds.data, 0.6);
  const ad::Builder f = [&](ad::Tape &, const std::vector<ad::Var> & v) {
    LossWeights w;
    w.rep = 0.0;
    w.mlp = 0.0;
    return problem.evaluate(v[0], v[1], nullptr, nullptr, w, geom).total;
  };
  const std::vector<ad::Matrix> point{ds.truth.rotation.vector().transpose(), ds.truth.translation.transpose()};
  ad::Tape tape;
  const double loss = f(tape, {tape.constant(point[0]), tape.constant(point[1])}).scalar();
  double grad = 0.0;
  for (const ad::Matrix & g : ad::gradient(f, point)) grad = std::max(grad, g.cwiseAbs().maxCoeff());
  double scalar = 0.0;
  for (const Frame & fr : ds.data.frames)
    for (const LidarTargetObservation & o : fr.observations)
      scalar = std::max(scalar, ray_pass_loss(ds.truth, fr.poses.lidar_pose, fr.poses.target_poses.at(o.target_id),
                                              detection_ray(o), geom));
  Outcome o;
  o.pass = max_d < geom.radius && loss == 0.0 && grad == 0.0 && scalar == 0.0;
  o.detail = "max ray distance " + fmt("%.3f", max_d) + " m < r; loss " + fmt("%g", loss) + ", max |grad| " +
             fmt("%g", grad);
  return o;
}

// ------------------------------------------------------------ CLI helpers

std::string read_file(const std::filesystem::path & p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string & cmd)
{
  const int rc = std::system(cmd.c_str());
  return rc;
}

std::filesystem::path scratch_dir(const char * name)
{
  auto dir = std::filesystem::temp_directory_path() / (std::string("rlcalib_acceptance_") + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// ------------------------------------------------------------------ 8

Outcome determinism()
{
  const auto dir = scratch_dir("determinism");
  const std::string cli = RLCALIB_CLI_PATH;
  const std::string data = (dir / "data.json").string();
  if (run(cli + " simulate --seed 5 --frames 12 --samples-per-target 8 --out " + data + " > /dev/null") != 0) {
    return {false, "simulate failed"};
  }
  std::string out[2];
  for (int i = 0; i < 2; ++i) {
    const auto tag = std::to_string(i);
    const std::string cmd = cli + " calibrate " + data + " --set iterations=300 --set seed=3" +
                            " --set 'init_translation=[0.5,-0.25,0.05]'" + " --report " +
                            (dir / ("report" + tag + ".tsv")).string() + " --history " +
                            (dir / ("history" + tag + ".tsv")).string() + " --weights-out " +
                            (dir / ("weights" + tag + ".txt")).string() + " > " +
                            (dir / ("stdout" + tag + ".txt")).string();
    if (run(cmd) != 0) return {false, "calibrate failed"};
  }
  std::size_t bytes = 0;
  bool same = true;
  for (const char * stem : {"report", "history", "weights", "stdout"}) {
    const std::string ext = std::string(stem) == "report" || std::string(stem) == "history" ? ".tsv" : ".txt";
    const std::string a = read_file(dir / (std::string(stem) + "0" + ext));
    const std::string b = read_file(dir / (std::string(stem) + "1" + ext));
    same = same && !a.empty() && a == b;
    bytes += a.size();
  }
  const std::string report = read_file(dir / "report0.tsv");
  const bool stamped = report.find("# config: {") != std::string::npos && report.find("# seed: 3") != std::string::npos;
  std::filesystem::remove_all(dir);
  return {same && stamped, std::to_string(bytes) + " bytes compared across report, history, weights, stdout"};
}

// ------------------------------------------------------------------ 9

Outcome geometry_suite()
{
  std::mt19937_64 rng(2024);
  const int n = 1000;
  double exp_log = 0.0, euler = 0.0, group = 0.0, sph = 0.0;
  std::uniform_real_distribution<double> ang(-179.0, 179.0), pitch(-85.0, 85.0);
  for (int i = 0; i < n; ++i) {
    const Vec3 w = testing::random_rotation(rng, kPi - 1e-3);
    exp_log = std::max(exp_log, (log_so3(exp_so3(w)).vector() - w).norm());

    const Vec3 e(ang(rng), pitch(rng), ang(rng));
    euler = std::max(euler, (to_euler(from_euler(EulerAngles{e, false})).degrees - e).cwiseAbs().maxCoeff());

    const Pose a = testing::random_pose(rng), b = testing::random_pose(rng), c = testing::random_pose(rng);
    const Pose l = compose(compose(a, b), c), r = compose(a, compose(b, c));
    const Pose id = compose(a, invert(a));
    group = std::max({group, (l.rotation_matrix() - r.rotation_matrix()).cwiseAbs().maxCoeff(),
                      (l.translation - r.translation).cwiseAbs().maxCoeff(),
                      (id.rotation_matrix() - Mat3::Identity()).cwiseAbs().maxCoeff(),
                      id.translation.cwiseAbs().maxCoeff()});

    const Vec3 x = testing::random_vector(rng, 50.0);
    sph = std::max(sph, std::abs(to_spherical(x).range - x.norm()) / x.norm());
  }
  Outcome o;
  o.pass = exp_log < 1e-7 && euler < 1e-9 && group < 1e-10 && sph < 1e-12;
  o.detail = std::to_string(n) + " cases each: exp/log " + fmt("%.1e", exp_log) + ", Euler " + fmt("%.1e", euler) +
             ", SE(3) " + fmt("%.1e", group) + ", spherical " + fmt("%.1e", sph);
  return o;
}

// ----------------------------------------------------------------- 10

Outcome table_format()
{
  const auto dir = scratch_dir("ablate");
  const std::string cli = RLCALIB_CLI_PATH;
  const std::string data = (dir / "data.json").string();
  if (run(cli + " simulate --seed 1 --frames 12 --samples-per-target 8 --out " + data + " > /dev/null") != 0) {
    return {false, "simulate failed"};
  }
  const auto out = dir / "ablate.txt";
  if (run(cli + " ablate " + data + " --set iterations=100 --set pe_depth=2" +
          " --set 'init_euler_deg=[0,0,0]' --set 'init_translation=[0.50,-0.25,0.05]' > " + out.string()) != 0)
  {
    return {false, "ablate failed"};
  }
  std::istringstream lines(read_file(out));
  std::filesystem::remove_all(dir);
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream cells(line);
    std::string name, cell;
    std::getline(cells, name, '\t');
    std::vector<double> v;
    while (std::getline(cells, cell, '\t')) v.push_back(std::stod(cell));
    names.push_back(name);
    values.push_back(v);
  }
  const std::vector<std::string> want{"initial", "rep", "mlp", "mlp+ray", "rep+ray"};
  bool ok = names == want;
  for (const auto & v : values) ok = ok && v.size() == 6;
  ok = ok && values.front() == std::vector<double>{0, 0, 0, 0.50, -0.25, 0.05};
  std::string shown;
  for (const auto & n : names) shown += (shown.empty() ? "" : ", ") + n;
  return {ok, "rows {" + shown + "}, initial row echoes (0, 0, 0, 0.50, -0.25, 0.05)"};
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"rlcalib acceptance suite"};
  std::vector<int> only, expect_fail;
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  app.add_option("--expect-fail", expect_fail, "Criteria known to fail; the exit code tolerates exactly these")
    ->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char *, std::function<Outcome()>>> criteria{
    {"gradient correctness", gradient_correctness},
    {"synthetic recovery", synthetic_recovery},
    {"observability asymmetry", observability},
    {"boundary check", boundary},
    {"positional-encoding benefit", encoding_benefit},
    {"fixed point", fixed_point},
    {"hinge correctness", hinge_zero},
    {"determinism", determinism},
    {"geometry suite", geometry_suite},
    {"table format", table_format},
  };

  std::set<int> failed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception & e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) failed.insert(id);
    std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ": "
              << o.detail << std::endl;
  }

  std::set<int> expected;
  for (int id : expect_fail) {
    if (only.empty() || std::find(only.begin(), only.end(), id) != only.end()) expected.insert(id);
  }
  if (failed != expected) {
    std::cout << "unexpected outcome: failing set differs from the expected-failure set" << std::endl;
    return 1;
  }
  return 0;
}
