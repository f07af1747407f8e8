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


#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rlcalib/config.hpp"
#include "rlcalib/dataset.hpp"
#include "rlcalib/error.hpp"
#include "rlcalib/model.hpp"
#include "rlcalib/optimizer.hpp"
#include "rlcalib/pipeline.hpp"
#include "rlcalib/simulator.hpp"

namespace
{

using namespace rlcalib;

enum ExitCode
{
  kOk = 0,
  kUsage = 1,
  kData = 2,
  kNumeric = 3,
};

int exit_code(ErrorKind kind)
{
  switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::Config:
      return kUsage;
    case ErrorKind::Schema:
    case ErrorKind::EmptyDataset:
    case ErrorKind::NonUnitDirection:
    case ErrorKind::EnergyOutOfRange:
    case ErrorKind::DanglingTarget:
    case ErrorKind::Io:
      return kData;
    case ErrorKind::DegeneratePoint:
    case ErrorKind::PoisonedValue:
    case ErrorKind::Divergence:
      return kNumeric;
  }
  return kUsage;
}

struct ConfigArgs
{
  std::string path;
  std::vector<std::string> overrides;

  void attach(CLI::App * cmd)
  {
    cmd->add_option("--config", path, "JSON config file");
    cmd->add_option("--set", overrides, "Override a config key (key=value), repeatable");
  }

  CalibConfig resolve() const
  {
    CalibConfig c = path.empty() ? parse_config("{}", overrides) : load_config(path, overrides);
    c.validate();
    return c;
  }
};

void print_row(const std::array<double, 6> & row)
{
  for (std::size_t i = 0; i < row.size(); ++i) {
    std::cout << (i ? "\t" : "") << format_double(row[i]);
  }
  std::cout << "\n";
}

std::ofstream open_out(const std::string & path)
{
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
  return os;
}

template <class Writer>
void write_file(const std::string & path, Writer && w)
{
  if (path.empty()) return;
  std::ofstream os = open_out(path);
  w(os);
  if (!os) throw Error(ErrorKind::Io, "write to '" + path + "' failed");
}

void print_header()
{
  std::cout << "# ";
  for (std::size_t i = 0; i < kParameterNames.size(); ++i) {
    std::cout << (i ? "\t" : "") << kParameterNames[i];
  }
  std::cout << "\n";
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"RADAR-LIDAR extrinsic calibration", "rlcalib"};
  app.require_subcommand(1);

  // simulate
  struct
  {
    std::string out;
    std::uint64_t seed = 0;
    int frames = 30;
    int targets = 3;
    int samples_per_target = 24;
    double energy_noise = 0.01;
    double lidar_noise = 0.005;
    bool no_quantize = false;
  } sim;
  CLI::App * simulate = app.add_subcommand("simulate", "Generate a synthetic dataset");
  simulate->add_option("--out", sim.out, "Dataset file to write")->required();
  simulate->add_option("--seed", sim.seed, "Scene seed");
  simulate->add_option("--frames", sim.frames, "Robot poses")->check(CLI::Range(3, 100000));
  simulate->add_option("--targets", sim.targets, "Targets (1-5)")->check(CLI::Range(1, 5));
  simulate->add_option("--samples-per-target", sim.samples_per_target, "Grid cells kept per detection")
    ->check(CLI::PositiveNumber);
  simulate->add_option("--energy-noise", sim.energy_noise, "Energy noise sigma")->check(CLI::NonNegativeNumber);
  simulate->add_option("--lidar-noise", sim.lidar_noise, "LIDAR center noise sigma, meters")
    ->check(CLI::NonNegativeNumber);
  simulate->add_flag("--no-quantize", sim.no_quantize, "Keep exact detections");

  // calibrate
  std::string data_path;
  ConfigArgs cfg;
  std::string report_path, history_path, weights_out;
  CLI::App * calibrate = app.add_subcommand("calibrate", "Estimate the extrinsics of a dataset");
  calibrate->add_option("dataset", data_path, "Dataset file")->required();
  cfg.attach(calibrate);
  calibrate->add_option("--report", report_path, "Write the calibration report");
  calibrate->add_option("--history", history_path, "Write the per-step log");
  calibrate->add_option("--weights-out", weights_out, "Write the fitted network");

  // ablate
  CLI::App * ablate = app.add_subcommand("ablate", "Run the four loss configurations");
  ablate->add_option("dataset", data_path, "Dataset file")->required();
  cfg.attach(ablate);
  ablate->add_option("--report", report_path, "Write the ablation table");

  // montecarlo
  int runs = 100;
  double frac = 0.5;
  std::uint64_t mc_seed = 0;
  CLI::App * montecarlo = app.add_subcommand("montecarlo", "Calibrate on random subsamples");
  montecarlo->add_option("dataset", data_path, "Dataset file")->required();
  cfg.attach(montecarlo);
  montecarlo->add_option("--runs", runs, "Number of runs")->check(CLI::PositiveNumber);
  montecarlo->add_option("--frac", frac, "Fraction of observations kept per run");
  montecarlo->add_option("--mc-seed", mc_seed, "Subsampling seed");
  montecarlo->add_option("--report", report_path, "Write per-run parameters and quantiles");

  // evaluate
  std::string out_dir = ".";
  std::string weights_in;
  bool use_truth = false;
  CLI::App * evaluate = app.add_subcommand("evaluate", "Write boundary, reprojection and regression reports");
  evaluate->add_option("dataset", data_path, "Dataset file")->required();
  cfg.attach(evaluate);
  evaluate->add_flag("--truth", use_truth, "Evaluate the dataset's ground truth instead of the config init");
  evaluate->add_option("--weights", weights_in, "Network checkpoint for the regression report");
  evaluate->add_option("--out-dir", out_dir, "Directory for the report files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp & e) {
    return app.exit(e);
  } catch (const CLI::ParseError & e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*simulate) {
      SceneLayout layout;
      layout.frames = sim.frames;
      layout.targets = sim.targets;
      SceneSpec spec = default_scene(sim.seed, layout);
      spec.samples_per_target = sim.samples_per_target;
      spec.energy.noise = sim.energy_noise;
      spec.lidar_noise = sim.lidar_noise;
      spec.quantize = !sim.no_quantize;
      const SyntheticDataset ds = generate(spec);
      for (const std::string & w : ds.warnings) std::cerr << "warning: " << w << "\n";
      save_dataset(ds.data, sim.out);
      print_header();
      print_row(parameter_row(ds.truth));
      return kOk;
    }

    const CalibConfig config = cfg.resolve();
    const CalibDataset data = load_dataset(data_path);

    if (*calibrate) {
      const CalibrationResult r = run_calibration(data, config);
      write_file(report_path, [&](std::ostream & os) { write_calibration(os, r, config); });
      write_file(history_path, [&](std::ostream & os) { write_history(os, r, config); });
      if (!weights_out.empty()) {
        if (!r.mlp) throw Error(ErrorKind::Config, "--weights-out: the regression term is disabled");
        save_weights(*r.mlp, weights_out);
      }
      print_header();
      print_row(r.table_row());
      return kOk;
    }

    if (*ablate) {
      const AblationTable t = run_ablation(data, config);
      write_file(report_path, [&](std::ostream & os) { write_ablation(os, t, config); });
      std::cout << "# config";
      for (const char * n : kParameterNames) std::cout << "\t" << n;
      std::cout << "\n";
      for (const AblationRow & row : t.rows) {
        std::cout << row.name;
        for (double v : row.parameters) std::cout << "\t" << format_double(v);
        std::cout << "\n";
      }
      return kOk;
    }

    if (*montecarlo) {
      const MonteCarloResult m = monte_carlo(data, config, runs, frac, mc_seed);
      write_file(report_path, [&](std::ostream & os) { write_monte_carlo(os, m, config, mc_seed, frac); });
      std::cout << "# completed " << m.completed << " of " << m.runs.size() << "\n";
      std::cout << "# parameter\tmin\tq1\tmedian\tq3\tmax\tiqr\n";
      for (std::size_t i = 0; i < kParameterNames.size(); ++i) {
        const Quantiles & q = m.quantiles[i];
        std::cout << kParameterNames[i] << "\t" << format_double(q.min) << "\t" << format_double(q.q1) << "\t"
                  << format_double(q.median) << "\t" << format_double(q.q3) << "\t" << format_double(q.max)
                  << "\t" << format_double(q.iqr()) << "\n";
      }
      for (const MonteCarloRun & run : m.runs) {
        if (run.skipped) std::cerr << "warning: run " << run.index << " skipped: " << run.reason << "\n";
      }
      return kOk;
    }

    if (*evaluate) {
      Extrinsics e = config.initial;
      if (use_truth) {
        if (!data.ground_truth) throw Error(ErrorKind::InvalidArgument, "--truth: dataset carries no ground truth");
        e = *data.ground_truth;
      }
      std::error_code ec;
      std::filesystem::create_directories(out_dir, ec);
      if (ec) throw Error(ErrorKind::Io, "cannot create '" + out_dir + "': " + ec.message());
      const std::filesystem::path dir(out_dir);

      const BoundaryReport b = boundary_check(e, data, config.target);
      write_file((dir / "boundary.tsv").string(), [&](std::ostream & os) { write_boundary(os, b, config); });
      const ReprojectionReport rep = reprojection_histogram(e, data);
      write_file((dir / "reprojection.tsv").string(),
                 [&](std::ostream & os) { write_reprojection(os, rep, config); });
      std::cout << "boundary_violation_fraction\t" << format_double(b.violation_fraction) << "\n";
      std::cout << "mean_range_error_m\t" << format_double(rep.mean_range_error()) << "\n";
      std::cout << "mean_azimuth_error_rad\t" << format_double(rep.mean_azimuth_error()) << "\n";
      if (!weights_in.empty()) {
        const MlpWeights w = load_weights(weights_in);
        const RegressionReport reg = regression_error_report(w, target_samples(data, e, config.sampling_radius));
        write_file((dir / "regression.tsv").string(),
                   [&](std::ostream & os) { write_regression(os, reg, config); });
        std::cout << "mean_regression_error\t" << format_double(reg.mean_error()) << "\n";
      }
      return kOk;
    }
  } catch (const DivergenceError & e) {
    std::cerr << "error (" << to_string(e.kind()) << ", step " << e.step() << "): " << e.what() << "\n";
    return kNumeric;
  } catch (const Error & e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
