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

#include "rlcalib/optimizer.hpp"

#include <cmath>
#include <limits>

namespace rlcalib
{

Adam::Adam(std::map<std::string, double> group_lr, AdamOptions options)
: lr_(std::move(group_lr)), opt_(options)
{
  for (const auto & [g, lr] : lr_) {
    if (!(lr >= 0.0) || !std::isfinite(lr)) {
      throw Error(ErrorKind::InvalidArgument, "learning rate for group '" + g + "' is invalid");
    }
  }
}

double Adam::learning_rate(const std::string & group) const
{
  const auto it = lr_.find(group);
  if (it == lr_.end()) {
    throw Error(ErrorKind::InvalidArgument, "unknown parameter group '" + group + "'");
  }
  return it->second;
}

void Adam::step(std::vector<Parameter> & params, const std::vector<ad::Matrix> & grads)
{
  if (params.size() != grads.size()) {
    throw Error(ErrorKind::InvalidArgument, "adam: parameter/gradient count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].rows() != params[i].value.rows() || grads[i].cols() != params[i].value.cols()) {
      throw Error(ErrorKind::InvalidArgument, "adam: gradient shape mismatch for " + params[i].name);
    }
    if (!grads[i].allFinite()) {
      throw Error(ErrorKind::PoisonedValue, "adam: non-finite gradient for parameter " + params[i].name);
    }
    learning_rate(params[i].group);
  }
  if (m_.empty()) {
    for (const Parameter & p : params) {
      m_.push_back(ad::Matrix::Zero(p.value.rows(), p.value.cols()));
      v_.push_back(ad::Matrix::Zero(p.value.rows(), p.value.cols()));
    }
  } else if (m_.size() != params.size()) {
    throw Error(ErrorKind::InvalidArgument, "adam: parameter set changed between steps");
  }

  ++t_;
  const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double lr = learning_rate(params[i].group);
    m_[i] = opt_.beta1 * m_[i] + (1.0 - opt_.beta1) * grads[i];
    v_[i] = opt_.beta2 * v_[i] + (1.0 - opt_.beta2) * grads[i].cwiseAbs2();
    const auto m_hat = m_[i].array() / bc1;
    const auto v_hat = v_[i].array() / bc2;
    params[i].value.array() -= lr * m_hat / (v_hat.sqrt() + opt_.epsilon);
  }
}

// ---------------------------------------------------------------------------

std::array<double, 6> parameter_row(const Extrinsics & e)
{
  const Vec3 d = to_euler(e.rotation).degrees;
  return {d.x(), d.y(), d.z(), e.translation.x(), e.translation.y(), e.translation.z()};
}

std::array<double, 6> CalibrationResult::table_row() const { return parameter_row(final_extrinsics); }

namespace
{

struct Evaluation
{
  LossBreakdown loss;
  std::vector<ad::Matrix> grads;
};

Evaluation evaluate(const LossProblem & problem, const CalibConfig & config,
                    const std::vector<Parameter> & params, bool with_grad)
{
  ad::Tape tape;
  const ad::Var rot = tape.leaf(params[0].value, with_grad);
  const ad::Var trans = tape.leaf(params[1].value, with_grad);
  const bool use_mlp = params.size() > 2;
  MlpWeights shape;
  MlpVars vars;
  if (use_mlp) {
    shape.encoding = config.encoding;
    for (std::size_t i = 0; i < MlpWeights::kLayers; ++i) {
      vars.weight[i] = tape.leaf(params[2 + 2 * i].value, with_grad);
      vars.bias[i] = tape.leaf(params[3 + 2 * i].value, with_grad);
    }
  }
  const auto terms = problem.evaluate(rot, trans, use_mlp ? &vars : nullptr,
                                      use_mlp ? &shape : nullptr, config.weights, config.target);
  Evaluation ev;
  ev.loss.total = terms.total.scalar();
  if (terms.rep.valid()) ev.loss.rep = terms.rep.scalar();
  if (terms.mlp.valid()) ev.loss.mlp = terms.mlp.scalar();
  if (terms.ray.valid()) ev.loss.ray = terms.ray.scalar();
  if (with_grad) {
    tape.backward(terms.total);
    ev.grads.push_back(rot.grad());
    ev.grads.push_back(trans.grad());
    if (use_mlp) {
      for (std::size_t i = 0; i < MlpWeights::kLayers; ++i) {
        ev.grads.push_back(vars.weight[i].grad());
        ev.grads.push_back(vars.bias[i].grad());
      }
    }
  }
  return ev;
}

Extrinsics extrinsics_of(const std::vector<Parameter> & params)
{
  return Extrinsics(AxisAngle(Vec3(params[0].value.row(0).transpose())),
                    Vec3(params[1].value.row(0).transpose()));
}

}  // namespace

CalibrationResult run_calibration(const CalibDataset & dataset, const CalibConfig & config,
                                  const StepCallback & on_step)
{
  config.weights.validate();
  if (config.iterations < 0) {
    throw Error(ErrorKind::InvalidArgument, "iterations must be non-negative");
  }
  const LossProblem problem(dataset, config.sampling_radius);

  std::vector<Parameter> params;
  params.push_back({"rotation", "rotation", config.initial.rotation.vector().transpose()});
  params.push_back({"translation", "translation", config.initial.translation.transpose()});
  const bool use_mlp = config.weights.mlp > 0.0;
  if (use_mlp) {
    const MlpWeights init = init_weights(config.seed, config.encoding);
    for (std::size_t i = 0; i < MlpWeights::kLayers; ++i) {
      const std::string idx = std::to_string(i);
      params.push_back({"mlp.weight" + idx, "mlp", init.layers[i].weight});
      params.push_back({"mlp.bias" + idx, "mlp", init.layers[i].bias});
    }
  }
  Adam adam({{"rotation", config.lr.rotation},
             {"translation", config.lr.translation},
             {"mlp", config.lr.mlp}});

  CalibrationResult result;
  result.initial = config.initial;
  // The L1 terms make the loss oscillate; the result is the best iterate seen.
  std::vector<Parameter> best_params = params;
  double best_loss = std::numeric_limits<double>::infinity();
  Extrinsics last_finite = config.initial;
  std::vector<double> best;
  best.reserve(static_cast<std::size_t>(config.iterations));
  double best_so_far = std::numeric_limits<double>::infinity();

  for (int step = 0; step < config.iterations; ++step) {
    Evaluation ev;
    try {
      ev = evaluate(problem, config, params, true);
      last_finite = extrinsics_of(params);
      if (ev.loss.total < best_loss) {
        best_loss = ev.loss.total;
        best_params = params;
      }
      adam.step(params, ev.grads);
    } catch (const Error & e) {
      if (e.kind() != ErrorKind::PoisonedValue) throw;
      throw DivergenceError(std::string("calibration diverged at step ") + std::to_string(step) +
                              ": " + e.what(),
                            step, last_finite);
    }
    // Keep the rotation vector canonical.
    params[0].value = AxisAngle(Vec3(params[0].value.row(0).transpose())).vector().transpose();

    StepRecord rec;
    rec.step = step;
    rec.loss = ev.loss;
    if (step == 0) result.initial_loss = ev.loss;
    const Extrinsics current = extrinsics_of(params);
    rec.euler_deg = to_euler(current.rotation).degrees;
    rec.translation = current.translation;
    result.history.push_back(rec);
    if (on_step) on_step(rec);
    ++result.iterations;

    best_so_far = std::min(best_so_far, ev.loss.total);
    best.push_back(best_so_far);
    const int w = config.plateau_window;
    if (w > 0 && step >= w) {
      const double before = best[static_cast<std::size_t>(step - w)];
      if (before - best_so_far < config.plateau_tolerance * std::abs(before)) {
        result.plateau_stop = true;
        break;
      }
    }
  }

  try {
    result.final_loss = evaluate(problem, config, params, false).loss;
  } catch (const Error & e) {
    if (e.kind() != ErrorKind::PoisonedValue) throw;
    throw DivergenceError(std::string("final loss is not finite: ") + e.what(), result.iterations,
                          extrinsics_of(best_params));
  }
  if (result.final_loss.total < best_loss) {
    best_params = params;
  } else {
    result.final_loss = evaluate(problem, config, best_params, false).loss;
  }
  params = std::move(best_params);
  result.final_extrinsics = extrinsics_of(params);
  result.final_euler = to_euler(result.final_extrinsics.rotation);
  if (config.iterations == 0) result.initial_loss = result.final_loss;
  if (use_mlp) {
    MlpWeights w = MlpWeights::zeros(config.encoding);
    for (std::size_t i = 0; i < MlpWeights::kLayers; ++i) {
      w.layers[i].weight = params[2 + 2 * i].value;
      w.layers[i].bias = params[3 + 2 * i].value;
    }
    result.mlp = std::move(w);
  }
  return result;
}

FitResult fit_mlp(const std::vector<TargetLocalSample> & samples, const PositionalEncoding & enc,
                  int steps, double lr, std::uint64_t seed)
{
  if (samples.empty()) {
    throw Error(ErrorKind::InvalidArgument, "fit_mlp: no samples");
  }
  const auto n = static_cast<ad::Index>(samples.size());
  ad::Matrix pos(n, 3), dir(n, 3), energy(n, 1);
  for (ad::Index i = 0; i < n; ++i) {
    const auto & s = samples[static_cast<std::size_t>(i)];
    pos.row(i) = s.position.transpose();
    dir.row(i) = s.direction.transpose();
    energy(i, 0) = s.energy;
  }
  const MlpWeights init = init_weights(seed, enc);
  std::vector<Parameter> params;
  for (std::size_t i = 0; i < MlpWeights::kLayers; ++i) {
    params.push_back({"mlp.weight" + std::to_string(i), "mlp", init.layers[i].weight});
    params.push_back({"mlp.bias" + std::to_string(i), "mlp", init.layers[i].bias});
  }
  Adam adam({{"mlp", lr}});

  // Features do not depend on the weights; encode once.
  ad::Matrix features;
  {
    ad::Tape tape;
    features = encode_features(tape.constant(pos), tape.constant(dir), enc).value();
  }

  auto loss_at = [&](bool with_grad, std::vector<ad::Matrix> * grads) {
    ad::Tape tape;
    MlpVars vars;
    for (std::size_t i = 0; i < MlpWeights::kLayers; ++i) {
      vars.weight[i] = tape.leaf(params[2 * i].value, with_grad);
      vars.bias[i] = tape.leaf(params[2 * i + 1].value, with_grad);
    }
    const ad::Var pred = mlp_forward(vars, tape.constant(features));
    const ad::Var loss = ad::mean(ad::abs(ad::sub(pred, tape.constant(energy))));
    if (with_grad) {
      tape.backward(loss);
      grads->clear();
      for (std::size_t i = 0; i < MlpWeights::kLayers; ++i) {
        grads->push_back(vars.weight[i].grad());
        grads->push_back(vars.bias[i].grad());
      }
    }
    return loss.scalar();
  };

  std::vector<ad::Matrix> grads;
  for (int s = 0; s < steps; ++s) {
    loss_at(true, &grads);
    adam.step(params, grads);
  }
  FitResult out;
  out.weights = MlpWeights::zeros(enc);
  for (std::size_t i = 0; i < MlpWeights::kLayers; ++i) {
    out.weights.layers[i].weight = params[2 * i].value;
    out.weights.layers[i].bias = params[2 * i + 1].value;
  }
  out.final_loss = loss_at(false, nullptr);
  return out;
}

}  // namespace rlcalib
