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

#include "rlcalib/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

namespace rlcalib
{

int PositionalEncoding::features_per_scalar() const
{
  if (!enabled) {
    return 1;
  }
  return 2 * depth + (include_input ? 1 : 0);
}

void PositionalEncoding::validate() const
{
  if (enabled && depth <= 0) {
    throw Error(ErrorKind::InvalidArgument, "positional encoding depth must be positive");
  }
}

void MlpWeights::validate() const
{
  encoding.validate();
  const std::array<int, kLayers + 1> dims{encoding.input_dim(), kHidden, kHidden, kHidden, 1};
  for (int i = 0; i < kLayers; ++i) {
    const auto & l = layers[static_cast<std::size_t>(i)];
    if (l.weight.rows() != dims[static_cast<std::size_t>(i)] ||
        l.weight.cols() != dims[static_cast<std::size_t>(i) + 1] || l.bias.size() != l.weight.cols())
    {
      throw Error(ErrorKind::InvalidArgument,
                  "mlp layer " + std::to_string(i) + " shape does not match the encoding");
    }
  }
}

std::size_t MlpWeights::parameter_count() const
{
  std::size_t n = 0;
  for (const auto & l : layers) {
    n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  }
  return n;
}

MlpWeights MlpWeights::zeros(const PositionalEncoding & enc)
{
  enc.validate();
  MlpWeights w;
  w.encoding = enc;
  const std::array<int, kLayers + 1> dims{enc.input_dim(), kHidden, kHidden, kHidden, 1};
  for (std::size_t i = 0; i < kLayers; ++i) {
    w.layers[i].weight = ad::Matrix::Zero(dims[i], dims[i + 1]);
    w.layers[i].bias = ad::RowVector::Zero(dims[i + 1]);
  }
  return w;
}

std::vector<double> encode(double x, int depth)
{
  if (depth <= 0) {
    throw Error(ErrorKind::InvalidArgument, "encode: depth must be positive");
  }
  if (!std::isfinite(x)) {
    throw Error(ErrorKind::InvalidArgument, "encode: non-finite input");
  }
  std::vector<double> out;
  out.reserve(2 * static_cast<std::size_t>(depth));
  for (int i = 0; i < depth; ++i) {
    const double a = x * std::ldexp(kPi, i);
    out.push_back(std::sin(a));
    out.push_back(std::cos(a));
  }
  return out;
}

Eigen::VectorXd encode_sample(const TargetLocalSample & s, const PositionalEncoding & enc)
{
  enc.validate();
  Eigen::VectorXd out(enc.input_dim());
  const std::array<double, 6> raw{s.position.x(), s.position.y(), s.position.z(),
                                  s.direction.x(), s.direction.y(), s.direction.z()};
  Eigen::Index k = 0;
  for (double v : raw) {
    if (!enc.enabled) {
      out(k++) = v;
      continue;
    }
    if (enc.include_input) {
      out(k++) = v;
    }
    for (double e : encode(v, enc.depth)) {
      out(k++) = e;
    }
  }
  return out;
}

MlpWeights init_weights(std::uint64_t seed, const PositionalEncoding & enc)
{
  MlpWeights w = MlpWeights::zeros(enc);
  std::mt19937_64 rng(seed);
  for (auto & l : w.layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.weight.rows()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index j = 0; j < l.weight.size(); ++j) {
      l.weight(j) = dist(rng);
    }
    for (Eigen::Index j = 0; j < l.bias.size(); ++j) {
      l.bias(j) = dist(rng);
    }
  }
  return w;
}

MlpVars mlp_leaves(ad::Tape & tape, const MlpWeights & w, bool requires_grad)
{
  w.validate();
  MlpVars v;
  for (std::size_t i = 0; i < MlpWeights::kLayers; ++i) {
    v.weight[i] = tape.leaf(w.layers[i].weight, requires_grad);
    v.bias[i] = tape.leaf(w.layers[i].bias, requires_grad);
  }
  return v;
}

ad::Var encode_features(const ad::Var & positions, const ad::Var & directions,
                        const PositionalEncoding & enc)
{
  enc.validate();
  if (positions.cols() != 3 || directions.cols() != 3 || positions.rows() != directions.rows()) {
    throw Error(ErrorKind::InvalidArgument, "encode_features: expects matching Nx3 inputs");
  }
  const ad::Var raw = ad::hconcat({positions, directions});
  if (!enc.enabled) {
    return raw;
  }
  const int depth = enc.depth;
  // Column j * depth + i of `scaled` holds raw_j * 2^i * pi.
  std::vector<ad::Index> repeat;
  ad::RowVector freq(6 * depth);
  for (int j = 0; j < 6; ++j) {
    for (int i = 0; i < depth; ++i) {
      repeat.push_back(j);
      freq(j * depth + i) = std::ldexp(kPi, i);
    }
  }
  const ad::Var scaled = ad::scale_cols(ad::gather_cols(raw, repeat), freq);
  const ad::Index base = enc.include_input ? 6 : 0;
  std::vector<ad::Var> parts;
  if (enc.include_input) {
    parts.push_back(raw);
  }
  parts.push_back(ad::sin(scaled));
  parts.push_back(ad::cos(scaled));
  const ad::Var stacked = ad::hconcat(parts);

  std::vector<ad::Index> order;
  order.reserve(static_cast<std::size_t>(enc.input_dim()));
  const ad::Index n = 6 * depth;
  for (int j = 0; j < 6; ++j) {
    if (enc.include_input) {
      order.push_back(j);
    }
    for (int i = 0; i < depth; ++i) {
      order.push_back(base + j * depth + i);
      order.push_back(base + n + j * depth + i);
    }
  }
  return ad::gather_cols(stacked, order);
}

ad::Var mlp_forward(const MlpVars & vars, const ad::Var & features)
{
  ad::Var h = features;
  for (std::size_t i = 0; i < MlpWeights::kLayers; ++i) {
    if (h.cols() != vars.weight[i].rows()) {
      throw Error(ErrorKind::InvalidArgument, "mlp_forward: feature width does not match layer " +
                                                std::to_string(i));
    }
    h = ad::add_row(ad::matmul(h, vars.weight[i]), vars.bias[i]);
    if (i + 1 < MlpWeights::kLayers) {
      h = ad::relu(h);
    }
  }
  return h;
}

Eigen::VectorXd predict_energies(const MlpWeights & w, const ad::Matrix & positions,
                                 const ad::Matrix & directions)
{
  ad::Tape tape;
  const MlpVars vars = mlp_leaves(tape, w, false);
  const ad::Var feats =
    encode_features(tape.constant(positions), tape.constant(directions), w.encoding);
  return mlp_forward(vars, feats).value().col(0);
}

double predict_energy(const MlpWeights & w, const TargetLocalSample & s)
{
  return predict_energies(w, s.position.transpose(), s.direction.transpose())(0);
}

// ---------------------------------------------------------------------------

namespace
{

constexpr const char * kMagic = "rlcalib-mlp";

std::string hex(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_double(const std::string & tok)
{
  char * end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') {
    throw Error(ErrorKind::Schema, "weights: malformed number '" + tok + "'");
  }
  return v;
}

}  // namespace

std::string serialize_weights(const MlpWeights & w)
{
  w.validate();
  std::ostringstream os;
  os << kMagic << " 1\n";
  os << "encoding " << w.encoding.depth << ' ' << int(w.encoding.include_input) << ' '
     << int(w.encoding.enabled) << '\n';
  for (const auto & l : w.layers) {
    os << "layer " << l.weight.rows() << ' ' << l.weight.cols() << '\n';
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
        os << (c ? " " : "") << hex(l.weight(r, c));
      }
      os << '\n';
    }
    for (Eigen::Index c = 0; c < l.bias.size(); ++c) {
      os << (c ? " " : "") << hex(l.bias(c));
    }
    os << '\n';
  }
  return os.str();
}

MlpWeights deserialize_weights(const std::string & text)
{
  std::istringstream is(text);
  std::string tok;
  int version = 0;
  if (!(is >> tok >> version) || tok != kMagic || version != 1) {
    throw Error(ErrorKind::Schema, "weights: bad header");
  }
  PositionalEncoding enc;
  int inc = 0;
  int en = 0;
  if (!(is >> tok >> enc.depth >> inc >> en) || tok != "encoding") {
    throw Error(ErrorKind::Schema, "weights: bad encoding line");
  }
  enc.include_input = inc != 0;
  enc.enabled = en != 0;
  MlpWeights w = MlpWeights::zeros(enc);
  for (auto & l : w.layers) {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    if (!(is >> tok >> rows >> cols) || tok != "layer" || rows != l.weight.rows() ||
        cols != l.weight.cols())
    {
      throw Error(ErrorKind::Schema, "weights: layer shape mismatch");
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        if (!(is >> tok)) throw Error(ErrorKind::Schema, "weights: truncated file");
        l.weight(r, c) = parse_double(tok);
      }
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!(is >> tok)) throw Error(ErrorKind::Schema, "weights: truncated file");
      l.bias(c) = parse_double(tok);
    }
  }
  return w;
}

void save_weights(const MlpWeights & w, const std::string & path)
{
  std::ofstream f(path);
  if (!f) {
    throw Error(ErrorKind::Io, "cannot write " + path);
  }
  f << serialize_weights(w);
}

MlpWeights load_weights(const std::string & path)
{
  std::ifstream f(path);
  if (!f) {
    throw Error(ErrorKind::Io, "cannot read " + path);
  }
  std::stringstream ss;
  ss << f.rdbuf();
  return deserialize_weights(ss.str());
}

bool operator==(const MlpWeights & a, const MlpWeights & b)
{
  if (a.encoding.depth != b.encoding.depth || a.encoding.enabled != b.encoding.enabled ||
      a.encoding.include_input != b.encoding.include_input)
  {
    return false;
  }
  for (std::size_t i = 0; i < MlpWeights::kLayers; ++i) {
    if (a.layers[i].weight.rows() != b.layers[i].weight.rows() ||
        a.layers[i].weight.cols() != b.layers[i].weight.cols() ||
        a.layers[i].weight != b.layers[i].weight || a.layers[i].bias != b.layers[i].bias)
    {
      return false;
    }
  }
  return true;
}

}  // namespace rlcalib
