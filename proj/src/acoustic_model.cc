// src/acoustic_model.cc

// Copyright 2026  The kws-engine Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "kws/acoustic_model.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "bytes.h"
#include "kws/error.h"
#include "kws/util.h"

namespace kws {

PhoneSet::PhoneSet(std::vector<std::string> phones) : phones_(std::move(phones)) {
  if (phones_.size() < 2) Fail(ErrorCode::kInvalidArgument, "phone set needs at least 2 symbols");
  if (phones_[0] != "SIL") Fail(ErrorCode::kInvalidArgument, "phone 0 must be SIL");
  for (int i = 0; i < size(); ++i)
    if (!index_.emplace(phones_[i], i).second)
      Fail(ErrorCode::kInvalidArgument, "duplicate phone " + phones_[i]);
}

int PhoneSet::Index(const std::string &symbol) const {
  auto it = index_.find(symbol);
  if (it == index_.end()) Fail(ErrorCode::kUnknownPhone, "unknown phone '" + symbol + "'");
  return it->second;
}

FrameLabels ReadFrameLabels(const std::string &path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorCode::kNotFound, path);
  FrameLabels labels;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    auto tok = SplitWhitespace(line);
    if (tok.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    std::vector<int> seq;
    seq.reserve(tok.size() - 1);
    for (size_t i = 1; i < tok.size(); ++i) seq.push_back(static_cast<int>(ParseInt(tok[i], where)));
    if (!labels.emplace(tok[0], std::move(seq)).second)
      Fail(ErrorCode::kDuplicateUttId, where + ": utterance '" + tok[0] + "' repeated");
  }
  return labels;
}

void WriteFrameLabels(const FrameLabels &labels, const std::string &path) {
  std::ostringstream os;
  for (const auto &[utt, seq] : labels) {
    os << utt;
    for (int p : seq) os << ' ' << p;
    os << '\n';
  }
  WriteFileBytes(path, os.str());
}

FrameClassifier::FrameClassifier(const PhoneSet &phones, int input_dim,
                                 const std::vector<int> &hidden_dims, uint64_t seed)
    : phones_(phones), input_dim_(input_dim) {
  if (input_dim <= 0) Fail(ErrorCode::kInvalidArgument, "input dim must be positive");
  std::mt19937_64 rng(DeriveSeed(seed, "am-init"));
  int in = input_dim;
  for (int h : hidden_dims) {
    if (h <= 0) Fail(ErrorCode::kInvalidArgument, "hidden dims must be positive");
    Layer layer;
    const double limit = std::sqrt(6.0 / (in + h));
    std::uniform_real_distribution<double> dist(-limit, limit);
    layer.weight.resize(h, in);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < in; ++c) layer.weight(r, c) = static_cast<float>(dist(rng));
    layer.bias = Eigen::VectorXd::Zero(h);
    layers_.push_back(std::move(layer));
    in = h;
  }
  Layer out;
  out.weight = Eigen::MatrixXd::Zero(phones.size(), in);
  out.bias = Eigen::VectorXd::Zero(phones.size());
  layers_.push_back(std::move(out));
  priors_ = Eigen::VectorXd::Constant(phones.size(), 1.0 / phones.size());
}

namespace {

void SoftmaxRows(Eigen::MatrixXd *z) {
  for (Eigen::Index r = 0; r < z->rows(); ++r) {
    auto row = z->row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

}  // namespace

Eigen::MatrixXd FrameClassifier::Forward(const Eigen::MatrixXd &x) const {
  Eigen::MatrixXd a = x;
  for (size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = a * layers_[l].weight.transpose();
    z.rowwise() += layers_[l].bias.transpose();
    if (l + 1 < layers_.size())
      a = z.array().tanh().matrix();
    else
      a = std::move(z);
  }
  SoftmaxRows(&a);
  return a;
}

double FrameClassifier::Loss(const Eigen::MatrixXd &x, const std::vector<int> &labels) const {
  const Eigen::MatrixXd p = Forward(x);
  double loss = 0.0;
  for (Eigen::Index r = 0; r < p.rows(); ++r) loss -= std::log(std::max(p(r, labels[r]), 1e-300));
  return loss / static_cast<double>(p.rows());
}

Eigen::VectorXd FrameClassifier::Gradient(const Eigen::MatrixXd &x,
                                          const std::vector<int> &labels) const {
  const size_t num_layers = layers_.size();
  std::vector<Eigen::MatrixXd> acts(num_layers + 1);
  acts[0] = x;
  for (size_t l = 0; l < num_layers; ++l) {
    Eigen::MatrixXd z = acts[l] * layers_[l].weight.transpose();
    z.rowwise() += layers_[l].bias.transpose();
    acts[l + 1] = l + 1 < num_layers ? Eigen::MatrixXd(z.array().tanh().matrix()) : z;
  }
  Eigen::MatrixXd delta = acts[num_layers];
  SoftmaxRows(&delta);
  for (Eigen::Index r = 0; r < delta.rows(); ++r) delta(r, labels[r]) -= 1.0;
  delta /= static_cast<double>(x.rows());

  std::vector<Eigen::MatrixXd> grad_w(num_layers);
  std::vector<Eigen::VectorXd> grad_b(num_layers);
  for (size_t l = num_layers; l-- > 0;) {
    grad_w[l] = delta.transpose() * acts[l];
    grad_b[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd back = delta * layers_[l].weight;
      delta = (back.array() * (1.0 - acts[l].array().square())).matrix();
    }
  }
  Eigen::VectorXd flat(NumParams());
  Eigen::Index pos = 0;
  for (size_t l = 0; l < num_layers; ++l) {
    // Row-major flattening of each weight matrix.
    for (Eigen::Index r = 0; r < grad_w[l].rows(); ++r)
      for (Eigen::Index c = 0; c < grad_w[l].cols(); ++c) flat[pos++] = grad_w[l](r, c);
    flat.segment(pos, grad_b[l].size()) = grad_b[l];
    pos += grad_b[l].size();
  }
  return flat;
}

int FrameClassifier::NumParams() const {
  Eigen::Index n = 0;
  for (const auto &l : layers_) n += l.weight.size() + l.bias.size();
  return static_cast<int>(n);
}

Eigen::VectorXd FrameClassifier::GetParams() const {
  Eigen::VectorXd flat(NumParams());
  Eigen::Index pos = 0;
  for (const auto &l : layers_) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat[pos++] = l.weight(r, c);
    flat.segment(pos, l.bias.size()) = l.bias;
    pos += l.bias.size();
  }
  return flat;
}

void FrameClassifier::SetParams(const Eigen::VectorXd &params) {
  if (params.size() != NumParams()) Fail(ErrorCode::kDimMismatch, "parameter vector size");
  Eigen::Index pos = 0;
  for (auto &l : layers_) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = params[pos++];
    l.bias = params.segment(pos, l.bias.size());
    pos += l.bias.size();
  }
}

PosteriorMatrix FrameClassifier::Posteriors(const FeatureMatrix &feats) const {
  if (feats.num_cols != input_dim_)
    Fail(ErrorCode::kDimMismatch, feats.utt_id + ": feature dim " + std::to_string(feats.num_cols) +
                                      ", model expects " + std::to_string(input_dim_));
  Eigen::MatrixXd x(feats.num_rows, feats.num_cols);
  for (int t = 0; t < feats.num_rows; ++t)
    for (int d = 0; d < feats.num_cols; ++d) x(t, d) = feats(t, d);
  PosteriorMatrix post;
  post.utt_id = feats.utt_id;
  post.frame_shift = feats.frame_shift;
  post.probs = Forward(x);
  return post;
}

namespace {
constexpr char kModelMagic[4] = {'K', 'W', 'A', 'M'};
constexpr uint32_t kModelVersion = 1;
}  // namespace

std::string FrameClassifier::Encode() const {
  std::string out(kModelMagic, 4);
  PutU32(&out, kModelVersion);
  PutU32(&out, static_cast<uint32_t>(input_dim_));
  PutU32(&out, static_cast<uint32_t>(layers_.size()));
  for (const auto &l : layers_) PutU32(&out, static_cast<uint32_t>(l.weight.rows()));
  PutU32(&out, static_cast<uint32_t>(phones_.size()));
  for (const auto &p : phones_.symbols()) {
    PutU16(&out, static_cast<uint16_t>(p.size()));
    out += p;
  }
  const Eigen::VectorXd params = GetParams();
  for (Eigen::Index i = 0; i < params.size(); ++i) PutF32(&out, static_cast<float>(params[i]));
  for (Eigen::Index i = 0; i < priors_.size(); ++i) PutF64(&out, priors_[i]);
  return out;
}

FrameClassifier FrameClassifier::Decode(const std::string &bytes) {
  ByteReader in(bytes, ErrorCode::kCorruptArchive, "model file");
  if (in.Str(4) != std::string(kModelMagic, 4)) in.Bad("bad magic");
  if (in.U32() != kModelVersion) in.Bad("unsupported version");
  FrameClassifier m;
  m.input_dim_ = static_cast<int>(in.U32());
  const uint32_t num_layers = in.U32();
  if (num_layers == 0 || num_layers > 64) in.Bad("bad layer count");
  std::vector<int> dims(num_layers);
  for (auto &d : dims) d = static_cast<int>(in.U32());
  const uint32_t num_phones = in.U32();
  std::vector<std::string> symbols(num_phones);
  for (auto &s : symbols) s = in.Str(in.U16());
  m.phones_ = PhoneSet(std::move(symbols));
  if (dims.back() != m.phones_.size()) in.Bad("output layer does not match phone set");
  int prev = m.input_dim_;
  for (int d : dims) {
    if (d <= 0 || static_cast<uint64_t>(d) * prev > bytes.size()) in.Bad("bad layer size");
    m.layers_.push_back({Eigen::MatrixXd::Zero(d, prev), Eigen::VectorXd::Zero(d)});
    prev = d;
  }
  Eigen::VectorXd params(m.NumParams());
  for (Eigen::Index i = 0; i < params.size(); ++i) params[i] = in.F32();
  m.SetParams(params);
  m.priors_.resize(num_phones);
  for (uint32_t i = 0; i < num_phones; ++i) m.priors_[i] = in.F64();
  if (!in.AtEnd()) in.Bad("trailing bytes");
  return m;
}

void FrameClassifier::Write(const std::string &path) const { WriteFileBytes(path, Encode()); }

FrameClassifier FrameClassifier::Read(const std::string &path) {
  return Decode(ReadFileBytes(path));
}

FrameClassifier TrainClassifier(const std::vector<FeatureMatrix> &feats, const FrameLabels &labels,
                                const PhoneSet &phones, const TrainOptions &opts,
                                TrainStats *stats) {
  size_t total = 0;
  int dim = -1;
  for (const auto &f : feats) {
    auto it = labels.find(f.utt_id);
    if (it == labels.end()) Fail(ErrorCode::kDimMismatch, f.utt_id + ": no frame labels");
    if (static_cast<int>(it->second.size()) != f.num_rows)
      Fail(ErrorCode::kDimMismatch, f.utt_id + ": " + std::to_string(it->second.size()) +
                                        " labels for " + std::to_string(f.num_rows) + " frames");
    for (int p : it->second)
      if (p < 0 || p >= phones.size())
        Fail(ErrorCode::kDimMismatch, f.utt_id + ": label " + std::to_string(p) + " out of range");
    if (dim >= 0 && f.num_cols != dim)
      Fail(ErrorCode::kDimMismatch, f.utt_id + ": inconsistent feature dim");
    dim = f.num_cols;
    total += static_cast<size_t>(f.num_rows);
  }
  if (total == 0) Fail(ErrorCode::kEmptyTrainingSet, "no training frames");

  Eigen::MatrixXd x(static_cast<Eigen::Index>(total), dim);
  std::vector<int> y(total);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(phones.size());
  Eigen::Index row = 0;
  for (const auto &f : feats) {
    const auto &seq = labels.at(f.utt_id);
    for (int t = 0; t < f.num_rows; ++t, ++row) {
      for (int d = 0; d < dim; ++d) x(row, d) = f(t, d);
      y[row] = seq[t];
      counts[seq[t]] += 1.0;
    }
  }

  FrameClassifier model(phones, dim, opts.hidden_dims, opts.seed);
  model.set_priors(counts / static_cast<double>(total));
  if (stats) stats->initial_loss = model.Loss(x, y);

  std::mt19937_64 rng(DeriveSeed(opts.seed, "am-shuffle"));
  std::vector<Eigen::Index> order(total);
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd params = model.GetParams();
  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(params.size());
  const size_t batch = static_cast<size_t>(std::max(1, opts.batch_size));
  Eigen::MatrixXd xb;
  std::vector<int> yb;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    // Fisher-Yates with our own draws so the order does not depend on the
    // standard library's shuffle.
    for (size_t i = total - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
    for (size_t start = 0; start < total; start += batch) {
      const size_t n = std::min(batch, total - start);
      xb.resize(static_cast<Eigen::Index>(n), dim);
      yb.resize(n);
      for (size_t i = 0; i < n; ++i) {
        xb.row(static_cast<Eigen::Index>(i)) = x.row(order[start + i]);
        yb[i] = y[order[start + i]];
      }
      velocity = opts.momentum * velocity - opts.learning_rate * model.Gradient(xb, yb);
      params += velocity;
      model.SetParams(params);
    }
  }
  // Round to the stored precision so the saved model equals this one.
  for (Eigen::Index i = 0; i < params.size(); ++i) params[i] = static_cast<float>(params[i]);
  model.SetParams(params);

  if (stats) {
    const Eigen::MatrixXd p = model.Forward(x);
    double loss = 0.0;
    size_t correct = 0;
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      loss -= std::log(std::max(p(r, y[r]), 1e-300));
      Eigen::Index best;
      p.row(r).maxCoeff(&best);
      if (best == y[r]) ++correct;
    }
    stats->final_loss = loss / static_cast<double>(total);
    stats->frame_accuracy = static_cast<double>(correct) / static_cast<double>(total);
  }
  return model;
}

Eigen::MatrixXd ScaledLoglikes(const PosteriorMatrix &post, const Eigen::VectorXd &priors) {
  if (post.probs.cols() != priors.size())
    Fail(ErrorCode::kDimMismatch, "posterior width does not match the prior vector");
  for (Eigen::Index i = 0; i < priors.size(); ++i)
    if (!(priors[i] > 0.0))
      Fail(ErrorCode::kZeroPrior, "prior of phone " + std::to_string(i) + " is not positive");
  Eigen::MatrixXd out(post.probs.rows(), post.probs.cols());
  for (Eigen::Index t = 0; t < out.rows(); ++t)
    for (Eigen::Index s = 0; s < out.cols(); ++s)
      out(t, s) = std::log(post.probs(t, s) + 1e-10) - std::log(priors[s]);
  return out;
}

}  // namespace kws
