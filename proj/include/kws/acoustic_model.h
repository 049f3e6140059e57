// include/kws/acoustic_model.h

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

#ifndef KWS_ACOUSTIC_MODEL_H_
#define KWS_ACOUSTIC_MODEL_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kws/features.h"

namespace kws {

// Ordered phone inventory; "SIL" is always index 0.
class PhoneSet {
 public:
  PhoneSet() = default;
  // `phones` must start with SIL and contain no duplicates.
  explicit PhoneSet(std::vector<std::string> phones);

  int size() const { return static_cast<int>(phones_.size()); }
  const std::string &Symbol(int index) const { return phones_[index]; }
  const std::vector<std::string> &symbols() const { return phones_; }
  // Throws kUnknownPhone.
  int Index(const std::string &symbol) const;
  bool Contains(const std::string &symbol) const { return index_.count(symbol) > 0; }

 private:
  std::vector<std::string> phones_;
  std::map<std::string, int> index_;
};

// Per-frame phone probabilities, T x |phones|.
struct PosteriorMatrix {
  std::string utt_id;
  float frame_shift = 0.01f;
  Eigen::MatrixXd probs;
};

// utt_id -> per-frame phone indices.
using FrameLabels = std::map<std::string, std::vector<int>>;

// Text format: one line per utterance, `utt_id idx idx ...`.
FrameLabels ReadFrameLabels(const std::string &path);
void WriteFrameLabels(const FrameLabels &labels, const std::string &path);

struct TrainOptions {
  std::vector<int> hidden_dims = {128};
  double learning_rate = 0.1;
  double momentum = 0.9;
  int epochs = 30;
  int batch_size = 64;
  uint64_t seed = 0;
};

struct TrainStats {
  double initial_loss = 0.0;  // mean cross-entropy before the first update
  double final_loss = 0.0;
  double frame_accuracy = 0.0;  // on the training frames, after training
};

// Feed-forward frame classifier: tanh hidden layers, softmax output, plus the
// phone priors used for the hybrid likelihood conversion.
class FrameClassifier {
 public:
  struct Layer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;
  };

  FrameClassifier() = default;
  // Hidden weights are Glorot-uniform from `seed`; the output layer starts at
  // zero, giving exactly uniform posteriors.
  FrameClassifier(const PhoneSet &phones, int input_dim, const std::vector<int> &hidden_dims,
                  uint64_t seed);

  const PhoneSet &phones() const { return phones_; }
  int input_dim() const { return input_dim_; }
  int output_dim() const { return phones_.size(); }
  const std::vector<Layer> &layers() const { return layers_; }
  const Eigen::VectorXd &priors() const { return priors_; }
  void set_priors(const Eigen::VectorXd &priors) { priors_ = priors; }

  // Rows of x are frames. Returns rows of softmax probabilities.
  Eigen::MatrixXd Forward(const Eigen::MatrixXd &x) const;
  // Mean cross-entropy of `labels` under Forward(x).
  double Loss(const Eigen::MatrixXd &x, const std::vector<int> &labels) const;
  // Analytic gradient of Loss, flattened in the order of GetParams.
  Eigen::VectorXd Gradient(const Eigen::MatrixXd &x, const std::vector<int> &labels) const;

  // All weights then biases, layer by layer.
  Eigen::VectorXd GetParams() const;
  void SetParams(const Eigen::VectorXd &params);
  int NumParams() const;

  // Throws kDimMismatch if feats.num_cols != input_dim().
  PosteriorMatrix Posteriors(const FeatureMatrix &feats) const;

  // Versioned binary: topology header, phone symbols, f32 parameters, f64
  // priors. Parameters are kept float-representable so a loaded model
  // reproduces the in-memory one exactly.
  void Write(const std::string &path) const;
  static FrameClassifier Read(const std::string &path);
  std::string Encode() const;
  static FrameClassifier Decode(const std::string &bytes);

 private:
  PhoneSet phones_;
  int input_dim_ = 0;
  std::vector<Layer> layers_;
  Eigen::VectorXd priors_;
};

// Mini-batch SGD with momentum on frame cross-entropy. Deterministic for a
// given seed. Throws kEmptyTrainingSet when there are no frames and
// kDimMismatch on label length, label range or feature dim problems.
FrameClassifier TrainClassifier(const std::vector<FeatureMatrix> &feats, const FrameLabels &labels,
                                const PhoneSet &phones, const TrainOptions &opts,
                                TrainStats *stats = nullptr);

// log(post + 1e-10) - log(prior). Throws kZeroPrior on a non-positive prior.
Eigen::MatrixXd ScaledLoglikes(const PosteriorMatrix &post, const Eigen::VectorXd &priors);

}  // namespace kws

#endif  // KWS_ACOUSTIC_MODEL_H_
