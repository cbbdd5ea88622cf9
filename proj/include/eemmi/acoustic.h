// eemmi/acoustic.h

// Copyright 2026  eemmi contributors

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

#ifndef EEMMI_ACOUSTIC_H_
#define EEMMI_ACOUSTIC_H_

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "eemmi/common.h"
#include "eemmi/inventory.h"
#include "eemmi/lm.h"
#include "eemmi/mmi-loss.h"

namespace eemmi {

struct FeatureSequence {
  MatrixD frames;  // T x D
  std::string utt_id;
  std::string speaker_id;

  int NumFrames() const { return static_cast<int>(frames.rows()); }
  int Dim() const { return static_cast<int>(frames.cols()); }
};

inline constexpr double kVarianceFloor = 1e-8;

/// Per speaker and dimension: zero mean, unit population variance over all
/// of that speaker's frames. Returns one warning per floored dimension.
std::vector<std::string> SpeakerNormalize(std::span<FeatureSequence> utts);

/// Row t holds frames t-F..t+F concatenated, edges replicated.
MatrixD ExtractWindows(const MatrixD &frames, int context);

struct DenseLayer {
  MatrixD weight;  // out x in
  VectorD bias;
};

/// Feed-forward tanh network over windowed features with a log-softmax
/// output layer.
class AcousticNet {
 public:
  AcousticNet() = default;

  /// Glorot-uniform weights, zero biases.
  static AcousticNet Random(int input_dim, const std::vector<int> &hidden, int num_states,
                            std::uint64_t seed);
  static AcousticNet Zero(int input_dim, const std::vector<int> &hidden, int num_states);

  int InputDim() const { return static_cast<int>(layers_.front().weight.cols()); }
  int OutputDim() const { return static_cast<int>(layers_.back().weight.rows()); }
  int NumParameters() const;
  std::vector<int> HiddenSizes() const;

  struct Activations {
    std::vector<MatrixD> inputs;  // input of each layer
    MatrixD log_posteriors;
  };

  /// T x L log posteriors. Throws kShapeMismatch on a width mismatch.
  MatrixD Forward(const MatrixD &windows) const;
  Activations ForwardWithActivations(const MatrixD &windows) const;

  /// Gradient of the loss w.r.t. the flattened parameters given
  /// d loss / d log_posteriors; passes through the log-softmax.
  VectorD Backward(const Activations &act, const MatrixD &grad_y) const;

  VectorD Flatten() const;
  void Unflatten(const VectorD &theta);

  std::vector<DenseLayer> &Layers() { return layers_; }
  const std::vector<DenseLayer> &Layers() const { return layers_; }

 private:
  std::vector<DenseLayer> layers_;
};

enum class LossKind { kMmi, kCtc };
const char *ToString(LossKind kind);
LossKind ParseLossKind(const std::string &name);

/// Network, HMM parameters and the feature layout they expect.
struct AcousticModel {
  AcousticNet net;
  ModelParameters params;
  int feature_dim = 0;
  int context = 0;
};

/// Binary checkpoint, little-endian: magic "EEMMICK1", u32 feature_dim,
/// u32 context, u32 L, u32 layer count, per layer u32 out and u32 in, then
/// per layer the f64 weights (row-major) and biases, then L f64 transition
/// logits, L f64 prior logits and the L x L f64 state LM.
void WriteCheckpoint(std::ostream &os, const AcousticModel &model);
AcousticModel ReadCheckpoint(std::istream &is);
void WriteCheckpointFile(const std::string &path, const AcousticModel &model);
AcousticModel ReadCheckpointFile(const std::string &path);

struct TrainConfig {
  double learning_rate = 1e-3;
  double clip_norm = 50.0;
  int batch_size = 8;
  int epochs = 20;
  double valid_fraction = 0.05;
  std::uint64_t seed = 1;        // initialization and batch order
  std::uint64_t split_seed = 0;  // train/validation split; 0 reuses `seed`
  int shift_interval = kDefaultShiftInterval;
  int context = 5;
  std::vector<int> hidden = {128, 128};
  StateLmKind train_lm = StateLmKind::kBigram;
  double lm_smoothing = kDefaultStateLmSmoothing;
  // Halve the rate after `decay_patience` epochs without a better
  // validation PER; stop after `stop_patience`.
  int decay_patience = 2;
  int stop_patience = 4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void Validate() const;
};

struct TrainingUtterance {
  std::string utt_id;
  MatrixD windows;
  Transcript transcript;

  int NumFrames() const { return static_cast<int>(windows.rows()); }
};

struct AdamState {
  VectorD m, v;
  long step = 0;
};

struct StepResult {
  bool ok = true;
  double loss = 0;       // summed over the batch
  double grad_norm = 0;  // before clipping
  std::string diagnostic;
};

/// Summed loss and gradient of one utterance w.r.t. the flattened
/// [net, transition logits, prior logits] vector.
double UtteranceLossAndGrad(const AcousticModel &model, const TrainingUtterance &utt,
                            LossKind kind, int shift_interval, VectorD *grad);

/// Scales `grad` so its Euclidean norm is at most `clip_norm`; returns the
/// norm before scaling.
double ClipGlobalNorm(VectorD &grad, double clip_norm);

/// One ADAM ascent step on the summed batch objective. MMI also moves the
/// transition and prior logits; CTC leaves them alone. A non-finite loss
/// aborts the step without touching the model.
StepResult TrainStep(AcousticModel &model, AdamState &adam,
                     std::span<const TrainingUtterance *const> batch, const TrainConfig &config,
                     LossKind kind, double learning_rate);

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0;
  double valid_loss = 0;
  double valid_per = 0;
  double lr = 0;
};

struct TrainResult {
  AcousticModel model;  // best validation PER seen
  std::vector<EpochMetrics> metrics;
  std::vector<std::string> train_ids, valid_ids;
};

/// Seeded train/validation split, length-sorted mini-batches, per-epoch
/// metrics (epoch 0 is the untrained model). The state LM is estimated from
/// the training transcripts. Validation PER uses PhoneLoopPhonemes for MMI
/// and GreedyPhonemes for CTC.
TrainResult Train(const std::vector<TrainingUtterance> &corpus, int num_states,
                  const TrainConfig &config, LossKind kind);

/// Greedy phoneme sequence: per-frame argmax, merged, reserved states dropped.
std::vector<StateId> GreedyPhonemes(const MatrixD &log_posteriors);
/// Phonemes of the best unconstrained state path under the HMM and state LM
/// (the denominator lattice), merged, reserved states dropped.
std::vector<StateId> PhoneLoopPhonemes(const MatrixD &log_posteriors, const ModelParameters &params);

void WriteMetricsCsv(std::ostream &os, const std::vector<EpochMetrics> &metrics);

}  // namespace eemmi

#endif  // EEMMI_ACOUSTIC_H_
