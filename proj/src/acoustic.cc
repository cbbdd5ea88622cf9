// src/acoustic.cc

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

#include "eemmi/acoustic.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "eemmi/ctc-loss.h"
#include "eemmi/metrics.h"

namespace eemmi {

std::vector<std::string> SpeakerNormalize(std::span<FeatureSequence> utts) {
  std::vector<std::string> warnings;
  std::map<std::string, std::vector<FeatureSequence *>> by_speaker;
  for (auto &u : utts) by_speaker[u.speaker_id].push_back(&u);
  for (auto &[speaker, members] : by_speaker) {
    const Eigen::Index D = members.front()->frames.cols();
    VectorD sum = VectorD::Zero(D), sum_sq = VectorD::Zero(D);
    double n = 0;
    for (auto *u : members) {
      if (u->frames.cols() != D)
        throw Error(ErrorKind::kShapeMismatch, "speaker " + speaker + " mixes feature dims");
      sum += u->frames.colwise().sum().transpose();
      n += static_cast<double>(u->frames.rows());
    }
    if (n == 0) continue;
    VectorD mean = sum / n;
    for (auto *u : members)
      sum_sq += (u->frames.rowwise() - mean.transpose()).array().square().colwise().sum().matrix().transpose();
    VectorD var = sum_sq / n;
    for (Eigen::Index d = 0; d < D; ++d) {
      if (var(d) < kVarianceFloor) {
        warnings.push_back("speaker " + speaker + ": dimension " + std::to_string(d) +
                           " has variance below floor");
        var(d) = kVarianceFloor;
      }
    }
    VectorD inv_std = var.array().sqrt().inverse();
    for (auto *u : members)
      u->frames = ((u->frames.rowwise() - mean.transpose()).array().rowwise() *
                   inv_std.transpose().array()).matrix();
  }
  return warnings;
}

MatrixD ExtractWindows(const MatrixD &frames, int context) {
  if (context < 0) throw Error(ErrorKind::kValidation, "context must be >= 0");
  const Eigen::Index T = frames.rows(), D = frames.cols();
  const Eigen::Index width = (2 * context + 1) * D;
  MatrixD out(T, width);
  for (Eigen::Index t = 0; t < T; ++t)
    for (int o = -context; o <= context; ++o) {
      Eigen::Index src = std::clamp<Eigen::Index>(t + o, 0, T - 1);
      out.block(t, (o + context) * D, 1, D) = frames.row(src);
    }
  return out;
}

// ---------------------------------------------------------------------------

AcousticNet AcousticNet::Zero(int input_dim, const std::vector<int> &hidden, int num_states) {
  if (input_dim < 1 || num_states < 1)
    throw Error(ErrorKind::kValidation, "network dimensions must be positive");
  AcousticNet net;
  int in = input_dim;
  std::vector<int> sizes = hidden;
  sizes.push_back(num_states);
  for (int out : sizes) {
    if (out < 1) throw Error(ErrorKind::kValidation, "layer sizes must be positive");
    net.layers_.push_back({MatrixD::Zero(out, in), VectorD::Zero(out)});
    in = out;
  }
  return net;
}

AcousticNet AcousticNet::Random(int input_dim, const std::vector<int> &hidden, int num_states,
                                std::uint64_t seed) {
  AcousticNet net = Zero(input_dim, hidden, num_states);
  std::mt19937_64 rng(seed);
  for (auto &layer : net.layers_) {
    double r = std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
    std::uniform_real_distribution<double> dist(-r, r);
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = dist(rng);
  }
  return net;
}

int AcousticNet::NumParameters() const {
  Eigen::Index n = 0;
  for (const auto &l : layers_) n += l.weight.size() + l.bias.size();
  return static_cast<int>(n);
}

std::vector<int> AcousticNet::HiddenSizes() const {
  std::vector<int> sizes;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i)
    sizes.push_back(static_cast<int>(layers_[i].weight.rows()));
  return sizes;
}

AcousticNet::Activations AcousticNet::ForwardWithActivations(const MatrixD &windows) const {
  if (windows.cols() != InputDim())
    throw Error(ErrorKind::kShapeMismatch, "window width " + std::to_string(windows.cols()) +
                                               " != network input " + std::to_string(InputDim()));
  Activations act;
  MatrixD h = windows;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto &l = layers_[i];
    MatrixD z = h * l.weight.transpose();
    z.rowwise() += l.bias.transpose();
    act.inputs.push_back(std::move(h));
    if (i + 1 < layers_.size())
      h = z.array().tanh().matrix();
    else
      act.log_posteriors = LogSoftmaxRows(z);
  }
  return act;
}

MatrixD AcousticNet::Forward(const MatrixD &windows) const {
  return ForwardWithActivations(windows).log_posteriors;
}

VectorD AcousticNet::Backward(const Activations &act, const MatrixD &grad_y) const {
  // Through the log-softmax: dz = g - softmax * rowsum(g).
  VectorD row_sum = grad_y.rowwise().sum();
  MatrixD dz = grad_y - (act.log_posteriors.array().exp().colwise() * row_sum.array()).matrix();

  std::vector<VectorD> pieces(2 * layers_.size());
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const auto &l = layers_[i];
    MatrixD dw = dz.transpose() * act.inputs[i];
    pieces[2 * i] = Eigen::Map<const VectorD>(dw.data(), dw.size());
    pieces[2 * i + 1] = dz.colwise().sum().transpose();
    if (i > 0) {
      MatrixD dh = dz * l.weight;
      dz = (dh.array() * (1.0 - act.inputs[i].array().square())).matrix();
    }
  }
  VectorD grad(NumParameters());
  Eigen::Index off = 0;
  for (const auto &p : pieces) {
    grad.segment(off, p.size()) = p;
    off += p.size();
  }
  return grad;
}

VectorD AcousticNet::Flatten() const {
  VectorD theta(NumParameters());
  Eigen::Index off = 0;
  for (const auto &l : layers_) {
    theta.segment(off, l.weight.size()) = Eigen::Map<const VectorD>(l.weight.data(), l.weight.size());
    off += l.weight.size();
    theta.segment(off, l.bias.size()) = l.bias;
    off += l.bias.size();
  }
  return theta;
}

void AcousticNet::Unflatten(const VectorD &theta) {
  if (theta.size() != NumParameters())
    throw Error(ErrorKind::kShapeMismatch, "parameter vector has wrong length");
  Eigen::Index off = 0;
  for (auto &l : layers_) {
    Eigen::Map<VectorD>(l.weight.data(), l.weight.size()) = theta.segment(off, l.weight.size());
    off += l.weight.size();
    l.bias = theta.segment(off, l.bias.size());
    off += l.bias.size();
  }
}

const char *ToString(LossKind kind) { return kind == LossKind::kMmi ? "mmi" : "ctc"; }

LossKind ParseLossKind(const std::string &name) {
  if (name == "mmi") return LossKind::kMmi;
  if (name == "ctc") return LossKind::kCtc;
  throw Error(ErrorKind::kValidation, "unknown loss kind '" + name + "'");
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[8] = {'E', 'E', 'M', 'M', 'I', 'C', 'K', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void PutU32(std::ostream &os, std::uint32_t v) { os.write(reinterpret_cast<const char *>(&v), 4); }
void PutF64(std::ostream &os, const double *v, Eigen::Index n) {
  os.write(reinterpret_cast<const char *>(v), static_cast<std::streamsize>(n * 8));
}
std::uint32_t GetU32(std::istream &is) {
  std::uint32_t v = 0;
  if (!is.read(reinterpret_cast<char *>(&v), 4))
    throw Error(ErrorKind::kParse, "truncated checkpoint");
  return v;
}
void GetF64(std::istream &is, double *v, Eigen::Index n) {
  if (!is.read(reinterpret_cast<char *>(v), static_cast<std::streamsize>(n * 8)))
    throw Error(ErrorKind::kParse, "truncated checkpoint");
}

}  // namespace

void WriteCheckpoint(std::ostream &os, const AcousticModel &model) {
  const auto &layers = model.net.Layers();
  const int L = model.params.NumStates();
  os.write(kCheckpointMagic, 8);
  PutU32(os, static_cast<std::uint32_t>(model.feature_dim));
  PutU32(os, static_cast<std::uint32_t>(model.context));
  PutU32(os, static_cast<std::uint32_t>(L));
  PutU32(os, static_cast<std::uint32_t>(layers.size()));
  for (const auto &l : layers) {
    PutU32(os, static_cast<std::uint32_t>(l.weight.rows()));
    PutU32(os, static_cast<std::uint32_t>(l.weight.cols()));
  }
  for (const auto &l : layers) {
    PutF64(os, l.weight.data(), l.weight.size());
    PutF64(os, l.bias.data(), l.bias.size());
  }
  PutF64(os, model.params.transition_logits.data(), L);
  PutF64(os, model.params.prior_logits.data(), L);
  PutF64(os, model.params.state_lm.data(), static_cast<Eigen::Index>(L) * L);
  if (!os) throw Error(ErrorKind::kIo, "checkpoint write failed");
}

AcousticModel ReadCheckpoint(std::istream &is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw Error(ErrorKind::kParse, "not a checkpoint (bad magic)");
  AcousticModel model;
  model.feature_dim = static_cast<int>(GetU32(is));
  model.context = static_cast<int>(GetU32(is));
  const int L = static_cast<int>(GetU32(is));
  const std::uint32_t n_layers = GetU32(is);
  if (n_layers == 0 || n_layers > 64) throw Error(ErrorKind::kParse, "bad layer count");
  std::vector<std::pair<int, int>> shapes;
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    int out = static_cast<int>(GetU32(is));
    int in = static_cast<int>(GetU32(is));
    shapes.emplace_back(out, in);
  }
  std::vector<int> hidden;
  for (std::size_t i = 0; i + 1 < shapes.size(); ++i) hidden.push_back(shapes[i].first);
  if (shapes.back().first != L || shapes.front().second != (2 * model.context + 1) * model.feature_dim)
    throw Error(ErrorKind::kParse, "checkpoint header is inconsistent");
  model.net = AcousticNet::Zero(shapes.front().second, hidden, L);
  for (auto &l : model.net.Layers()) {
    GetF64(is, l.weight.data(), l.weight.size());
    GetF64(is, l.bias.data(), l.bias.size());
  }
  model.params.transition_logits.resize(L);
  model.params.prior_logits.resize(L);
  model.params.state_lm.resize(L, L);
  GetF64(is, model.params.transition_logits.data(), L);
  GetF64(is, model.params.prior_logits.data(), L);
  GetF64(is, model.params.state_lm.data(), static_cast<Eigen::Index>(L) * L);
  return model;
}

void WriteCheckpointFile(const std::string &path, const AcousticModel &model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::kIo, "cannot write " + path);
  WriteCheckpoint(os, model);
}

AcousticModel ReadCheckpointFile(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::kIo, "cannot open " + path);
  return ReadCheckpoint(is);
}

// ---------------------------------------------------------------------------

void TrainConfig::Validate() const {
  if (!(learning_rate > 0) || !(clip_norm > 0) || batch_size < 1 || epochs < 0 ||
      shift_interval < 1 || context < 0)
    throw Error(ErrorKind::kValidation, "training configuration values must be positive");
  if (!(valid_fraction > 0 && valid_fraction < 1))
    throw Error(ErrorKind::kValidation, "valid_fraction must lie in (0, 1)");
}

double UtteranceLossAndGrad(const AcousticModel &model, const TrainingUtterance &utt,
                            LossKind kind, int shift_interval, VectorD *grad) {
  const auto act = model.net.ForwardWithActivations(utt.windows);
  const int L = model.params.NumStates();
  const int n_net = model.net.NumParameters();
  double loss = 0;
  MatrixD grad_y;
  VectorD grad_hmm = VectorD::Zero(2 * L);
  if (kind == LossKind::kMmi) {
    auto out = MmiLossAndGrad<double>(act.log_posteriors, utt.transcript.gamma, model.params,
                                      shift_interval);
    loss = out.loss;
    grad_y = std::move(out.grad_y);
    grad_hmm << out.grad_transition_logits, out.grad_prior_logits;
  } else {
    auto lab = CtcLabeling::FromLabels(TranscriptPhonemes(utt.transcript));
    auto out = CtcLossAndGrad<double>(act.log_posteriors, lab);
    loss = out.loss;
    grad_y = std::move(out.grad_y);
  }
  if (grad) {
    grad->resize(n_net + 2 * L);
    grad->head(n_net) = model.net.Backward(act, grad_y);
    grad->tail(2 * L) = grad_hmm;
  }
  return loss;
}

double ClipGlobalNorm(VectorD &grad, double clip_norm) {
  double norm = grad.norm();
  if (norm > clip_norm) grad *= clip_norm / norm;
  return norm;
}

StepResult TrainStep(AcousticModel &model, AdamState &adam,
                     std::span<const TrainingUtterance *const> batch, const TrainConfig &config,
                     LossKind kind, double learning_rate) {
  StepResult res;
  if (batch.empty()) throw Error(ErrorKind::kValidation, "empty batch");
  const int L = model.params.NumStates();
  const int n_net = model.net.NumParameters();
  VectorD total = VectorD::Zero(n_net + 2 * L), g;
  for (const auto *utt : batch) {
    double loss = 0;
    try {
      loss = UtteranceLossAndGrad(model, *utt, kind, config.shift_interval, &g);
    } catch (const Error &e) {
      res.ok = false;
      res.diagnostic = utt->utt_id + ": " + e.what();
      return res;
    }
    if (!std::isfinite(loss) || !g.allFinite()) {
      res.ok = false;
      res.diagnostic = utt->utt_id + ": non-finite loss or gradient";
      return res;
    }
    res.loss += loss;
    total += g;
  }
  if (kind == LossKind::kCtc) total.tail(2 * L).setZero();
  res.grad_norm = ClipGlobalNorm(total, config.clip_norm);

  if (adam.m.size() != total.size()) {
    adam.m = VectorD::Zero(total.size());
    adam.v = VectorD::Zero(total.size());
    adam.step = 0;
  }
  ++adam.step;
  const double b1 = config.adam_beta1, b2 = config.adam_beta2;
  adam.m = b1 * adam.m + (1 - b1) * total;
  adam.v = b2 * adam.v + (1 - b2) * total.cwiseAbs2();
  const double c1 = 1 - std::pow(b1, static_cast<double>(adam.step));
  const double c2 = 1 - std::pow(b2, static_cast<double>(adam.step));
  VectorD update = learning_rate * (adam.m / c1).array() /
                   ((adam.v / c2).array().sqrt() + config.adam_epsilon);

  // Ascent: the objective is maximized.
  model.net.Unflatten(model.net.Flatten() + update.head(n_net));
  if (kind == LossKind::kMmi) {
    model.params.transition_logits += update.segment(n_net, L);
    model.params.prior_logits += update.tail(L);
  }
  return res;
}

std::vector<StateId> GreedyPhonemes(const MatrixD &log_posteriors) {
  std::vector<StateId> frames(log_posteriors.rows());
  for (Eigen::Index t = 0; t < log_posteriors.rows(); ++t) {
    Eigen::Index best = 0;
    for (Eigen::Index l = 1; l < log_posteriors.cols(); ++l)
      if (log_posteriors(t, l) > log_posteriors(t, best)) best = l;
    frames[t] = static_cast<StateId>(best);
  }
  std::vector<StateId> out;
  for (StateId s : CollapseStates(frames))
    if (!StateInventory::IsReserved(s)) out.push_back(s);
  return out;
}

std::vector<StateId> PhoneLoopPhonemes(const MatrixD &log_posteriors, const ModelParameters &params) {
  const int L = params.NumStates();
  internal::CheckGrid(log_posteriors, L, 1);
  const auto tl = MakeTransitionLogs<double>(params);
  const int T = static_cast<int>(log_posteriors.rows());
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> back(T + 1, L);
  VectorD delta = VectorD::Constant(L, LogZero<double>()), next(L);
  delta(kStartState) = 0;
  for (int t = 1; t <= T; ++t) {
    for (int j = 0; j < L; ++j) {
      double best = delta(j) + tl.log_self(j);
      int arg = j;
      for (int i = 0; i < L; ++i) {
        if (i == j) continue;
        double v = delta(i) + tl.log_exit(i) + tl.log_q(i, j);
        if (v > best) best = v, arg = i;
      }
      next(j) = best + log_posteriors(t - 1, j) - tl.log_prior(j);
      back(t, j) = arg;
    }
    delta.swap(next);
  }
  Eigen::Index s;
  delta.maxCoeff(&s);
  std::vector<StateId> path(T);
  for (int t = T; t >= 1; --t) {
    path[t - 1] = static_cast<StateId>(s);
    s = back(t, s);
  }
  std::vector<StateId> out;
  for (StateId c : CollapseStates(path))
    if (!StateInventory::IsReserved(c)) out.push_back(c);
  return out;
}

namespace {

struct Evaluation {
  double loss = 0;
  double per = 0;
};

Evaluation Evaluate(const AcousticModel &model, const std::vector<const TrainingUtterance *> &set,
                    LossKind kind, int shift_interval) {
  Evaluation ev;
  EditCounts counts;
  for (const auto *u : set) {
    MatrixD y = model.net.Forward(u->windows);
    if (kind == LossKind::kMmi)
      ev.loss += MmiLossAndGrad<double>(y, u->transcript.gamma, model.params, shift_interval).loss;
    else
      ev.loss += CtcLossAndGrad<double>(y, CtcLabeling::FromLabels(TranscriptPhonemes(u->transcript))).loss;
    auto hyp = kind == LossKind::kMmi ? PhoneLoopPhonemes(y, model.params) : GreedyPhonemes(y);
    counts += AlignEdit(TranscriptPhonemes(u->transcript), hyp);
  }
  if (!set.empty()) ev.loss /= static_cast<double>(set.size());
  ev.per = counts.Rate();
  return ev;
}

}  // namespace

TrainResult Train(const std::vector<TrainingUtterance> &corpus, int num_states,
                  const TrainConfig &config, LossKind kind) {
  config.Validate();
  if (corpus.size() < 2) throw Error(ErrorKind::kValidation, "training needs >= 2 utterances");
  const int input_dim = static_cast<int>(corpus.front().windows.cols());

  TrainResult result;
  std::mt19937_64 rng(config.seed);
  std::mt19937_64 split_rng(config.split_seed ? config.split_seed : config.seed);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), split_rng);
  std::size_t n_valid = static_cast<std::size_t>(
      std::ceil(config.valid_fraction * static_cast<double>(corpus.size())));
  n_valid = std::clamp<std::size_t>(n_valid, 1, corpus.size() - 1);

  std::vector<const TrainingUtterance *> train, valid;
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < n_valid ? valid : train).push_back(&corpus[order[i]]);
  std::stable_sort(train.begin(), train.end(), [](const auto *a, const auto *b) {
    return a->NumFrames() < b->NumFrames();
  });
  for (const auto *u : train) result.train_ids.push_back(u->utt_id);
  for (const auto *u : valid) result.valid_ids.push_back(u->utt_id);

  std::vector<Transcript> train_text;
  for (const auto *u : train) train_text.push_back(u->transcript);
  StateLm lm = EstimateStateLm(train_text, num_states, config.train_lm, config.lm_smoothing);

  if (input_dim % (2 * config.context + 1) != 0)
    throw Error(ErrorKind::kShapeMismatch, "window width is not a multiple of 2F+1");
  AcousticModel model;
  model.net = AcousticNet::Random(input_dim, config.hidden, num_states, config.seed);
  model.params = ModelParameters::Initial(lm);

  std::vector<std::vector<const TrainingUtterance *>> batches;
  for (std::size_t i = 0; i < train.size(); i += config.batch_size)
    batches.emplace_back(train.begin() + i,
                         train.begin() + std::min(train.size(), i + config.batch_size));

  AdamState adam;
  double lr = config.learning_rate;
  auto ev0 = Evaluate(model, valid, kind, config.shift_interval);
  result.metrics.push_back(
      {0, Evaluate(model, train, kind, config.shift_interval).loss, ev0.loss, ev0.per, lr});
  result.model = model;
  double best_per = ev0.per;
  int since_best = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<std::size_t> batch_order(batches.size());
    std::iota(batch_order.begin(), batch_order.end(), 0);
    std::shuffle(batch_order.begin(), batch_order.end(), rng);
    double train_loss = 0;
    std::size_t n_train = 0;
    for (std::size_t b : batch_order) {
      auto res = TrainStep(model, adam, batches[b], config, kind, lr);
      if (!res.ok) continue;  // skipped batch; the model is unchanged
      train_loss += res.loss;
      n_train += batches[b].size();
    }
    auto ev = Evaluate(model, valid, kind, config.shift_interval);
    result.metrics.push_back(
        {epoch, n_train ? train_loss / static_cast<double>(n_train) : 0.0, ev.loss, ev.per, lr});
    if (ev.per <= best_per) result.model = model;
    if (ev.per < best_per) {
      best_per = ev.per;
      since_best = 0;
    } else {
      ++since_best;
      if (since_best >= config.stop_patience) break;
      if (since_best % config.decay_patience == 0) lr *= 0.5;
    }
  }
  result.model.context = config.context;
  result.model.feature_dim = input_dim / (2 * config.context + 1);
  return result;
}

void WriteMetricsCsv(std::ostream &os, const std::vector<EpochMetrics> &metrics) {
  os << "epoch,train_loss,valid_loss,valid_per,lr\n";
  char buf[160];
  for (const auto &m : metrics) {
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g,%.10g\n", m.epoch, m.train_loss,
                  m.valid_loss, m.valid_per, m.lr);
    os << buf;
  }
}

}  // namespace eemmi
