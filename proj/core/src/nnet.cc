// core/src/nnet.cc

// Copyright 2026  The tsadapt Authors
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

#include "tsadapt/nnet.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace tsadapt {

Activation ParseActivation(const std::string &name) {
  if (name == "none") return Activation::kNone;
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  throw Error(Msg() << "unknown activation '" << name
                    << "' (expected none, tanh or relu)");
}

std::string ActivationName(Activation act) {
  switch (act) {
    case Activation::kNone: return "none";
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
  }
  return "?";
}

bool AffineLayer::operator==(const AffineLayer &other) const {
  return activation == other.activation &&
         weights.rows() == other.weights.rows() &&
         weights.cols() == other.weights.cols() && weights == other.weights &&
         bias.size() == other.bias.size() && bias == other.bias;
}

Network::Network(std::vector<AffineLayer> layers, ContextWindow context)
    : layers_(std::move(layers)), context_(context) {
  Validate();
}

int Network::InputDim() const {
  return layers_.empty() ? 0 : layers_.front().InputDim();
}

int Network::OutputDim() const {
  return layers_.empty() ? 0 : layers_.back().OutputDim();
}

int64_t Network::NumParameters() const {
  int64_t n = 0;
  for (const AffineLayer &l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

void Network::Validate() const {
  TSADAPT_CHECK(!layers_.empty(), "network has no layers");
  TSADAPT_CHECK(context_.k >= 0, "context k must be non-negative");
  TSADAPT_CHECK(InputDim() % context_.Width() == 0,
                "input dim " << InputDim() << " is not a multiple of the "
                             << "context width " << context_.Width());
  for (size_t l = 0; l < layers_.size(); ++l) {
    const AffineLayer &layer = layers_[l];
    TSADAPT_CHECK(layer.weights.rows() >= 1 && layer.weights.cols() >= 1,
                  "layer " << l << " has an empty weight matrix");
    TSADAPT_CHECK(layer.bias.size() == layer.weights.rows(),
                  "layer " << l << " bias size " << layer.bias.size()
                           << " != output dim " << layer.weights.rows());
    if (l > 0)
      TSADAPT_CHECK(layers_[l - 1].OutputDim() == layer.InputDim(),
                    "layer " << l << " input dim " << layer.InputDim()
                             << " does not chain with layer " << l - 1
                             << " output dim " << layers_[l - 1].OutputDim());
    TSADAPT_CHECK(layer.weights.allFinite() && layer.bias.allFinite(),
                  "layer " << l << " has non-finite parameters");
  }
  TSADAPT_CHECK(layers_.back().activation == Activation::kNone,
                "the output layer must be linear (softmax is applied once)");
  if (HasInputNormalization()) {
    TSADAPT_CHECK(input_shift_.size() == FeatureDim() &&
                      input_scale_.size() == FeatureDim(),
                  "input normalisation has " << input_shift_.size() << "/"
                                             << input_scale_.size()
                                             << " entries, feature dim is "
                                             << FeatureDim());
    TSADAPT_CHECK(input_shift_.allFinite() && input_scale_.allFinite() &&
                      (input_scale_.array() > 0.0).all(),
                  "input normalisation must be finite with positive scale");
  } else {
    TSADAPT_CHECK(input_scale_.size() == 0,
                  "input normalisation scale given without shift");
  }
}

void Network::SetInputNormalization(Vector shift, Vector scale) {
  input_shift_ = std::move(shift);
  input_scale_ = std::move(scale);
  Validate();
}

bool Network::operator==(const Network &other) const {
  auto same = [](const Vector &a, const Vector &b) {
    return a.size() == b.size() && a == b;
  };
  return context_.k == other.context_.k && layers_ == other.layers_ &&
         same(input_shift_, other.input_shift_) &&
         same(input_scale_, other.input_scale_);
}

void FitInputNormalization(const std::vector<const Matrix *> &features,
                           Network *net) {
  const int dim = net->FeatureDim();
  Vector sum = Vector::Zero(dim), sum_sq = Vector::Zero(dim);
  double frames = 0.0;
  for (const Matrix *m : features) {
    TSADAPT_CHECK(m->cols() == dim, "feature dim " << m->cols()
                                                   << " != network feature dim "
                                                   << dim);
    sum += m->colwise().sum().transpose();
    sum_sq += m->array().square().colwise().sum().matrix().transpose();
    frames += static_cast<double>(m->rows());
  }
  TSADAPT_CHECK(frames > 0, "input normalisation needs at least one frame");
  const Vector mean = sum / frames;
  Vector scale(dim);
  for (int d = 0; d < dim; ++d) {
    const double var = std::max(sum_sq(d) / frames - mean(d) * mean(d), 0.0);
    scale(d) = 1.0 / std::max(std::sqrt(var), 1e-6);
  }
  net->SetInputNormalization(mean, scale);
}

Network InitNetwork(const std::vector<int> &dims, Activation hidden,
                    uint64_t seed, ContextWindow context) {
  TSADAPT_CHECK(dims.size() >= 2,
                "a network needs at least input and output dims, got "
                    << dims.size() << " entries");
  for (size_t i = 0; i < dims.size(); ++i)
    TSADAPT_CHECK(dims[i] >= 1, "layer dim " << i << " is " << dims[i]);
  Rng rng(DeriveSeed(seed, 0x11e7));
  std::vector<AffineLayer> layers;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    AffineLayer layer;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    layer.weights.resize(dims[l + 1], dims[l]);
    for (int r = 0; r < dims[l + 1]; ++r)
      for (int c = 0; c < dims[l]; ++c)
        layer.weights(r, c) = rng.Uniform(-scale, scale);
    layer.bias = Vector::Zero(dims[l + 1]);
    layer.activation = l + 2 == dims.size() ? Activation::kNone : hidden;
    layers.push_back(std::move(layer));
  }
  return Network(std::move(layers), context);
}

// ---------------------------------------------------------------------------
// Posteriors.

void SoftmaxRowsWithFloor(const Matrix &logits, Matrix *probs) {
  probs->resize(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double max = logits.row(r).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      const double e = std::exp(logits(r, c) - max);
      (*probs)(r, c) = e;
      sum += e;
    }
    double floored_sum = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      double &p = (*probs)(r, c);
      p = std::max(p / sum, PosteriorMatrix::kFloor);
      floored_sum += p;
    }
    probs->row(r) /= floored_sum;
  }
}

PosteriorMatrix PosteriorMatrix::FromLogits(const Matrix &logits) {
  TSADAPT_CHECK(logits.rows() >= 1 && logits.cols() >= 1,
                "posteriors need a non-empty logits matrix");
  TSADAPT_CHECK(logits.allFinite(), "logits contain non-finite values");
  Matrix probs;
  SoftmaxRowsWithFloor(logits, &probs);
  return PosteriorMatrix(std::move(probs));
}

PosteriorMatrix PosteriorMatrix::FromProbabilities(Matrix probs) {
  TSADAPT_CHECK(probs.rows() >= 1 && probs.cols() >= 1,
                "posterior matrix is empty");
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    double sum = 0.0;
    for (Eigen::Index c = 0; c < probs.cols(); ++c) {
      const double p = probs(r, c);
      TSADAPT_CHECK(std::isfinite(p) && p > 0.0 && p <= 1.0,
                    "posterior (" << r << ", " << c << ") = " << p
                                  << " is outside (0, 1]");
      sum += p;
    }
    TSADAPT_CHECK(std::abs(sum - 1.0) <= 1e-6,
                  "posterior row " << r << " sums to " << sum);
  }
  return PosteriorMatrix(std::move(probs));
}

std::vector<int32_t> PosteriorMatrix::Argmax() const {
  std::vector<int32_t> out(values_.rows());
  for (Eigen::Index r = 0; r < values_.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < values_.cols(); ++c)
      if (values_(r, c) > values_(r, best)) best = c;
    out[r] = static_cast<int32_t>(best);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Forward / backward.

void SpliceFrames(const Matrix &feats, ContextWindow ctx, int first, int count,
                  Matrix *out, int row_offset) {
  const int frames = static_cast<int>(feats.rows());
  const int dim = static_cast<int>(feats.cols());
  for (int i = 0; i < count; ++i) {
    const int t = first + i;
    for (int o = -ctx.k; o <= ctx.k; ++o) {
      const int src = std::clamp(t + o, 0, frames - 1);
      out->block(row_offset + i, (o + ctx.k) * dim, 1, dim) = feats.row(src);
    }
  }
}

Matrix SpliceFrames(const Matrix &feats, ContextWindow ctx) {
  TSADAPT_CHECK(ctx.k >= 0, "context k must be non-negative");
  Matrix out(feats.rows(), feats.cols() * ctx.Width());
  SpliceFrames(feats, ctx, 0, static_cast<int>(feats.rows()), &out, 0);
  return out;
}

namespace {

void ApplyActivation(Activation act, Matrix *m) {
  switch (act) {
    case Activation::kNone: break;
    case Activation::kTanh: *m = m->array().tanh().matrix(); break;
    case Activation::kRelu: *m = m->array().max(0.0).matrix(); break;
  }
}

// Multiplies `delta` by the activation derivative, given the activation's
// output values.
void ScaleByDerivative(Activation act, const Matrix &output, Matrix *delta) {
  switch (act) {
    case Activation::kNone: break;
    case Activation::kTanh:
      delta->array() *= 1.0 - output.array().square();
      break;
    case Activation::kRelu:
      delta->array() *= (output.array() > 0.0).cast<double>();
      break;
  }
}

}  // namespace

Matrix ComputeLogits(const Network &net, const Matrix &inputs,
                     ForwardCache *cache) {
  TSADAPT_CHECK(net.NumLayers() > 0, "network has no layers");
  TSADAPT_CHECK(inputs.cols() == net.InputDim(),
                "input dim " << inputs.cols() << " does not match network "
                             << "input dim " << net.InputDim());
  if (cache != nullptr) cache->layer_inputs.clear();
  Matrix x = inputs;
  if (net.HasInputNormalization()) {
    const int dim = net.FeatureDim();
    for (int b = 0; b < net.context().Width(); ++b) {
      auto block = x.middleCols(b * dim, dim);
      block.rowwise() -= net.input_shift().transpose();
      block.array().rowwise() *= net.input_scale().transpose().array();
    }
  }
  for (const AffineLayer &layer : net.layers()) {
    Matrix z = x * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
    ApplyActivation(layer.activation, &z);
    if (cache != nullptr) cache->layer_inputs.push_back(std::move(x));
    x = std::move(z);
  }
  if (cache != nullptr) cache->logits = x;
  return x;
}

PosteriorMatrix Forward(const Network &net, const FeatureMatrix &features,
                        ContextWindow ctx) {
  TSADAPT_CHECK(ctx.k >= 0, "context k must be non-negative");
  TSADAPT_CHECK(features.NumFrames() >= 1, "no feature frames");
  TSADAPT_CHECK(features.Dim() * ctx.Width() == net.InputDim(),
                "feature dim " << features.Dim() << " x context width "
                               << ctx.Width() << " != network input dim "
                               << net.InputDim());
  return PosteriorMatrix::FromLogits(
      ComputeLogits(net, SpliceFrames(features.values, ctx)));
}

PosteriorMatrix Forward(const Network &net, const FeatureMatrix &features) {
  return Forward(net, features, net.context());
}

Gradients Gradients::ZerosLike(const Network &net) {
  Gradients g;
  for (const AffineLayer &l : net.layers()) {
    g.weights.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    g.bias.push_back(Vector::Zero(l.bias.size()));
  }
  return g;
}

bool Gradients::AllFinite() const {
  for (const Matrix &w : weights)
    if (!w.allFinite()) return false;
  for (const Vector &b : bias)
    if (!b.allFinite()) return false;
  return true;
}

double Gradients::MaxAbs() const {
  double m = 0.0;
  for (const Matrix &w : weights)
    if (w.size() > 0) m = std::max(m, w.cwiseAbs().maxCoeff());
  for (const Vector &b : bias)
    if (b.size() > 0) m = std::max(m, b.cwiseAbs().maxCoeff());
  return m;
}

Gradients Backward(const Network &net, const ForwardCache &cache,
                   const Matrix &dloss_dlogits) {
  TSADAPT_CHECK(cache.valid(), "backward called without a cached forward pass");
  TSADAPT_CHECK(static_cast<int>(cache.layer_inputs.size()) == net.NumLayers(),
                "forward cache was produced by a different network");
  TSADAPT_CHECK(dloss_dlogits.rows() == cache.logits.rows() &&
                    dloss_dlogits.cols() == cache.logits.cols(),
                "loss gradient is " << dloss_dlogits.rows() << "x"
                                    << dloss_dlogits.cols()
                                    << " but logits are "
                                    << cache.logits.rows() << "x"
                                    << cache.logits.cols());
  Gradients grads;
  grads.weights.resize(net.NumLayers());
  grads.bias.resize(net.NumLayers());
  Matrix delta = dloss_dlogits;
  for (int l = net.NumLayers() - 1; l >= 0; --l) {
    const AffineLayer &layer = net.layers()[l];
    const Matrix &x = cache.layer_inputs[l];
    grads.weights[l] = delta.transpose() * x;
    grads.bias[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Matrix dx = delta * layer.weights;
      ScaleByDerivative(net.layers()[l - 1].activation, x, &dx);
      delta = std::move(dx);
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Optimiser.

SgdOptimizer::SgdOptimizer(double learning_rate, double momentum)
    : learning_rate_(learning_rate), momentum_(momentum) {
  TSADAPT_CHECK(learning_rate > 0.0,
                "learning rate must be positive, got " << learning_rate);
  TSADAPT_CHECK(momentum >= 0.0 && momentum < 1.0,
                "momentum must be in [0, 1), got " << momentum);
}

void SgdOptimizer::set_learning_rate(double lr) {
  TSADAPT_CHECK(lr > 0.0, "learning rate must be positive, got " << lr);
  learning_rate_ = lr;
}

void SgdOptimizer::Step(Network *net, const Gradients &grads) {
  TSADAPT_CHECK(static_cast<int>(grads.weights.size()) == net->NumLayers() &&
                    grads.bias.size() == grads.weights.size(),
                "gradient layer count does not match the network");
  TSADAPT_CHECK(grads.AllFinite(),
                "non-finite gradient; SGD step aborted, parameters unchanged");
  if (velocity_.weights.empty()) velocity_ = Gradients::ZerosLike(*net);
  for (int l = 0; l < net->NumLayers(); ++l) {
    AffineLayer &layer = net->mutable_layers()[l];
    TSADAPT_CHECK(grads.weights[l].rows() == layer.weights.rows() &&
                      grads.weights[l].cols() == layer.weights.cols() &&
                      grads.bias[l].size() == layer.bias.size(),
                  "gradient shape mismatch at layer " << l);
    velocity_.weights[l] = momentum_ * velocity_.weights[l] + grads.weights[l];
    velocity_.bias[l] = momentum_ * velocity_.bias[l] + grads.bias[l];
    layer.weights -= learning_rate_ * velocity_.weights[l];
    layer.bias -= learning_rate_ * velocity_.bias[l];
  }
}

// ---------------------------------------------------------------------------
// Gradient check.

double GradCheck(const Network &net, const LossFunction &loss,
                 const Matrix &inputs, double eps) {
  TSADAPT_CHECK(eps > 0.0 && std::isfinite(eps),
                "grad check step must be positive, got " << eps);
  TSADAPT_CHECK(net.NumParameters() <= kMaxGradCheckParameters,
                "network has " << net.NumParameters()
                               << " parameters; exhaustive grad check is "
                               << "limited to " << kMaxGradCheckParameters);
  ForwardCache cache;
  const Matrix logits = ComputeLogits(net, inputs, &cache);
  Matrix dlogits = Matrix::Zero(logits.rows(), logits.cols());
  loss(logits, &dlogits);
  const Gradients analytic = Backward(net, cache, dlogits);

  Network probe = net;
  auto eval = [&]() { return loss(ComputeLogits(probe, inputs), nullptr); };
  double worst = 0.0;
  auto compare = [&](double *param, double grad) {
    const double saved = *param;
    *param = saved + eps;
    const double plus = eval();
    *param = saved - eps;
    const double minus = eval();
    *param = saved;
    const double numeric = (plus - minus) / (2.0 * eps);
    const double denom =
        std::max({std::abs(grad), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(grad - numeric) / denom);
  };
  for (int l = 0; l < probe.NumLayers(); ++l) {
    AffineLayer &layer = probe.mutable_layers()[l];
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
        compare(&layer.weights(r, c), analytic.weights[l](r, c));
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r)
      compare(&layer.bias(r), analytic.bias[l](r));
  }
  return worst;
}

double GradCheck(const Network &net, const LossFunction &loss,
                 const FeatureMatrix &features, ContextWindow ctx, double eps) {
  TSADAPT_CHECK(features.Dim() * ctx.Width() == net.InputDim(),
                "feature dim " << features.Dim() << " x context width "
                               << ctx.Width() << " != network input dim "
                               << net.InputDim());
  return GradCheck(net, loss, SpliceFrames(features.values, ctx), eps);
}

// ---------------------------------------------------------------------------
// Checkpoints.

namespace {

constexpr char kNetMagic[8] = {'T', 'S', 'A', 'N', 'N', 'E', 'T', '\0'};

void PutU32(std::string *out, uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void PutF32(std::string *out, double v) {
  const float f = static_cast<float>(v);
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  PutU32(out, bits);
}

class Reader {
 public:
  Reader(const std::string &bytes, const std::string &origin)
      : bytes_(bytes), origin_(origin) {}

  uint32_t U32(const char *what) {
    TSADAPT_CHECK(pos_ + 4 <= bytes_.size(),
                  "checkpoint " << origin_ << " truncated reading " << what);
    const auto *u = reinterpret_cast<const unsigned char *>(bytes_.data() + pos_);
    pos_ += 4;
    return u[0] | (u[1] << 8) | (u[2] << 16) |
           (static_cast<uint32_t>(u[3]) << 24);
  }

  double F32(const char *what) {
    const uint32_t bits = U32(what);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }

  void Expect(const char *magic, size_t n) {
    TSADAPT_CHECK(bytes_.size() >= n && std::memcmp(bytes_.data(), magic, n) == 0,
                  "checkpoint " << origin_ << " has a bad magic string");
    pos_ = n;
  }

  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  const std::string &bytes_;
  const std::string &origin_;
  size_t pos_ = 0;
};

}  // namespace

std::string EncodeNetwork(const Network &net) {
  net.Validate();
  std::string out(kNetMagic, 8);
  PutU32(&out, kCheckpointVersion);
  PutU32(&out, static_cast<uint32_t>(net.NumLayers()));
  for (const AffineLayer &l : net.layers()) {
    PutU32(&out, static_cast<uint32_t>(l.InputDim()));
    PutU32(&out, static_cast<uint32_t>(l.OutputDim()));
  }
  for (const AffineLayer &l : net.layers())
    PutU32(&out, static_cast<uint32_t>(l.activation));
  PutU32(&out, static_cast<uint32_t>(net.context().k));
  PutU32(&out, net.HasInputNormalization() ? 1u : 0u);
  if (net.HasInputNormalization()) {
    for (Eigen::Index d = 0; d < net.input_shift().size(); ++d)
      PutF32(&out, net.input_shift()(d));
    for (Eigen::Index d = 0; d < net.input_scale().size(); ++d)
      PutF32(&out, net.input_scale()(d));
  }
  for (const AffineLayer &l : net.layers()) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c)
        PutF32(&out, l.weights(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) PutF32(&out, l.bias(r));
  }
  return out;
}

Network DecodeNetwork(const std::string &bytes, const std::string &origin) {
  Reader in(bytes, origin);
  in.Expect(kNetMagic, 8);
  const uint32_t version = in.U32("version");
  TSADAPT_CHECK(version == kCheckpointVersion,
                "checkpoint " << origin << " has unsupported version "
                              << version);
  const uint32_t num_layers = in.U32("layer count");
  TSADAPT_CHECK(num_layers >= 1 && num_layers <= 1024,
                "checkpoint " << origin << " declares " << num_layers
                              << " layers");
  std::vector<uint32_t> in_dims(num_layers), out_dims(num_layers);
  for (uint32_t l = 0; l < num_layers; ++l) {
    in_dims[l] = in.U32("layer dims");
    out_dims[l] = in.U32("layer dims");
    TSADAPT_CHECK(in_dims[l] >= 1 && in_dims[l] <= (1u << 20) &&
                      out_dims[l] >= 1 && out_dims[l] <= (1u << 20),
                  "checkpoint " << origin << " layer " << l
                                << " has invalid dims " << in_dims[l] << "x"
                                << out_dims[l]);
    TSADAPT_CHECK(l == 0 || in_dims[l] == out_dims[l - 1],
                  "checkpoint " << origin << " layer " << l << " input dim "
                                << in_dims[l] << " does not chain with layer "
                                << l - 1 << " output dim " << out_dims[l - 1]);
  }
  std::vector<AffineLayer> layers(num_layers);
  for (uint32_t l = 0; l < num_layers; ++l) {
    const uint32_t act = in.U32("activation ids");
    TSADAPT_CHECK(act <= 2, "checkpoint " << origin << " layer " << l
                                          << " has unknown activation id "
                                          << act);
    layers[l].activation = static_cast<Activation>(act);
  }
  const uint32_t k = in.U32("context");
  TSADAPT_CHECK(k <= 1000, "checkpoint " << origin << " declares context "
                                         << k);
  const uint32_t has_norm = in.U32("normalisation flag");
  TSADAPT_CHECK(has_norm <= 1, "checkpoint " << origin
                                             << " has bad normalisation flag "
                                             << has_norm);
  Vector shift, scale;
  if (has_norm == 1) {
    const uint32_t width = 2 * k + 1;
    TSADAPT_CHECK(in_dims[0] % width == 0,
                  "checkpoint " << origin << " input dim " << in_dims[0]
                                << " is not a multiple of the context width "
                                << width);
    const Eigen::Index dim = in_dims[0] / width;
    shift.resize(dim);
    scale.resize(dim);
    for (Eigen::Index d = 0; d < dim; ++d) shift(d) = in.F32("input shift");
    for (Eigen::Index d = 0; d < dim; ++d) scale(d) = in.F32("input scale");
  }
  for (uint32_t l = 0; l < num_layers; ++l) {
    AffineLayer &layer = layers[l];
    layer.weights.resize(out_dims[l], in_dims[l]);
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
        layer.weights(r, c) = in.F32("weights");
    layer.bias.resize(out_dims[l]);
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r)
      layer.bias(r) = in.F32("bias");
  }
  TSADAPT_CHECK(in.AtEnd(), "checkpoint " << origin
                                          << " has trailing bytes after the "
                                          << "last layer");
  try {
    Network net(std::move(layers), ContextWindow{static_cast<int>(k)});
    if (has_norm == 1) net.SetInputNormalization(shift, scale);
    return net;
  } catch (const Error &e) {
    throw Error(Msg() << "checkpoint " << origin << ": " << e.what());
  }
}

void WriteNetwork(const std::string &path, const Network &net) {
  const std::string bytes = EncodeNetwork(net);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  TSADAPT_CHECK(out.good(), "cannot open " << path << " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  TSADAPT_CHECK(out.good(), "failed writing checkpoint " << path);
}

Network ReadNetwork(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  TSADAPT_CHECK(in.good(), "cannot open checkpoint " << path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return DecodeNetwork(bytes, path);
}

void RoundToFloat(Network *net) {
  for (AffineLayer &l : net->mutable_layers()) {
    l.weights = l.weights.cast<float>().cast<double>();
    l.bias = l.bias.cast<float>().cast<double>();
  }
  if (net->HasInputNormalization())
    net->SetInputNormalization(
        net->input_shift().cast<float>().cast<double>(),
        net->input_scale().cast<float>().cast<double>());
}

}  // namespace tsadapt
