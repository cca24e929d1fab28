// core/include/tsadapt/nnet.h

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

// A deliberately small feed-forward classifier: a stack of affine layers with
// tanh / relu / identity activations and a softmax output, hand-written
// backprop, SGD with momentum and an exhaustive finite-difference checker.
// Inputs are log-filterbank frames spliced with +/-k frames of context.

#ifndef TSADAPT_NNET_H_
#define TSADAPT_NNET_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tsadapt/common.h"
#include "tsadapt/features.h"

namespace tsadapt {

enum class Activation : uint32_t { kNone = 0, kTanh = 1, kRelu = 2 };

Activation ParseActivation(const std::string &name);
std::string ActivationName(Activation act);

/// +/-k frames of context; frames beyond either edge replicate the edge frame.
struct ContextWindow {
  int k = 0;
  int Width() const { return 2 * k + 1; }
};

struct AffineLayer {
  Matrix weights;  // output_dim x input_dim
  Vector bias;     // output_dim
  Activation activation = Activation::kNone;

  int InputDim() const { return static_cast<int>(weights.cols()); }
  int OutputDim() const { return static_cast<int>(weights.rows()); }
  bool operator==(const AffineLayer &other) const;
};

class Network {
 public:
  Network() = default;
  Network(std::vector<AffineLayer> layers, ContextWindow context);

  int InputDim() const;
  int OutputDim() const;
  int NumLayers() const { return static_cast<int>(layers_.size()); }
  int64_t NumParameters() const;
  ContextWindow context() const { return context_; }
  /// Feature dimension expected before splicing.
  int FeatureDim() const { return InputDim() / context_.Width(); }

  const std::vector<AffineLayer> &layers() const { return layers_; }
  std::vector<AffineLayer> &mutable_layers() { return layers_; }

  /// Fixed per-feature input normalisation x' = (x - shift) * scale, applied
  /// to every spliced context block before the first layer.  It is not
  /// trained.  Empty vectors mean identity.
  bool HasInputNormalization() const { return input_shift_.size() > 0; }
  const Vector &input_shift() const { return input_shift_; }
  const Vector &input_scale() const { return input_scale_; }
  void SetInputNormalization(Vector shift, Vector scale);

  /// Dimensions chain, parameters are finite, the output layer is linear
  /// (the softmax is applied once, outside the layer stack).
  void Validate() const;

  bool operator==(const Network &other) const;

 private:
  std::vector<AffineLayer> layers_;
  ContextWindow context_;
  Vector input_shift_;
  Vector input_scale_;
};

/// Sets the input normalisation to the global per-dimension mean and inverse
/// standard deviation of the given feature matrices.
void FitInputNormalization(const std::vector<const Matrix *> &features,
                           Network *net);

/// dims = {input, hidden..., output}.  Weights ~ U(-1/sqrt(fan_in),
/// 1/sqrt(fan_in)), biases zero; hidden layers use `hidden`, the output layer
/// is linear.
Network InitNetwork(const std::vector<int> &dims, Activation hidden,
                    uint64_t seed, ContextWindow context = {});

/// Row-stochastic posteriors; every entry is at least kFloor.
class PosteriorMatrix {
 public:
  static constexpr double kFloor = 1e-12;

  PosteriorMatrix() = default;
  /// Stable softmax per row, then floor at kFloor and renormalise.
  static PosteriorMatrix FromLogits(const Matrix &logits);
  /// Validates entries in (0, 1] and row sums within 1e-6 of one.
  static PosteriorMatrix FromProbabilities(Matrix probs);

  const Matrix &values() const { return values_; }
  int NumFrames() const { return static_cast<int>(values_.rows()); }
  int NumClasses() const { return static_cast<int>(values_.cols()); }
  double operator()(int frame, int cls) const { return values_(frame, cls); }

  /// Argmax per frame, ties to the lowest index.
  std::vector<int32_t> Argmax() const;

 private:
  explicit PosteriorMatrix(Matrix values) : values_(std::move(values)) {}
  Matrix values_;
};

/// Softmax of one row of logits with the floor applied.
void SoftmaxRowsWithFloor(const Matrix &logits, Matrix *probs);

/// Splices frames [first, first + count) of `feats` with context `ctx` into
/// rows [row_offset, row_offset + count) of `out` (out must be wide enough).
void SpliceFrames(const Matrix &feats, ContextWindow ctx, int first, int count,
                  Matrix *out, int row_offset = 0);
Matrix SpliceFrames(const Matrix &feats, ContextWindow ctx);

/// Intermediate values kept by a forward pass for the following backward.
struct ForwardCache {
  std::vector<Matrix> layer_inputs;  // input to layer l (post-activation)
  Matrix logits;
  bool valid() const { return !layer_inputs.empty(); }
};

/// Logits for already-spliced inputs (frames x InputDim).
Matrix ComputeLogits(const Network &net, const Matrix &inputs,
                     ForwardCache *cache = nullptr);

/// Posteriors for a feature matrix under the given context window.
PosteriorMatrix Forward(const Network &net, const FeatureMatrix &features,
                        ContextWindow ctx);
/// Uses the network's own context window.
PosteriorMatrix Forward(const Network &net, const FeatureMatrix &features);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> bias;

  static Gradients ZerosLike(const Network &net);
  bool AllFinite() const;
  double MaxAbs() const;
};

/// Exact gradients of a scalar loss whose derivative w.r.t. the logits of the
/// cached forward pass is `dloss_dlogits`.
Gradients Backward(const Network &net, const ForwardCache &cache,
                   const Matrix &dloss_dlogits);

/// SGD with momentum: v <- momentum * v + grad;  p <- p - lr * v.
/// Velocity buffers persist across Step calls.
class SgdOptimizer {
 public:
  SgdOptimizer(double learning_rate, double momentum);

  void Step(Network *net, const Gradients &grads);

  double learning_rate() const { return learning_rate_; }
  void set_learning_rate(double lr);
  double momentum() const { return momentum_; }

 private:
  double learning_rate_;
  double momentum_;
  Gradients velocity_;
};

/// Scalar loss of a logits matrix; fills dloss_dlogits when non-null.
using LossFunction =
    std::function<double(const Matrix &logits, Matrix *dloss_dlogits)>;

/// Largest parameter count GradCheck will perturb exhaustively.
inline constexpr int64_t kMaxGradCheckParameters = 10000;

/// Central-difference check of Backward.  Returns the maximum over all
/// parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
double GradCheck(const Network &net, const LossFunction &loss,
                 const Matrix &inputs, double eps);
double GradCheck(const Network &net, const LossFunction &loss,
                 const FeatureMatrix &features, ContextWindow ctx, double eps);

// ---------------------------------------------------------------------------
// Checkpoints.  Layout (little-endian):
//   char[8] "TSANNET\0" | u32 version | u32 num_layers |
//   num_layers x (u32 in_dim, u32 out_dim) | u32 activation[num_layers] |
//   u32 context_k | u32 has_norm |
//   [float32 shift[feature_dim], float32 scale[feature_dim]] if has_norm |
//   per layer: float32 weights (row-major, out x in), float32 bias[out]

inline constexpr uint32_t kCheckpointVersion = 1;

std::string EncodeNetwork(const Network &net);
Network DecodeNetwork(const std::string &bytes,
                      const std::string &origin = "<memory>");
void WriteNetwork(const std::string &path, const Network &net);
Network ReadNetwork(const std::string &path);

/// Rounds all parameters to float32, as a checkpoint write/read would.
void RoundToFloat(Network *net);

}  // namespace tsadapt

#endif  // TSADAPT_NNET_H_
