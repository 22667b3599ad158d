#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/matrix.hpp"
#include "core/rng.hpp"

namespace photoscore {

constexpr int kInputEdge = 227;

// 4-D activation block, NHWC layout (channels contiguous per pixel).
struct Tensor {
  int n = 0, h = 0, w = 0, c = 0;
  std::vector<double> v;

  void resize(int n_, int h_, int w_, int c_) {
    n = n_; h = h_; w = w_; c = c_;
    v.assign(static_cast<size_t>(n) * h * w * c, 0.0);
  }
  double* pixel(int in, int iy, int ix) {
    return v.data() + ((static_cast<size_t>(in) * h + iy) * w + ix) * c;
  }
  const double* pixel(int in, int iy, int ix) const {
    return v.data() + ((static_cast<size_t>(in) * h + iy) * w + ix) * c;
  }
};

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;  // weights only, not biases or norm parameters
  int batch_size = 32;
  int epochs = 10;
};

// 1x1 convolution with stride: strided spatial subsampling followed by a
// per-pixel linear map.
struct Conv1x1 {
  int in_c = 0, out_c = 0, stride = 1;
  std::vector<double> w;  // [in_c][out_c]
  std::vector<double> b;
  std::vector<double> gw, gb;

  void configure(int in_channels, int out_channels, int stride_);
};

struct BnCache {
  std::vector<double> inv_std;
  Tensor xhat;
};

struct BatchNorm {
  int channels = 0;
  std::vector<double> gamma, beta;
  std::vector<double> running_mean, running_var;
  std::vector<double> ggamma, gbeta;
  double eps = 1e-5;
  double momentum = 0.9;

  void configure(int channels_);
};

struct Dense {
  int in_f = 0, out_f = 0;
  std::vector<double> w;  // [in_f][out_f]
  std::vector<double> b;
  std::vector<double> gw, gb;

  void configure(int in_features, int out_features);
};

struct ParamGroup {
  std::string name;
  std::vector<double>* value;
  std::vector<double>* grad;  // null for running statistics
  bool decay;
};

// The only-1x1-convolutions score network: 227x227x3 zerocentered input,
// three strided 1x1 conv + batch-norm + ReLU stages (94@s8, 36@s4, 36@s1),
// then FC 2304->36 and FC 36->8 with softmax over score classes 2..9.
struct TypeCNetwork {
  uint64_t seed = 0;
  std::array<double, 3> zerocenter{};  // per-channel training-split mean
  Conv1x1 conv1, conv2, conv3;
  BatchNorm bn1, bn2, bn3;
  Dense fc1, fc2;

  static TypeCNetwork init(uint64_t seed);

  // Allocates every layer at the published sizes (weights zero, norms at
  // identity); init() and the model loader both start here.
  void configure_layers();

  std::vector<ParamGroup> trainable_params();
  // Trainable parameters plus running statistics, in serialization order.
  std::vector<ParamGroup> state_params();

  // Final-layer weights as penultimate nodes x score classes (36 x 8).
  Matrix final_fc_weights() const;

  void set_zerocenter(const Dataset& ds, std::span<const int> indices);
};

enum class Mode { train, infer };

// ------------------------------------------------------------------ layers
// The building blocks behind forward/backward, usable on their own.

// Strided subsample; output pixel (y, x) reads input pixel (y*s, x*s).
void gather(const Tensor& x, int stride, Tensor& g);
// Adjoint of gather: routes gradients back to the sampled positions.
void scatter_add(const Tensor& dg, int stride, Tensor& dx);

// Per-pixel linear map of an already gathered block.
void conv_matmul_forward(const Tensor& g, const Conv1x1& conv, Tensor& out);
// Accumulates weight/bias gradients; optionally produces the gathered-input
// gradient.
void conv_matmul_backward(const Tensor& g, const Tensor& dout, Conv1x1& conv,
                          Tensor* dg);

// Train mode normalizes by batch statistics and updates the running ones;
// infer mode applies the running statistics.
void bn_forward(BatchNorm& bn, const Tensor& x, Mode mode, BnCache& cache,
                Tensor& out);
// Gradient through the batch statistics; dy is consumed in place and
// replaced by the input gradient.
void bn_backward(BatchNorm& bn, const BnCache& cache, Tensor& dy);

void relu_inplace(Tensor& t);
// Masks dy by the post-ReLU activations.
void relu_backward(const Tensor& activated, Tensor& dy);

void dense_forward(const double* in, int rows, Dense& d, Matrix& out);
void dense_backward(const double* in, int rows, const Matrix& dout, Dense& d,
                    double* din);

struct ForwardTrace {
  Tensor x0;               // zerocentered strided input (N,29,29,3)
  Tensor c1;               // conv1 output (N,29,29,94)
  Tensor r1;               // stage-1 activations (N,29,29,94)
  Tensor g2;               // strided gather feeding conv2 (N,8,8,94)
  Tensor c2, r2;           // (N,8,8,36)
  Tensor c3;               // (N,8,8,36)
  Tensor final_conv_maps;  // post-ReLU conv3 output (N,8,8,36)
  BnCache bn1c, bn2c, bn3c;
  Matrix fc1_out;          // (N,36)
  Matrix logits;           // (N,8)
  Matrix probs;            // (N,8), rows sum to 1
};

// Train mode uses batch statistics and updates running statistics; infer
// mode reads running statistics and leaves the network untouched.
void forward(TypeCNetwork& net, std::span<const Image* const> batch, Mode mode,
             ForwardTrace& trace);

// Mean cross-entropy of the traced batch; labels are class indices 0..7.
double cross_entropy(const ForwardTrace& trace, std::span<const int> labels);

// Accumulates parameter gradients of the mean cross-entropy into the layer
// grad buffers (zeroed first).
void backward(TypeCNetwork& net, const ForwardTrace& trace,
              std::span<const int> labels);

class SgdOptimizer {
 public:
  SgdOptimizer(TypeCNetwork& net, const TrainConfig& cfg);
  void step();

 private:
  TypeCNetwork& net_;
  TrainConfig cfg_;
  std::vector<std::vector<double>> velocity_;
};

// One shuffled pass over the listed samples; returns the mean cross-entropy
// over every sample that was processed.  A trailing batch of fewer than two
// samples is skipped (batch statistics need at least two).
double train_epoch(TypeCNetwork& net, const Dataset& ds,
                   std::span<const int> indices, const TrainConfig& cfg,
                   SgdOptimizer& opt, Rng& rng);

// Class probabilities for one image, inference mode.
std::array<double, 8> predict(const TypeCNetwork& net, const Image& image);

}  // namespace photoscore
