#pragma once

#include <string>
#include <vector>

#include "xmexp/rng.hpp"
#include "xmexp/tensor.hpp"

namespace xmexp {

enum class ParamKind { conv, dense };

// Weights and biases of one trainable layer plus gradient accumulators of
// matching shapes. Gradients accumulate across backward calls until
// sgd_step applies and zeroes them.
struct LayerParams {
  ParamKind kind = ParamKind::dense;
  Tensor weights;
  Tensor biases;
  Tensor weight_grad;
  Tensor bias_grad;
  bool grad_ready = false;

  static LayerParams make_conv(int out_c, int in_c, int kh, int kw);
  static LayerParams make_dense(int out_dim, int in_dim);

  // Uniform in +-sqrt(6/(fan_in+fan_out)), biases zero.
  void init_glorot(Rng& rng);
  void zero_grads();
};

const char* param_kind_name(ParamKind kind);

enum class Padding { same, valid };

// 2-D convolution, stride 1. "same" keeps spatial dims for odd kernels.
class Conv2d {
 public:
  Conv2d(int in_c, int out_c, int kh, int kw, Padding padding);

  Tensor forward(const Tensor& input);          // [C,H,W] -> [out_c,H',W']
  Tensor backward(const Tensor& grad_out);      // accumulates grads, returns grad wrt input

  LayerParams params;
  Padding padding;

 private:
  Tensor padded_input_;
  int in_h_ = 0;
  int in_w_ = 0;
};

// 2x2 max pooling, ceil mode (partial windows at the bottom/right edges).
// Backward routes gradient to the argmax position, first-found on ties.
class MaxPool2x2 {
 public:
  Tensor forward(const Tensor& input);
  Tensor backward(const Tensor& grad_out);

 private:
  std::vector<int> in_shape_;
  std::vector<std::size_t> argmax_;   // flat input index per output element
};

// Nearest-neighbour 2x upsampling; backward sums the four child gradients.
class Upsample2x {
 public:
  Tensor forward(const Tensor& input);
  Tensor backward(const Tensor& grad_out);

 private:
  std::vector<int> in_shape_;
};

// Crop [C,H,W] to the first target_h rows / target_w cols. Backward
// zero-pads back to the pre-crop dims. No-op when dims already match.
class Crop2d {
 public:
  Crop2d(int target_h, int target_w) : target_h_(target_h), target_w_(target_w) {}
  Tensor forward(const Tensor& input);
  Tensor backward(const Tensor& grad_out);

 private:
  int target_h_;
  int target_w_;
  std::vector<int> in_shape_;
};

// Fully connected layer: out = W x + b.
class Dense {
 public:
  Dense(int out_dim, int in_dim);
  Tensor forward(const Tensor& input);          // [N] -> [M]
  Tensor backward(const Tensor& grad_out);

  LayerParams params;

 private:
  Tensor input_;
};

class Relu {
 public:
  Tensor forward(const Tensor& input);
  Tensor backward(const Tensor& grad_out);

 private:
  Tensor input_;
};

class SigmoidLayer {
 public:
  Tensor forward(const Tensor& input);
  Tensor backward(const Tensor& grad_out);

 private:
  Tensor output_;
};

// Pure elementwise versions.
Tensor relu(const Tensor& input);
Tensor sigmoid(const Tensor& input);

// w <- w - lr * grad for every block; accumulators zeroed afterwards.
// Throws StateError if any block has no gradient from a backward pass.
void sgd_step(const std::vector<LayerParams*>& params, double learning_rate);

}  // namespace xmexp
