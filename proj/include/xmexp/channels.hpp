#pragma once

#include <array>
#include <string>
#include <vector>

#include "xmexp/gradcheck.hpp"
#include "xmexp/latent.hpp"
#include "xmexp/layers.hpp"
#include "xmexp/rng.hpp"

namespace xmexp {

// Dimensions of one modality channel. The perception column is three
// conv+relu+pool stages followed by a fully connected layer; the expectation
// column mirrors it with upsampling in place of pooling.
struct ChannelConfig {
  int in_channels = 3;
  int in_h = 64;
  int in_w = 64;
  std::array<int, 3> filters{16, 32, 64};
  std::array<int, 3> kernels{5, 3, 3};
  int latent_dim = 128;

  static ChannelConfig visual();
  static ChannelConfig auditory();
  void validate() const;
};

// Spatial dims after the three ceil-mode pooling stages.
struct StackDims {
  int c = 0;
  int h = 0;
  int w = 0;
};
StackDims conv_stack_dims(const ChannelConfig& cfg);

// Perception column: stimulus -> latent.
class Encoder {
 public:
  Encoder(const ChannelConfig& cfg, Modality modality, Rng& rng);

  Latent forward(const Tensor& stimulus);
  Tensor backward(const Tensor& grad_latent);   // returns grad wrt stimulus

  std::vector<ParamBlockRef> blocks(const std::string& prefix);
  std::vector<LayerParams*> params();

 private:
  ChannelConfig cfg_;
  Modality modality_;
  StackDims bottom_;
  Conv2d c1_, c2_, c3_;
  Relu r1_, r2_, r3_;
  MaxPool2x2 p1_, p2_, p3_;
  Dense fc_;
};

// Expectation column: latent -> reconstructed stimulus in (0, 1).
class Decoder {
 public:
  Decoder(const ChannelConfig& cfg, Modality modality, Rng& rng);

  Tensor forward(const Latent& latent);
  Tensor backward(const Tensor& grad_out);      // returns grad wrt latent

  std::vector<ParamBlockRef> blocks(const std::string& prefix);
  std::vector<LayerParams*> params();

 private:
  ChannelConfig cfg_;
  Modality modality_;
  StackDims bottom_;
  Dense fc_;
  Conv2d d1_, d2_, d3_, out_;
  Relu r1_, r2_, r3_;
  Upsample2x u1_, u2_, u3_;
  Crop2d crop_;
  SigmoidLayer act_;
};

// One modality channel: perception + expectation columns.
struct Channel {
  Channel(const ChannelConfig& cfg, Modality modality, Rng& rng)
      : config(cfg), encoder(cfg, modality, rng), decoder(cfg, modality, rng) {}

  std::vector<ParamBlockRef> blocks(const std::string& prefix);
  std::vector<LayerParams*> params();

  ChannelConfig config;
  Encoder encoder;
  Decoder decoder;
};

}  // namespace xmexp
