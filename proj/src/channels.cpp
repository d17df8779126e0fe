#include "xmexp/channels.hpp"

#include "xmexp/audio.hpp"
#include "xmexp/errors.hpp"

namespace xmexp {

ChannelConfig ChannelConfig::visual() {
  return ChannelConfig{};
}

ChannelConfig ChannelConfig::auditory() {
  ChannelConfig cfg;
  cfg.in_channels = 1;
  cfg.in_h = kSpectrogramFrames;
  cfg.in_w = kMelBands;
  cfg.kernels = {3, 3, 3};
  return cfg;
}

void ChannelConfig::validate() const {
  if (in_channels <= 0 || in_h <= 0 || in_w <= 0 || latent_dim <= 0) {
    throw ConfigError("channel dims must be positive");
  }
  for (int f : filters) {
    if (f <= 0) throw ConfigError("channel filter counts must be positive");
  }
  for (int k : kernels) {
    if (k <= 0 || k % 2 == 0) {
      throw ConfigError("channel kernels must be odd and positive, got " + std::to_string(k));
    }
  }
}

StackDims conv_stack_dims(const ChannelConfig& cfg) {
  StackDims d{cfg.filters[2], cfg.in_h, cfg.in_w};
  for (int i = 0; i < 3; ++i) {
    d.h = (d.h + 1) / 2;
    d.w = (d.w + 1) / 2;
  }
  return d;
}

// ---------------------------------------------------------------------------
// Encoder

Encoder::Encoder(const ChannelConfig& cfg, Modality modality, Rng& rng)
    : cfg_(cfg),
      modality_(modality),
      bottom_(conv_stack_dims(cfg)),
      c1_(cfg.in_channels, cfg.filters[0], cfg.kernels[0], cfg.kernels[0], Padding::same),
      c2_(cfg.filters[0], cfg.filters[1], cfg.kernels[1], cfg.kernels[1], Padding::same),
      c3_(cfg.filters[1], cfg.filters[2], cfg.kernels[2], cfg.kernels[2], Padding::same),
      fc_(cfg.latent_dim, bottom_.c * bottom_.h * bottom_.w) {
  cfg.validate();
  c1_.params.init_glorot(rng);
  c2_.params.init_glorot(rng);
  c3_.params.init_glorot(rng);
  fc_.params.init_glorot(rng);
}

Latent Encoder::forward(const Tensor& stimulus) {
  if (stimulus.rank() != 3 || stimulus.shape[0] != cfg_.in_channels ||
      stimulus.shape[1] != cfg_.in_h || stimulus.shape[2] != cfg_.in_w) {
    throw ConfigError(std::string("encoder ") + modality_name(modality_) + " expects [" +
                      std::to_string(cfg_.in_channels) + "x" + std::to_string(cfg_.in_h) + "x" +
                      std::to_string(cfg_.in_w) + "], got " + stimulus.shape_str());
  }
  Tensor t = p1_.forward(r1_.forward(c1_.forward(stimulus)));
  t = p2_.forward(r2_.forward(c2_.forward(t)));
  t = p3_.forward(r3_.forward(c3_.forward(t)));
  Tensor z = fc_.forward(t.reshaped({static_cast<int>(t.numel())}));
  return Latent{std::move(z), modality_};
}

Tensor Encoder::backward(const Tensor& grad_latent) {
  Tensor g = fc_.backward(grad_latent);
  g = g.reshaped({bottom_.c, bottom_.h, bottom_.w});
  g = c3_.backward(r3_.backward(p3_.backward(g)));
  g = c2_.backward(r2_.backward(p2_.backward(g)));
  g = c1_.backward(r1_.backward(p1_.backward(g)));
  return g;
}

std::vector<ParamBlockRef> Encoder::blocks(const std::string& prefix) {
  std::vector<ParamBlockRef> out;
  for (auto& b : param_blocks(prefix + ".conv1", c1_.params)) out.push_back(b);
  for (auto& b : param_blocks(prefix + ".conv2", c2_.params)) out.push_back(b);
  for (auto& b : param_blocks(prefix + ".conv3", c3_.params)) out.push_back(b);
  for (auto& b : param_blocks(prefix + ".fc", fc_.params)) out.push_back(b);
  return out;
}

std::vector<LayerParams*> Encoder::params() {
  return {&c1_.params, &c2_.params, &c3_.params, &fc_.params};
}

// ---------------------------------------------------------------------------
// Decoder
//
// Mirrors the encoder: fc to the bottom feature map, then three
// conv+relu+upsample stages with the kernel sizes reversed, a crop back to
// the stimulus dims (the ceil-mode pools can overshoot), and a final conv
// with sigmoid to land in (0, 1).

Decoder::Decoder(const ChannelConfig& cfg, Modality modality, Rng& rng)
    : cfg_(cfg),
      modality_(modality),
      bottom_(conv_stack_dims(cfg)),
      fc_(bottom_.c * bottom_.h * bottom_.w, cfg.latent_dim),
      d1_(cfg.filters[2], cfg.filters[2], cfg.kernels[2], cfg.kernels[2], Padding::same),
      d2_(cfg.filters[2], cfg.filters[1], cfg.kernels[1], cfg.kernels[1], Padding::same),
      d3_(cfg.filters[1], cfg.filters[0], cfg.kernels[0], cfg.kernels[0], Padding::same),
      out_(cfg.filters[0], cfg.in_channels, 3, 3, Padding::same),
      crop_(cfg.in_h, cfg.in_w) {
  cfg.validate();
  fc_.params.init_glorot(rng);
  d1_.params.init_glorot(rng);
  d2_.params.init_glorot(rng);
  d3_.params.init_glorot(rng);
  out_.params.init_glorot(rng);
}

Tensor Decoder::forward(const Latent& latent) {
  if (latent.modality != modality_) {
    throw UsageError(std::string("decoder ") + modality_name(modality_) +
                     " given a " + modality_name(latent.modality) + " latent");
  }
  if (static_cast<int>(latent.values.numel()) != cfg_.latent_dim) {
    throw ConfigError("decoder expects a " + std::to_string(cfg_.latent_dim) +
                      "-d latent, got " + latent.values.shape_str());
  }
  Tensor t = fc_.forward(latent.values).reshaped({bottom_.c, bottom_.h, bottom_.w});
  t = u1_.forward(r1_.forward(d1_.forward(t)));
  t = u2_.forward(r2_.forward(d2_.forward(t)));
  t = u3_.forward(r3_.forward(d3_.forward(t)));
  t = crop_.forward(t);
  return act_.forward(out_.forward(t));
}

Tensor Decoder::backward(const Tensor& grad_out) {
  Tensor g = out_.backward(act_.backward(grad_out));
  g = crop_.backward(g);
  g = d3_.backward(r3_.backward(u3_.backward(g)));
  g = d2_.backward(r2_.backward(u2_.backward(g)));
  g = d1_.backward(r1_.backward(u1_.backward(g)));
  return fc_.backward(g.reshaped({static_cast<int>(g.numel())}));
}

std::vector<ParamBlockRef> Decoder::blocks(const std::string& prefix) {
  std::vector<ParamBlockRef> out;
  for (auto& b : param_blocks(prefix + ".fc", fc_.params)) out.push_back(b);
  for (auto& b : param_blocks(prefix + ".conv1", d1_.params)) out.push_back(b);
  for (auto& b : param_blocks(prefix + ".conv2", d2_.params)) out.push_back(b);
  for (auto& b : param_blocks(prefix + ".conv3", d3_.params)) out.push_back(b);
  for (auto& b : param_blocks(prefix + ".out", out_.params)) out.push_back(b);
  return out;
}

std::vector<LayerParams*> Decoder::params() {
  return {&fc_.params, &d1_.params, &d2_.params, &d3_.params, &out_.params};
}

// ---------------------------------------------------------------------------

std::vector<ParamBlockRef> Channel::blocks(const std::string& prefix) {
  std::vector<ParamBlockRef> out = encoder.blocks(prefix + ".encoder");
  for (auto& b : decoder.blocks(prefix + ".decoder")) out.push_back(b);
  return out;
}

std::vector<LayerParams*> Channel::params() {
  std::vector<LayerParams*> out = encoder.params();
  for (auto* p : decoder.params()) out.push_back(p);
  return out;
}

}  // namespace xmexp
