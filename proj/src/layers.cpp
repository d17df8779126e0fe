#include "xmexp/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "xmexp/errors.hpp"

namespace xmexp {

LayerParams LayerParams::make_conv(int out_c, int in_c, int kh, int kw) {
  LayerParams p;
  p.kind = ParamKind::conv;
  p.weights = Tensor({out_c, in_c, kh, kw});
  p.biases = Tensor({out_c});
  p.weight_grad = Tensor({out_c, in_c, kh, kw});
  p.bias_grad = Tensor({out_c});
  return p;
}

LayerParams LayerParams::make_dense(int out_dim, int in_dim) {
  LayerParams p;
  p.kind = ParamKind::dense;
  p.weights = Tensor({out_dim, in_dim});
  p.biases = Tensor({out_dim});
  p.weight_grad = Tensor({out_dim, in_dim});
  p.bias_grad = Tensor({out_dim});
  return p;
}

void LayerParams::init_glorot(Rng& rng) {
  std::size_t fan_in, fan_out;
  if (kind == ParamKind::conv) {
    const std::size_t window = static_cast<std::size_t>(weights.shape[2]) * weights.shape[3];
    fan_in = static_cast<std::size_t>(weights.shape[1]) * window;
    fan_out = static_cast<std::size_t>(weights.shape[0]) * window;
  } else {
    fan_out = static_cast<std::size_t>(weights.shape[0]);
    fan_in = static_cast<std::size_t>(weights.shape[1]);
  }
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& w : weights.data) w = rng.uniform(-bound, bound);
  biases.fill(0.0);
}

void LayerParams::zero_grads() {
  weight_grad.fill(0.0);
  bias_grad.fill(0.0);
  grad_ready = false;
}

const char* param_kind_name(ParamKind kind) {
  return kind == ParamKind::conv ? "conv" : "dense";
}

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(int in_c, int out_c, int kh, int kw, Padding pad)
    : params(LayerParams::make_conv(out_c, in_c, kh, kw)), padding(pad) {}

Tensor Conv2d::forward(const Tensor& input) {
  if (input.rank() != 3) {
    throw ConfigError("conv2d expects a rank-3 input, got " + input.shape_str());
  }
  const int in_c = params.weights.shape[1];
  const int out_c = params.weights.shape[0];
  const int kh = params.weights.shape[2];
  const int kw = params.weights.shape[3];
  if (input.shape[0] != in_c) {
    throw ConfigError("conv2d channel mismatch: input " + input.shape_str() +
                      ", kernel expects " + std::to_string(in_c) + " channels");
  }
  in_h_ = input.shape[1];
  in_w_ = input.shape[2];

  int ph = 0, pw = 0;
  if (padding == Padding::same) {
    ph = kh - 1;
    pw = kw - 1;
  }
  const int ph_before = ph / 2;
  const int pw_before = pw / 2;
  const int out_h = in_h_ + ph - kh + 1;
  const int out_w = in_w_ + pw - kw + 1;
  if (out_h <= 0 || out_w <= 0) {
    throw ConfigError("conv2d kernel " + params.weights.shape_str() +
                      " does not fit input " + input.shape_str());
  }

  padded_input_ = Tensor({in_c, in_h_ + ph, in_w_ + pw});
  for (int c = 0; c < in_c; ++c) {
    for (int h = 0; h < in_h_; ++h) {
      for (int w = 0; w < in_w_; ++w) {
        padded_input_.at(c, h + ph_before, w + pw_before) = input.at(c, h, w);
      }
    }
  }

  Tensor out({out_c, out_h, out_w});
  for (int oc = 0; oc < out_c; ++oc) {
    const double b = params.biases.data[oc];
    double* out_plane = &out.at(oc, 0, 0);
    std::fill(out_plane, out_plane + static_cast<std::size_t>(out_h) * out_w, b);
    for (int ic = 0; ic < in_c; ++ic) {
      for (int y = 0; y < kh; ++y) {
        for (int x = 0; x < kw; ++x) {
          const double wv =
              params.weights.data[((static_cast<std::size_t>(oc) * in_c + ic) * kh + y) * kw + x];
          for (int oh = 0; oh < out_h; ++oh) {
            const double* in_row = &padded_input_.at(ic, oh + y, x);
            double* out_row = &out.at(oc, oh, 0);
            for (int ow = 0; ow < out_w; ++ow) {
              out_row[ow] += wv * in_row[ow];
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  const int in_c = params.weights.shape[1];
  const int out_c = params.weights.shape[0];
  const int kh = params.weights.shape[2];
  const int kw = params.weights.shape[3];
  const int out_h = grad_out.shape[1];
  const int out_w = grad_out.shape[2];

  Tensor grad_padded({padded_input_.shape[0], padded_input_.shape[1], padded_input_.shape[2]});

  for (int oc = 0; oc < out_c; ++oc) {
    double gb = 0.0;
    const double* go_plane = &grad_out.at(oc, 0, 0);
    for (std::size_t i = 0; i < static_cast<std::size_t>(out_h) * out_w; ++i) gb += go_plane[i];
    params.bias_grad.data[oc] += gb;

    for (int ic = 0; ic < in_c; ++ic) {
      for (int y = 0; y < kh; ++y) {
        for (int x = 0; x < kw; ++x) {
          const std::size_t widx =
              ((static_cast<std::size_t>(oc) * in_c + ic) * kh + y) * kw + x;
          const double wv = params.weights.data[widx];
          double gw = 0.0;
          for (int oh = 0; oh < out_h; ++oh) {
            const double* in_row = &padded_input_.at(ic, oh + y, x);
            double* gp_row = &grad_padded.at(ic, oh + y, x);
            const double* go_row = &grad_out.at(oc, oh, 0);
            for (int ow = 0; ow < out_w; ++ow) {
              gw += go_row[ow] * in_row[ow];
              gp_row[ow] += wv * go_row[ow];
            }
          }
          params.weight_grad.data[widx] += gw;
        }
      }
    }
  }
  params.grad_ready = true;

  const int ph_before = (padding == Padding::same) ? (kh - 1) / 2 : 0;
  const int pw_before = (padding == Padding::same) ? (kw - 1) / 2 : 0;
  Tensor grad_in({in_c, in_h_, in_w_});
  for (int c = 0; c < in_c; ++c) {
    for (int h = 0; h < in_h_; ++h) {
      for (int w = 0; w < in_w_; ++w) {
        grad_in.at(c, h, w) = grad_padded.at(c, h + ph_before, w + pw_before);
      }
    }
  }
  return grad_in;
}

// ---------------------------------------------------------------------------
// MaxPool2x2

Tensor MaxPool2x2::forward(const Tensor& input) {
  if (input.rank() != 3) {
    throw ConfigError("maxpool expects a rank-3 input, got " + input.shape_str());
  }
  in_shape_ = input.shape;
  const int c = input.shape[0], h = input.shape[1], w = input.shape[2];
  const int oh = (h + 1) / 2, ow = (w + 1) / 2;
  Tensor out({c, oh, ow});
  argmax_.assign(out.numel(), 0);

  std::size_t oi = 0;
  for (int ci = 0; ci < c; ++ci) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x, ++oi) {
        double best = -1.0;
        std::size_t best_idx = 0;
        bool first = true;
        for (int dy = 0; dy < 2; ++dy) {
          const int iy = 2 * y + dy;
          if (iy >= h) break;
          for (int dx = 0; dx < 2; ++dx) {
            const int ix = 2 * x + dx;
            if (ix >= w) break;
            const double v = input.at(ci, iy, ix);
            if (first || v > best) {
              best = v;
              best_idx = (static_cast<std::size_t>(ci) * h + iy) * w + ix;
              first = false;
            }
          }
        }
        out.data[oi] = best;
        argmax_[oi] = best_idx;
      }
    }
  }
  return out;
}

Tensor MaxPool2x2::backward(const Tensor& grad_out) {
  Tensor grad_in(in_shape_);
  for (std::size_t i = 0; i < grad_out.numel(); ++i) {
    grad_in.data[argmax_[i]] += grad_out.data[i];
  }
  return grad_in;
}

// ---------------------------------------------------------------------------
// Upsample2x

Tensor Upsample2x::forward(const Tensor& input) {
  if (input.rank() != 3) {
    throw ConfigError("upsample expects a rank-3 input, got " + input.shape_str());
  }
  in_shape_ = input.shape;
  const int c = input.shape[0], h = input.shape[1], w = input.shape[2];
  Tensor out({c, 2 * h, 2 * w});
  for (int ci = 0; ci < c; ++ci) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double v = input.at(ci, y, x);
        out.at(ci, 2 * y, 2 * x) = v;
        out.at(ci, 2 * y, 2 * x + 1) = v;
        out.at(ci, 2 * y + 1, 2 * x) = v;
        out.at(ci, 2 * y + 1, 2 * x + 1) = v;
      }
    }
  }
  return out;
}

Tensor Upsample2x::backward(const Tensor& grad_out) {
  Tensor grad_in(in_shape_);
  const int c = in_shape_[0], h = in_shape_[1], w = in_shape_[2];
  for (int ci = 0; ci < c; ++ci) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        grad_in.at(ci, y, x) = grad_out.at(ci, 2 * y, 2 * x) +
                               grad_out.at(ci, 2 * y, 2 * x + 1) +
                               grad_out.at(ci, 2 * y + 1, 2 * x) +
                               grad_out.at(ci, 2 * y + 1, 2 * x + 1);
      }
    }
  }
  return grad_in;
}

// ---------------------------------------------------------------------------
// Crop2d

Tensor Crop2d::forward(const Tensor& input) {
  in_shape_ = input.shape;
  if (input.shape[1] < target_h_ || input.shape[2] < target_w_) {
    throw ConfigError("crop target exceeds input " + input.shape_str());
  }
  if (input.shape[1] == target_h_ && input.shape[2] == target_w_) return input;
  const int c = input.shape[0];
  Tensor out({c, target_h_, target_w_});
  for (int ci = 0; ci < c; ++ci) {
    for (int y = 0; y < target_h_; ++y) {
      for (int x = 0; x < target_w_; ++x) {
        out.at(ci, y, x) = input.at(ci, y, x);
      }
    }
  }
  return out;
}

Tensor Crop2d::backward(const Tensor& grad_out) {
  if (in_shape_[1] == target_h_ && in_shape_[2] == target_w_) return grad_out;
  Tensor grad_in(in_shape_);
  const int c = in_shape_[0];
  for (int ci = 0; ci < c; ++ci) {
    for (int y = 0; y < target_h_; ++y) {
      for (int x = 0; x < target_w_; ++x) {
        grad_in.at(ci, y, x) = grad_out.at(ci, y, x);
      }
    }
  }
  return grad_in;
}

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(int out_dim, int in_dim) : params(LayerParams::make_dense(out_dim, in_dim)) {}

Tensor Dense::forward(const Tensor& input) {
  const int out_dim = params.weights.shape[0];
  const int in_dim = params.weights.shape[1];
  if (static_cast<int>(input.numel()) != in_dim) {
    throw ConfigError("dense expects " + std::to_string(in_dim) + " inputs, got " +
                      input.shape_str());
  }
  input_ = input;
  Tensor out({out_dim});
  for (int o = 0; o < out_dim; ++o) {
    const double* w = &params.weights.data[static_cast<std::size_t>(o) * in_dim];
    double acc = params.biases.data[o];
    for (int i = 0; i < in_dim; ++i) acc += w[i] * input.data[i];
    out.data[o] = acc;
  }
  return out;
}

Tensor Dense::backward(const Tensor& grad_out) {
  const int out_dim = params.weights.shape[0];
  const int in_dim = params.weights.shape[1];
  Tensor grad_in({in_dim});
  for (int o = 0; o < out_dim; ++o) {
    const double g = grad_out.data[o];
    params.bias_grad.data[o] += g;
    const double* w = &params.weights.data[static_cast<std::size_t>(o) * in_dim];
    double* gw = &params.weight_grad.data[static_cast<std::size_t>(o) * in_dim];
    for (int i = 0; i < in_dim; ++i) {
      gw[i] += g * input_.data[i];
      grad_in.data[i] += g * w[i];
    }
  }
  params.grad_ready = true;
  return grad_in;
}

// ---------------------------------------------------------------------------
// Activations

Tensor Relu::forward(const Tensor& input) {
  input_ = input;
  return relu(input);
}

Tensor Relu::backward(const Tensor& grad_out) {
  Tensor grad_in(input_.shape);
  for (std::size_t i = 0; i < grad_in.numel(); ++i) {
    grad_in.data[i] = input_.data[i] > 0.0 ? grad_out.data[i] : 0.0;
  }
  return grad_in;
}

Tensor SigmoidLayer::forward(const Tensor& input) {
  output_ = sigmoid(input);
  return output_;
}

Tensor SigmoidLayer::backward(const Tensor& grad_out) {
  Tensor grad_in(output_.shape);
  for (std::size_t i = 0; i < grad_in.numel(); ++i) {
    const double y = output_.data[i];
    grad_in.data[i] = grad_out.data[i] * y * (1.0 - y);
  }
  return grad_in;
}

Tensor relu(const Tensor& input) {
  Tensor out(input.shape);
  for (std::size_t i = 0; i < out.numel(); ++i) {
    out.data[i] = input.data[i] > 0.0 ? input.data[i] : 0.0;
  }
  return out;
}

Tensor sigmoid(const Tensor& input) {
  Tensor out(input.shape);
  for (std::size_t i = 0; i < out.numel(); ++i) {
    out.data[i] = 1.0 / (1.0 + std::exp(-input.data[i]));
  }
  return out;
}

// ---------------------------------------------------------------------------

void sgd_step(const std::vector<LayerParams*>& params, double learning_rate) {
  for (LayerParams* p : params) {
    if (!p->grad_ready) {
      throw StateError("sgd_step before backward: no gradient accumulated");
    }
  }
  for (LayerParams* p : params) {
    for (std::size_t i = 0; i < p->weights.numel(); ++i) {
      p->weights.data[i] -= learning_rate * p->weight_grad.data[i];
    }
    for (std::size_t i = 0; i < p->biases.numel(); ++i) {
      p->biases.data[i] -= learning_rate * p->bias_grad.data[i];
    }
    p->zero_grads();
  }
}

}  // namespace xmexp
