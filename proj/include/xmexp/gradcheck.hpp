#pragma once

#include <functional>
#include <string>
#include <vector>

#include "xmexp/layers.hpp"
#include "xmexp/tensor.hpp"

namespace xmexp {

// A named tensor whose analytic gradient should be verified. Works for layer
// parameters and for inputs alike — anything the loss depends on.
struct ParamBlockRef {
  std::string name;
  Tensor* values;
  Tensor* grads;
};

struct GradCheckBlock {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};

struct GradCheckReport {
  double tolerance = 0.0;
  std::vector<GradCheckBlock> blocks;

  bool passed() const;
  // Name of the worst offending block, empty if all within tolerance.
  std::string first_failure() const;
  double worst_error() const;
};

// Central-difference gradient verification:
//   numeric = (f(w + eps) - f(w - eps)) / (2 eps)
// compared against the analytic gradient with relative error
//   |a - n| / max(|a| + |n|, 1e-6).
//
// `forward` evaluates the loss without touching gradients;
// `forward_backward` evaluates the same loss and accumulates gradients into
// the blocks' grad tensors. max_checks_per_block == 0 checks every entry;
// otherwise entries are sampled at a uniform stride.
GradCheckReport gradcheck(const std::vector<ParamBlockRef>& blocks,
                          const std::function<double()>& forward,
                          const std::function<double()>& forward_backward,
                          double epsilon, double tolerance,
                          std::size_t max_checks_per_block = 0);

// Convenience: the two blocks of a LayerParams.
std::vector<ParamBlockRef> param_blocks(const std::string& prefix, LayerParams& params);

}  // namespace xmexp
