#pragma once

#include "xmexp/tensor.hpp"

namespace xmexp {

enum class Modality { visual, auditory };

inline const char* modality_name(Modality m) {
  return m == Modality::visual ? "visual" : "auditory";
}

// Low-dimensional representation produced by a perception column.
struct Latent {
  Tensor values;   // rank-1
  Modality modality = Modality::visual;
};

}  // namespace xmexp
