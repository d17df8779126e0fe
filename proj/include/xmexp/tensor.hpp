#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace xmexp {

// Dense n-dimensional array of doubles, row-major. The single carrier type
// for stimuli, feature maps, latents and parameters.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> dims);                       // zero-filled
  Tensor(std::vector<int> dims, std::vector<double> values);

  static Tensor full(std::vector<int> dims, double value);

  std::size_t numel() const { return data.size(); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int axis) const { return shape.at(static_cast<std::size_t>(axis)); }

  // Rank-3 accessors, [channel, row, col].
  double& at(int c, int h, int w) {
    return data[(static_cast<std::size_t>(c) * shape[1] + h) * shape[2] + w];
  }
  const double& at(int c, int h, int w) const {
    return data[(static_cast<std::size_t>(c) * shape[1] + h) * shape[2] + w];
  }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  bool all_finite() const;
  Tensor reshaped(std::vector<int> dims) const;
  void fill(double value);

  std::string shape_str() const;
};

// Product of dims; throws ConfigError on non-positive entries.
std::size_t shape_numel(const std::vector<int>& dims);

}  // namespace xmexp
