#include "xmexp/tensor.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "xmexp/errors.hpp"

namespace xmexp {

std::size_t shape_numel(const std::vector<int>& dims) {
  std::size_t n = 1;
  for (int d : dims) {
    if (d <= 0) throw ConfigError("tensor dims must be positive");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

Tensor::Tensor(std::vector<int> dims) : shape(std::move(dims)) {
  data.assign(shape_numel(shape), 0.0);
}

Tensor::Tensor(std::vector<int> dims, std::vector<double> values)
    : shape(std::move(dims)), data(std::move(values)) {
  if (shape_numel(shape) != data.size()) {
    throw ConfigError("tensor data length does not match shape " + shape_str());
  }
}

Tensor Tensor::full(std::vector<int> dims, double value) {
  Tensor t(std::move(dims));
  t.fill(value);
  return t;
}

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::reshaped(std::vector<int> dims) const {
  if (shape_numel(dims) != data.size()) {
    throw ConfigError("reshape " + shape_str() + " to incompatible size");
  }
  return Tensor(std::move(dims), data);
}

void Tensor::fill(double value) {
  data.assign(data.size(), value);
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

}  // namespace xmexp
