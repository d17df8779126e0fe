#include "xmexp/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "xmexp/errors.hpp"

namespace xmexp {

bool GradCheckReport::passed() const {
  return std::all_of(blocks.begin(), blocks.end(),
                     [&](const GradCheckBlock& b) { return b.max_rel_err < tolerance; });
}

std::string GradCheckReport::first_failure() const {
  for (const auto& b : blocks) {
    if (b.max_rel_err >= tolerance) return b.name;
  }
  return {};
}

double GradCheckReport::worst_error() const {
  double worst = 0.0;
  for (const auto& b : blocks) worst = std::max(worst, b.max_rel_err);
  return worst;
}

GradCheckReport gradcheck(const std::vector<ParamBlockRef>& blocks,
                          const std::function<double()>& forward,
                          const std::function<double()>& forward_backward,
                          double epsilon, double tolerance,
                          std::size_t max_checks_per_block) {
  if (epsilon <= 0.0) throw UsageError("gradcheck requires epsilon > 0");

  for (const auto& b : blocks) b.grads->fill(0.0);
  forward_backward();

  // Snapshot analytic gradients before perturbing anything.
  std::vector<std::vector<double>> analytic;
  analytic.reserve(blocks.size());
  for (const auto& b : blocks) analytic.push_back(b.grads->data);

  GradCheckReport report;
  report.tolerance = tolerance;
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    const auto& block = blocks[bi];
    GradCheckBlock result;
    result.name = block.name;

    const std::size_t n = block.values->numel();
    std::size_t stride = 1;
    if (max_checks_per_block > 0 && n > max_checks_per_block) {
      stride = (n + max_checks_per_block - 1) / max_checks_per_block;
    }
    for (std::size_t i = 0; i < n; i += stride) {
      const double saved = block.values->data[i];
      block.values->data[i] = saved + epsilon;
      const double f_plus = forward();
      block.values->data[i] = saved - epsilon;
      const double f_minus = forward();
      block.values->data[i] = saved;

      const double numeric = (f_plus - f_minus) / (2.0 * epsilon);
      const double a = analytic[bi][i];
      const double rel =
          std::fabs(a - numeric) / std::max(std::fabs(a) + std::fabs(numeric), 1e-6);
      result.max_rel_err = std::max(result.max_rel_err, rel);
      ++result.checked;
    }
    report.blocks.push_back(std::move(result));
  }
  return report;
}

std::vector<ParamBlockRef> param_blocks(const std::string& prefix, LayerParams& params) {
  return {
      {prefix + ".weights", &params.weights, &params.weight_grad},
      {prefix + ".biases", &params.biases, &params.bias_grad},
  };
}

}  // namespace xmexp
