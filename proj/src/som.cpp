#include "xmexp/som.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xmexp/errors.hpp"

namespace xmexp {

ConcatLatent concat_latents(const Latent& visual, const Latent& auditory) {
  if (visual.modality != Modality::visual || auditory.modality != Modality::auditory) {
    throw UsageError("concat_latents: latents must be (visual, auditory)");
  }
  if (visual.values.numel() != auditory.values.numel()) {
    throw UsageError("concat_latents: halves must have equal dims");
  }
  ConcatLatent out;
  out.values.reserve(visual.values.numel() * 2);
  out.values.insert(out.values.end(), visual.values.data.begin(), visual.values.data.end());
  out.values.insert(out.values.end(), auditory.values.data.begin(), auditory.values.data.end());
  return out;
}

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("replay memory capacity must be positive");
}

void ReplayMemory::push(const ConcatLatent& latent) {
  if (!latent.visual_present || !latent.auditory_present) {
    throw UsageError("replay memory stores co-occurrences: both modalities must be present");
  }
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(latent);
}

// ---------------------------------------------------------------------------

SomGrid::SomGrid(const SomConfig& cfg, int dim, std::uint64_t seed)
    : cfg_(cfg), dim_(dim), rng_(seed) {
  if (cfg_.rows < 2 || cfg_.cols < 2) throw ConfigError("SOM grid must be at least 2x2");
  if (dim_ <= 0 || dim_ % 2 != 0) {
    throw ConfigError("SOM prototype dim must be positive and even");
  }
  if (cfg_.epochs < 1) throw ConfigError("SOM epochs must be >= 1");
  prototypes_.assign(static_cast<std::size_t>(cfg_.rows) * cfg_.cols,
                     std::vector<double>(dim_, 0.0));
}

double SomGrid::masked_sq_sum(const std::vector<double>& proto, const ConcatLatent& query,
                              int* present_dims) const {
  const int half = dim_ / 2;
  double acc = 0.0;
  int present = 0;
  if (query.visual_present) {
    for (int i = 0; i < half; ++i) {
      const double d = query.values[i] - proto[i];
      acc += d * d;
    }
    present += half;
  }
  if (query.auditory_present) {
    for (int i = half; i < dim_; ++i) {
      const double d = query.values[i] - proto[i];
      acc += d * d;
    }
    present += half;
  }
  *present_dims = present;
  return acc;
}

std::pair<SomGrid::Unit, double> SomGrid::bmu(const ConcatLatent& query) const {
  if (!query.visual_present && !query.auditory_present) {
    throw UsageError("bmu: query has an empty presence mask");
  }
  if (static_cast<int>(query.values.size()) != dim_) {
    throw UsageError("bmu: query dim " + std::to_string(query.values.size()) +
                     " does not match grid dim " + std::to_string(dim_));
  }
  Unit best;
  double best_sq = 0.0;
  int present = 0;
  bool first = true;
  for (int r = 0; r < cfg_.rows; ++r) {
    for (int c = 0; c < cfg_.cols; ++c) {
      const auto& proto = prototypes_[static_cast<std::size_t>(r) * cfg_.cols + c];
      const double sq = masked_sq_sum(proto, query, &present);
      if (first || sq < best_sq) {
        best = {r, c};
        best_sq = sq;
        first = false;
      }
    }
  }
  return {best, std::sqrt(best_sq / present)};
}

double SomGrid::masked_distance(Unit unit, const ConcatLatent& query) const {
  if (unit.row < 0 || unit.row >= cfg_.rows || unit.col < 0 || unit.col >= cfg_.cols) {
    throw UsageError("masked_distance: unit out of range");
  }
  if (!query.visual_present && !query.auditory_present) {
    throw UsageError("masked_distance: query has an empty presence mask");
  }
  int present = 0;
  const double sq = masked_sq_sum(prototype(unit), query, &present);
  return std::sqrt(sq / present);
}

std::pair<Latent, Latent> SomGrid::split_prototype(Unit unit) const {
  if (unit.row < 0 || unit.row >= cfg_.rows || unit.col < 0 || unit.col >= cfg_.cols) {
    throw UsageError("split_prototype: unit (" + std::to_string(unit.row) + "," +
                     std::to_string(unit.col) + ") out of range");
  }
  const auto& proto = prototype(unit);
  const int half = dim_ / 2;
  Latent visual{Tensor({half}), Modality::visual};
  Latent auditory{Tensor({half}), Modality::auditory};
  std::copy(proto.begin(), proto.begin() + half, visual.values.data.begin());
  std::copy(proto.begin() + half, proto.end(), auditory.values.data.begin());
  return {std::move(visual), std::move(auditory)};
}

void SomGrid::seed_from(const std::deque<ConcatLatent>& data) {
  if (data.empty()) throw UsageError("seed_from: no latents to seed from");
  for (std::size_t u = 0; u < prototypes_.size(); ++u) {
    const auto& src = data[u % data.size()].values;
    for (int i = 0; i < dim_; ++i) {
      prototypes_[u][i] = src[i] + rng_.uniform(-0.01, 0.01);
    }
  }
  initialized_ = true;
}

void SomGrid::randomize(double lo, double hi) {
  for (auto& proto : prototypes_) {
    for (double& v : proto) v = rng_.uniform(lo, hi);
  }
  initialized_ = true;
}

void SomGrid::train(const ReplayMemory& memory) {
  if (memory.size() == 0) throw UsageError("train_som: replay memory is empty");
  if (!initialized_) seed_from(memory.contents());

  const int epochs = cfg_.epochs;
  const double sigma0 = cfg_.sigma_start >= 0.0
                            ? cfg_.sigma_start
                            : std::max(cfg_.rows, cfg_.cols) / 2.0;
  const int max_d2 = (cfg_.rows - 1) * (cfg_.rows - 1) + (cfg_.cols - 1) * (cfg_.cols - 1);
  std::vector<double> influence(static_cast<std::size_t>(max_d2) + 1);

  std::vector<std::size_t> order(memory.size());
  std::iota(order.begin(), order.end(), 0);

  for (int e = 0; e < epochs; ++e) {
    const double t = epochs > 1 ? static_cast<double>(e) / (epochs - 1) : 0.0;
    alpha_ = cfg_.alpha_start + (cfg_.alpha_end - cfg_.alpha_start) * t;
    sigma_ = sigma0 + (cfg_.sigma_end - sigma0) * t;

    // alpha * Gaussian neighbourhood per squared grid distance; grid
    // coordinates are integers so d2 indexes a small table.
    const double denom = 2.0 * sigma_ * sigma_;
    for (int d2 = 0; d2 <= max_d2; ++d2) {
      influence[d2] = denom > 0.0 ? alpha_ * std::exp(-d2 / denom) : (d2 == 0 ? alpha_ : 0.0);
    }

    rng_.shuffle(order);
    for (std::size_t idx : order) {
      const std::vector<double>& x = memory.contents()[idx].values;

      // Full-vector BMU: replay entries always carry both modalities.
      std::size_t best_u = 0;
      double best_sq = 0.0;
      bool first = true;
      for (std::size_t u = 0; u < prototypes_.size(); ++u) {
        const auto& p = prototypes_[u];
        double sq = 0.0;
        for (int i = 0; i < dim_; ++i) {
          const double d = x[i] - p[i];
          sq += d * d;
        }
        if (first || sq < best_sq) {
          best_u = u;
          best_sq = sq;
          first = false;
        }
      }
      const int br = static_cast<int>(best_u) / cfg_.cols;
      const int bc = static_cast<int>(best_u) % cfg_.cols;

      for (int r = 0; r < cfg_.rows; ++r) {
        const int dr = r - br;
        for (int c = 0; c < cfg_.cols; ++c) {
          const int dc = c - bc;
          const double ah = influence[dr * dr + dc * dc];
          if (ah < 1e-15) continue;
          auto& p = prototypes_[static_cast<std::size_t>(r) * cfg_.cols + c];
          for (int i = 0; i < dim_; ++i) {
            p[i] += ah * (x[i] - p[i]);
          }
        }
      }
    }
  }
}

double SomGrid::quantization_error(const ReplayMemory& memory) const {
  if (memory.size() == 0) throw UsageError("quantization_error: replay memory is empty");
  double acc = 0.0;
  for (const auto& latent : memory.contents()) {
    acc += bmu(latent).second;
  }
  return acc / static_cast<double>(memory.size());
}

std::vector<double>& SomGrid::prototype(Unit unit) {
  return prototypes_[static_cast<std::size_t>(unit.row) * cfg_.cols + unit.col];
}

const std::vector<double>& SomGrid::prototype(Unit unit) const {
  return prototypes_[static_cast<std::size_t>(unit.row) * cfg_.cols + unit.col];
}

std::vector<double> SomGrid::flat() const {
  std::vector<double> out;
  out.reserve(prototypes_.size() * static_cast<std::size_t>(dim_));
  for (const auto& p : prototypes_) out.insert(out.end(), p.begin(), p.end());
  return out;
}

void SomGrid::load_flat(const std::vector<double>& values) {
  if (values.size() != prototypes_.size() * static_cast<std::size_t>(dim_)) {
    throw ConfigError("SOM flat size mismatch");
  }
  for (std::size_t u = 0; u < prototypes_.size(); ++u) {
    std::copy(values.begin() + static_cast<std::ptrdiff_t>(u * dim_),
              values.begin() + static_cast<std::ptrdiff_t>((u + 1) * dim_),
              prototypes_[u].begin());
  }
  initialized_ = true;
}

}  // namespace xmexp
