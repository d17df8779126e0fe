#pragma once

#include <cstdint>
#include <deque>
#include <utility>
#include <vector>

#include "xmexp/latent.hpp"
#include "xmexp/rng.hpp"

namespace xmexp {

// Concatenated visual+auditory latent. An absent sub-vector is zero-filled
// and excluded from distance computations via the presence mask.
struct ConcatLatent {
  std::vector<double> values;
  bool visual_present = true;
  bool auditory_present = true;

  int half_dim() const { return static_cast<int>(values.size()) / 2; }
};

ConcatLatent concat_latents(const Latent& visual, const Latent& auditory);

// FIFO buffer of the last `capacity` co-occurring latent pairs. Storing only
// congruent (full-presence) observations is what lets incongruent outliers
// age out.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity = 50);

  void push(const ConcatLatent& latent);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<ConcatLatent>& contents() const { return items_; }

 private:
  std::size_t capacity_;
  std::deque<ConcatLatent> items_;
};

struct SomConfig {
  int rows = 10;
  int cols = 10;
  int epochs = 100;
  double alpha_start = 0.3;
  double alpha_end = 0.01;
  double sigma_start = -1.0;   // < 0 selects max(rows, cols) / 2
  double sigma_end = 0.5;
};

// Self-organizing co-occurrence layer: a 2-D lattice of prototype vectors
// over concatenated latents, trained online from the replay memory.
class SomGrid {
 public:
  struct Unit {
    int row = 0;
    int col = 0;
    bool operator==(const Unit&) const = default;
  };

  SomGrid(const SomConfig& cfg, int dim, std::uint64_t seed);

  int rows() const { return cfg_.rows; }
  int cols() const { return cfg_.cols; }
  int dim() const { return dim_; }
  const SomConfig& config() const { return cfg_; }

  // Best-matching unit under the masked, per-dimension-normalized Euclidean
  // distance. Ties break to the smallest (row, col) in row-major order.
  std::pair<Unit, double> bmu(const ConcatLatent& query) const;
  double masked_distance(Unit unit, const ConcatLatent& query) const;

  // Prototype halves as tagged latents: [0, d/2) visual, [d/2, d) auditory.
  std::pair<Latent, Latent> split_prototype(Unit unit) const;

  // Classic online SOM over the whole replay memory: epochs passes, each a
  // seeded shuffle, Gaussian neighbourhood, learning rate and radius decaying
  // linearly across the epochs (schedules restart every call).
  void train(const ReplayMemory& memory);

  double quantization_error(const ReplayMemory& memory) const;

  std::vector<double>& prototype(Unit unit);
  const std::vector<double>& prototype(Unit unit) const;

  // Prototype init: cycle the given latents over the grid plus small seeded
  // noise. train() applies this lazily from the memory on first call.
  void seed_from(const std::deque<ConcatLatent>& data);
  void randomize(double lo, double hi);
  bool initialized() const { return initialized_; }

  double current_alpha() const { return alpha_; }
  double current_sigma() const { return sigma_; }

  // Flat [rows*cols*dim] view for checkpointing.
  std::vector<double> flat() const;
  void load_flat(const std::vector<double>& values);

 private:
  double masked_sq_sum(const std::vector<double>& proto, const ConcatLatent& query,
                       int* present_dims) const;

  SomConfig cfg_;
  int dim_;
  std::vector<std::vector<double>> prototypes_;   // row-major units
  bool initialized_ = false;
  double alpha_ = 0.0;
  double sigma_ = 0.0;
  Rng rng_;
};

}  // namespace xmexp
