#pragma once

#include <cstdint>
#include <string>

#include "xmexp/dataset.hpp"
#include "xmexp/trainer.hpp"

namespace xmexp {

// Flat `section.key = value` run configuration. Every field has a default;
// unknown keys are rejected naming the key. Environment variables override
// file values as XMEXP_<SECTION>_<KEY> (dots become underscores).
struct RunConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "runs";

  std::string data_source = "synthetic";   // synthetic | manifest
  std::string data_manifest;

  SyntheticSpec synth;

  int image_size = 64;
  int latent_dim = 128;
  std::array<int, 3> filters{16, 32, 64};
  std::array<int, 3> visual_kernels{5, 3, 3};
  std::array<int, 3> auditory_kernels{3, 3, 3};

  AudioParams audio;

  SomConfig som;
  std::size_t replay_capacity = 50;
  TrainerConfig trainer;

  ModelConfig model_config() const;
  void validate() const;
};

// Parses config text; `where` names the source in diagnostics.
RunConfig parse_config_text(const std::string& text, const std::string& where);

// Reads the file (or defaults when path is empty), then applies environment
// overrides and validates.
RunConfig load_config(const std::string& path);

void apply_env_overrides(RunConfig& cfg);

}  // namespace xmexp
