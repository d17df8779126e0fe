#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "xmexp/audio.hpp"
#include "xmexp/tensor.hpp"

namespace xmexp {

// One paired observation. The identity is carried for evaluation only;
// training code receives a StimulusView, which has no label field at all.
struct StimulusPair {
  std::optional<Tensor> image;         // [3, S, S] in [0, 1]
  std::optional<Tensor> spectrogram;   // [1, 100, 40] in [0, 1]
  int identity = -1;
  std::string identity_name;
  std::string source_id;
};

struct StimulusView {
  const Tensor* image = nullptr;
  const Tensor* spectrogram = nullptr;
};

inline StimulusView training_view(const StimulusPair& pair) {
  return {pair.image ? &*pair.image : nullptr,
          pair.spectrogram ? &*pair.spectrogram : nullptr};
}

struct Dataset {
  std::vector<StimulusPair> samples;
  std::vector<std::string> identities;   // dense index -> name

  std::vector<std::vector<int>> indices_by_identity() const;
};

// ---------------------------------------------------------------------------
// Synthetic paired-identity data: per identity a low-frequency visual motif
// and a harmonic tone at a distinct Mel filter, plus per-sample noise.

struct SyntheticSpec {
  int identities = 4;
  int samples_per_identity = 10;
  double image_noise = 0.02;
  double audio_noise = 0.02;
  double min_motif_distance = 0.08;   // mean abs difference between motifs
};

struct SyntheticSample {
  std::string identity;
  Tensor image;        // [3, S, S]
  AudioClip audio;     // 1 s
};

std::vector<SyntheticSample> synthesize(const SyntheticSpec& spec, int image_size,
                                        const AudioParams& audio, std::uint64_t seed);

Dataset to_dataset(const std::vector<SyntheticSample>& samples, const AudioParams& audio);

// Writes <identity>_s<i>.ppm / .wav plus manifest.csv rows
// `identity,image_path,audio_path` (paths relative to the directory).
void write_synthetic(const std::vector<SyntheticSample>& samples,
                     const std::filesystem::path& out_dir);

// Loads a manifest written by write_synthetic (or hand-assembled from
// converted real data). Images are nearest-neighbour resized to image_size,
// audio is resampled/trimmed to one second and converted to a spectrogram.
Dataset ingest_dataset(const std::filesystem::path& manifest_path, int image_size,
                       const AudioParams& audio);

// Binary PPM (P6, maxval 255). Values map linearly to [0, 1].
Tensor read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Tensor& image);

Tensor nearest_resize(const Tensor& image, int out_h, int out_w);

}  // namespace xmexp
