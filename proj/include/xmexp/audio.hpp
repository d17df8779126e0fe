#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "xmexp/tensor.hpp"

namespace xmexp {

// The spectrogram shape is the binding contract between the audio frontend
// and the auditory channel: 100 frames x 40 Mel bands.
inline constexpr int kSpectrogramFrames = 100;
inline constexpr int kMelBands = 40;

struct AudioParams {
  int sample_rate = 16000;
  double window_ms = 25.0;
  double hop_ms = 10.0;
};

// Mono audio, samples in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 16000;
};

// Linear-interpolation resampling.
AudioClip resampled(const AudioClip& clip, int new_rate);

// Trim to / zero-pad at the end so the clip is exactly one second.
AudioClip normalized_to_one_second(const AudioClip& clip);

// Split into exactly kSpectrogramFrames frames of window_ms samples,
// symmetrically zero-padding (or center-trimming) the signal as needed.
std::vector<std::vector<double>> frame_signal(const AudioClip& clip, double window_ms,
                                              double hop_ms);

// In-place Hamming window: w[n] = 0.54 - 0.46 cos(2 pi n / (N-1)).
void hamming(std::vector<double>& frame);

// Iterative radix-2 FFT over a power-of-two-sized buffer.
void fft_radix2(std::vector<std::complex<double>>& buf);

// One-sided magnitude spectrum, bins 0..N/2 of the frame zero-padded to the
// next power of two.
std::vector<double> dft_magnitude(const std::vector<double>& frame);

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct MelFilter {
  int start_bin = 0;
  int peak_bin = 0;
  int end_bin = 0;                 // inclusive
  std::vector<double> weights;     // one per bin in [start_bin, end_bin]
};

// Triangular filters with centers equally spaced on the Mel scale between 0
// and rate/2; each filter's weights are normalized to peak at 1.
struct MelFilterbank {
  int dft_size = 0;
  int sample_rate = 0;
  std::vector<MelFilter> filters;
  double center_hz(int filter_index) const;
  std::vector<double> apply(const std::vector<double>& power_spectrum) const;
};

MelFilterbank build_mel_filterbank(int num_filters, int sample_rate, int dft_size);

// Full pipeline: resample to params.sample_rate, pad/trim to 1 s, frame,
// window, power spectrum, Mel energies, log(1+x), global min-max to [0, 1].
// Output shape [1, 100, 40]; a constant clip maps to all zeros.
Tensor log_mel_spectrogram(const AudioClip& clip, const AudioParams& params = {});

// PCM 16-bit WAV. Stereo is averaged to mono on read.
AudioClip read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

}  // namespace xmexp
