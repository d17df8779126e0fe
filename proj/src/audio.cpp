#include "xmexp/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>

#include "xmexp/errors.hpp"

namespace xmexp {

AudioClip resampled(const AudioClip& clip, int new_rate) {
  if (clip.sample_rate == new_rate) return clip;
  if (clip.samples.empty()) return {{}, new_rate};
  const std::size_t n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(clip.samples.size()) * new_rate / clip.sample_rate));
  AudioClip out;
  out.sample_rate = new_rate;
  out.samples.resize(n_out);
  const double step = static_cast<double>(clip.sample_rate) / new_rate;
  for (std::size_t i = 0; i < n_out; ++i) {
    const double pos = static_cast<double>(i) * step;
    const std::size_t lo = std::min(static_cast<std::size_t>(pos), clip.samples.size() - 1);
    const std::size_t hi = std::min(lo + 1, clip.samples.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    out.samples[i] = clip.samples[lo] * (1.0 - frac) + clip.samples[hi] * frac;
  }
  return out;
}

AudioClip normalized_to_one_second(const AudioClip& clip) {
  AudioClip out = clip;
  out.samples.resize(static_cast<std::size_t>(clip.sample_rate), 0.0);
  return out;
}

std::vector<std::vector<double>> frame_signal(const AudioClip& clip, double window_ms,
                                              double hop_ms) {
  if (clip.samples.empty()) throw InputError("frame_signal: empty clip");
  if (!(hop_ms > 0.0) || window_ms < hop_ms) {
    throw ConfigError("frame_signal requires window_ms >= hop_ms > 0");
  }
  const int window = std::max(2, static_cast<int>(std::lround(window_ms * clip.sample_rate / 1000.0)));
  const int hop = std::max(1, static_cast<int>(std::lround(hop_ms * clip.sample_rate / 1000.0)));

  // Symmetric pad (or center trim) so the hop grid yields exactly 100 frames.
  const std::size_t required =
      static_cast<std::size_t>(kSpectrogramFrames - 1) * hop + window;
  std::vector<double> padded(required, 0.0);
  const std::size_t n = clip.samples.size();
  if (required >= n) {
    const std::size_t offset = (required - n) / 2;
    std::copy(clip.samples.begin(), clip.samples.end(), padded.begin() + offset);
  } else {
    const std::size_t start = (n - required) / 2;
    std::copy(clip.samples.begin() + start, clip.samples.begin() + start + required,
              padded.begin());
  }

  std::vector<std::vector<double>> frames(kSpectrogramFrames);
  for (int f = 0; f < kSpectrogramFrames; ++f) {
    const std::size_t begin = static_cast<std::size_t>(f) * hop;
    frames[f].assign(padded.begin() + begin, padded.begin() + begin + window);
  }
  return frames;
}

void hamming(std::vector<double>& frame) {
  const std::size_t n = frame.size();
  if (n < 2) throw ConfigError("hamming window needs at least 2 samples");
  for (std::size_t i = 0; i < n; ++i) {
    frame[i] *= 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                       static_cast<double>(n - 1));
  }
}

void fft_radix2(std::vector<std::complex<double>>& buf) {
  const std::size_t n = buf.size();
  if (n == 0 || (n & (n - 1)) != 0) {
    throw ConfigError("fft_radix2 requires a power-of-two length");
  }
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(buf[i], buf[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = buf[i + k];
        const std::complex<double> v = buf[i + k + len / 2] * w;
        buf[i + k] = u + v;
        buf[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

static std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<double> dft_magnitude(const std::vector<double>& frame) {
  const std::size_t n = next_pow2(std::max<std::size_t>(frame.size(), 2));
  std::vector<std::complex<double>> buf(n, {0.0, 0.0});
  for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = {frame[i], 0.0};
  fft_radix2(buf);
  std::vector<double> mags(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) mags[k] = std::abs(buf[k]);
  return mags;
}

double MelFilterbank::center_hz(int filter_index) const {
  const double mel_max = hz_to_mel(sample_rate / 2.0);
  const double step = mel_max / (static_cast<double>(filters.size()) + 1.0);
  return mel_to_hz(step * (filter_index + 1));
}

std::vector<double> MelFilterbank::apply(const std::vector<double>& power_spectrum) const {
  std::vector<double> out(filters.size(), 0.0);
  for (std::size_t f = 0; f < filters.size(); ++f) {
    const MelFilter& filt = filters[f];
    double acc = 0.0;
    for (int k = filt.start_bin; k <= filt.end_bin; ++k) {
      acc += filt.weights[k - filt.start_bin] * power_spectrum[k];
    }
    out[f] = acc;
  }
  return out;
}

MelFilterbank build_mel_filterbank(int num_filters, int sample_rate, int dft_size) {
  if (sample_rate < 8000) throw ConfigError("mel filterbank requires sample_rate >= 8000");
  if (num_filters < 1) throw ConfigError("mel filterbank requires at least one filter");

  const double nyquist = sample_rate / 2.0;
  const double mel_max = hz_to_mel(nyquist);
  const double bin_hz = static_cast<double>(sample_rate) / dft_size;
  const int num_bins = dft_size / 2 + 1;

  // num_filters + 2 points equally spaced on the Mel scale.
  std::vector<double> edges(num_filters + 2);
  for (int i = 0; i < num_filters + 2; ++i) {
    edges[i] = mel_to_hz(mel_max * i / (num_filters + 1.0));
  }
  for (int i = 0; i + 1 < num_filters + 2; ++i) {
    if (edges[i + 1] - edges[i] < bin_hz) {
      throw ConfigError("dft_size " + std::to_string(dft_size) +
                        " too small to separate adjacent mel centers");
    }
  }

  MelFilterbank fb;
  fb.dft_size = dft_size;
  fb.sample_rate = sample_rate;
  fb.filters.resize(num_filters);
  for (int f = 0; f < num_filters; ++f) {
    const double left = edges[f], center = edges[f + 1], right = edges[f + 2];
    MelFilter filt;
    std::vector<double> weights;
    int start = -1;
    double peak = 0.0;
    int peak_bin = -1;
    for (int k = 0; k < num_bins; ++k) {
      const double hz = k * bin_hz;
      double w = 0.0;
      if (hz > left && hz < right) {
        w = hz <= center ? (hz - left) / (center - left) : (right - hz) / (right - center);
      }
      if (w > 0.0) {
        if (start < 0) start = k;
        weights.push_back(w);
        if (w > peak) {
          peak = w;
          peak_bin = k;
        }
      } else if (start >= 0) {
        break;
      }
    }
    if (start < 0 || peak <= 0.0) {
      throw ConfigError("mel filter " + std::to_string(f) + " covers no DFT bin");
    }
    for (double& w : weights) w /= peak;
    filt.start_bin = start;
    filt.end_bin = start + static_cast<int>(weights.size()) - 1;
    filt.peak_bin = peak_bin;
    filt.weights = std::move(weights);
    fb.filters[f] = std::move(filt);
  }
  return fb;
}

Tensor log_mel_spectrogram(const AudioClip& clip, const AudioParams& params) {
  if (clip.samples.empty()) throw InputError("log_mel_spectrogram: empty clip");

  AudioClip work = normalized_to_one_second(resampled(clip, params.sample_rate));
  auto frames = frame_signal(work, params.window_ms, params.hop_ms);

  const std::size_t dft_size = next_pow2(frames[0].size());
  const MelFilterbank fb =
      build_mel_filterbank(kMelBands, params.sample_rate, static_cast<int>(dft_size));

  Tensor spec({1, kSpectrogramFrames, kMelBands});
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (int f = 0; f < kSpectrogramFrames; ++f) {
    hamming(frames[f]);
    std::vector<double> mags = dft_magnitude(frames[f]);
    for (double& m : mags) m *= m;  // power
    const std::vector<double> mel = fb.apply(mags);
    for (int b = 0; b < kMelBands; ++b) {
      const double v = std::log1p(mel[b]);
      spec.at(0, f, b) = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  // Min-max normalize; a constant clip maps to zeros.
  const double range = hi - lo;
  if (range > 0.0) {
    for (double& v : spec.data) v = (v - lo) / range;
  } else {
    spec.fill(0.0);
  }
  return spec;
}

// ---------------------------------------------------------------------------
// WAV I/O — PCM 16-bit little-endian.

namespace {

std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

[[noreturn]] void wav_error(const std::filesystem::path& path, std::size_t offset,
                            const std::string& what) {
  throw InputError("malformed WAV " + path.string() + " at offset " +
                   std::to_string(offset) + ": " + what);
}

void append_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void append_u16le(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open WAV file " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();

  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0) wav_error(path, 0, "missing RIFF tag");
  if (std::memcmp(p + 8, "WAVE", 4) != 0) wav_error(path, 8, "missing WAVE tag");

  int channels = 0;
  int rate = 0;
  bool have_fmt = false;
  std::size_t off = 12;
  while (off + 8 <= n) {
    const std::size_t chunk_size = read_u32le(p + off + 4);
    const std::size_t body = off + 8;
    if (body + chunk_size > n) wav_error(path, off, "chunk overruns file");
    if (std::memcmp(p + off, "fmt ", 4) == 0) {
      if (chunk_size < 16) wav_error(path, off, "fmt chunk too short");
      const std::uint16_t format = read_u16le(p + body);
      if (format != 1) wav_error(path, body, "only PCM (format 1) is supported");
      channels = read_u16le(p + body + 2);
      rate = static_cast<int>(read_u32le(p + body + 4));
      const std::uint16_t bits = read_u16le(p + body + 14);
      if (bits != 16) wav_error(path, body + 14, "only 16-bit samples are supported");
      if (channels < 1 || channels > 2) wav_error(path, body + 2, "expected 1 or 2 channels");
      have_fmt = true;
    } else if (std::memcmp(p + off, "data", 4) == 0) {
      if (!have_fmt) wav_error(path, off, "data chunk before fmt chunk");
      const std::size_t frames = chunk_size / (2 * channels);
      AudioClip clip;
      clip.sample_rate = rate;
      clip.samples.resize(frames);
      for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (int c = 0; c < channels; ++c) {
          const std::size_t at = body + (i * channels + c) * 2;
          const std::int16_t s = static_cast<std::int16_t>(read_u16le(p + at));
          acc += static_cast<double>(s) / 32768.0;
        }
        clip.samples[i] = acc / channels;
      }
      return clip;
    }
    off = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }
  wav_error(path, off, have_fmt ? "missing data chunk" : "missing fmt chunk");
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  const std::uint32_t num_samples = static_cast<std::uint32_t>(clip.samples.size());
  const std::uint32_t data_bytes = num_samples * 2;

  std::string out;
  out.reserve(44 + data_bytes);
  out.append("RIFF");
  append_u32le(out, 36 + data_bytes);
  out.append("WAVE");
  out.append("fmt ");
  append_u32le(out, 16);
  append_u16le(out, 1);   // PCM
  append_u16le(out, 1);   // mono
  append_u32le(out, static_cast<std::uint32_t>(clip.sample_rate));
  append_u32le(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  append_u16le(out, 2);   // block align
  append_u16le(out, 16);  // bits per sample
  out.append("data");
  append_u32le(out, data_bytes);
  for (double v : clip.samples) {
    const double clamped = std::clamp(v, -1.0, 1.0);
    const std::int16_t s = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
    append_u16le(out, static_cast<std::uint16_t>(s));
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write WAV file " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("short write to " + path.string());
}

}  // namespace xmexp
