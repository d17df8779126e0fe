#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "support/oracles.hpp"
#include "xmexp/audio.hpp"
#include "xmexp/errors.hpp"
#include "xmexp/rng.hpp"

using namespace xmexp;

namespace {

AudioClip tone(double hz, int rate, double amplitude = 0.8) {
  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples.resize(rate);
  for (int i = 0; i < rate; ++i) {
    clip.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * hz * i / rate);
  }
  return clip;
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_SUITE_BEGIN("audio_frontend");

TEST_CASE("frame_signal: 25 ms at 16 kHz is 400 samples, exactly 100 frames") {
  AudioClip clip;
  clip.sample_rate = 16000;
  clip.samples.assign(16000, 0.25);
  const auto frames = frame_signal(clip, 25.0, 10.0);
  CHECK(frames.size() == 100);
  for (const auto& f : frames) CHECK(f.size() == 400);
}

TEST_CASE("frame_signal: constant-zero clip gives 100 all-zero frames") {
  AudioClip clip;
  clip.sample_rate = 16000;
  clip.samples.assign(16000, 0.0);
  const auto frames = frame_signal(clip, 25.0, 10.0);
  REQUIRE(frames.size() == 100);
  for (const auto& f : frames) {
    for (double v : f) CHECK(v == 0.0);
  }
}

TEST_CASE("frame_signal: bad inputs") {
  CHECK_THROWS_AS(frame_signal(AudioClip{}, 25.0, 10.0), InputError);
  AudioClip clip;
  clip.samples.assign(100, 0.0);
  CHECK_THROWS_AS(frame_signal(clip, 10.0, 25.0), ConfigError);   // hop > window
}

TEST_CASE("hamming: endpoint and midpoint weights") {
  std::vector<double> frame(401, 1.0);   // odd length
  hamming(frame);
  CHECK(frame.front() == doctest::Approx(0.08));
  CHECK(frame.back() == doctest::Approx(0.08));
  CHECK(frame[200] == doctest::Approx(1.0));
}

TEST_CASE("hamming: windowed sum of an all-ones frame matches direct summation") {
  const int n = 400;
  std::vector<double> frame(n, 1.0);
  hamming(frame);
  double got = 0.0;
  for (double v : frame) got += v;

  double expected = 0.0;   // independent summation of the window definition
  for (int i = 0; i < n; ++i) {
    expected += 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
  }
  CHECK(got == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("dft_magnitude: pure cosine concentrates at its bin") {
  const int n = 512;
  for (int k : {3, 14, 100}) {
    std::vector<double> frame(n);
    for (int i = 0; i < n; ++i) {
      frame[i] = std::cos(2.0 * std::numbers::pi * k * i / n);
    }
    const auto mags = dft_magnitude(frame);
    int argmax = 0;
    for (std::size_t i = 0; i < mags.size(); ++i) {
      if (mags[i] > mags[argmax]) argmax = static_cast<int>(i);
    }
    CHECK(argmax == k);
    CHECK(mags[k] == doctest::Approx(n / 2.0));
  }
}

TEST_CASE("dft_magnitude: all-zero frame gives an all-zero spectrum") {
  const auto mags = dft_magnitude(std::vector<double>(512, 0.0));
  for (double m : mags) CHECK(m == 0.0);
}

TEST_CASE("dft_magnitude: fast transform matches the naive direct transform") {
  Rng rng(97);
  std::vector<double> frame(512);
  for (double& v : frame) v = rng.uniform(-1.0, 1.0);
  const auto fast = dft_magnitude(frame);
  const auto naive = oracles::naive_dft_magnitude(frame, 512);
  REQUIRE(fast.size() == naive.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < fast.size(); ++i) {
    worst = std::max(worst, std::fabs(fast[i] - naive[i]));
  }
  CHECK(worst < 1e-9);

  // Non-power-of-two frames are zero-padded before the transform.
  std::vector<double> odd_frame(400);
  for (double& v : odd_frame) v = rng.uniform(-1.0, 1.0);
  const auto fast2 = dft_magnitude(odd_frame);
  const auto naive2 = oracles::naive_dft_magnitude(odd_frame, 512);
  for (std::size_t i = 0; i < fast2.size(); ++i) {
    CHECK(std::fabs(fast2[i] - naive2[i]) < 1e-9);
  }
}

TEST_CASE("mel scale: formula values") {
  CHECK(hz_to_mel(0.0) == doctest::Approx(0.0));
  CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
  CHECK(hz_to_mel(700.0) == doctest::Approx(781.17).epsilon(1e-4));
  CHECK(mel_to_hz(hz_to_mel(1234.5)) == doctest::Approx(1234.5));
}

TEST_CASE("mel filterbank: 40 ordered filters, peak weight 1, full coverage") {
  const MelFilterbank fb = build_mel_filterbank(40, 16000, 512);
  REQUIRE(fb.filters.size() == 40);
  double prev_center = -1.0;
  for (int m = 0; m < 40; ++m) {
    const MelFilter& f = fb.filters[m];
    CHECK(fb.center_hz(m) > prev_center);
    prev_center = fb.center_hz(m);
    double peak = 0.0;
    for (double w : f.weights) {
      CHECK(w >= 0.0);
      peak = std::max(peak, w);
    }
    CHECK(peak == doctest::Approx(1.0));
    CHECK(f.start_bin <= f.peak_bin);
    CHECK(f.peak_bin <= f.end_bin);
  }

  // Every DFT bin strictly between the first and last centers is covered.
  const double bin_hz = 16000.0 / 512.0;
  for (int k = 0; k <= 256; ++k) {
    const double hz = k * bin_hz;
    if (hz <= fb.center_hz(0) || hz >= fb.center_hz(39)) continue;
    double total = 0.0;
    for (const auto& f : fb.filters) {
      if (k >= f.start_bin && k <= f.end_bin) total += f.weights[k - f.start_bin];
    }
    CHECK(total > 0.0);
  }
}

TEST_CASE("mel filterbank: too-small dft_size is a configuration error") {
  CHECK_THROWS_AS(build_mel_filterbank(40, 16000, 64), ConfigError);
}

TEST_CASE("log_mel_spectrogram: silence maps to all zeros") {
  AudioClip clip;
  clip.sample_rate = 16000;
  clip.samples.assign(16000, 0.0);
  const Tensor spec = log_mel_spectrogram(clip);
  CHECK(spec.shape == std::vector<int>{1, kSpectrogramFrames, kMelBands});
  for (double v : spec.data) CHECK(v == 0.0);
}

TEST_CASE("log_mel_spectrogram: 440 Hz tone peaks at the filter containing 440 Hz") {
  const Tensor spec = log_mel_spectrogram(tone(440.0, 16000));

  // Filterbank-geometry oracle: the filter with the largest weight at the
  // 440 Hz DFT bin.
  const MelFilterbank fb = build_mel_filterbank(40, 16000, 512);
  const int bin = static_cast<int>(std::lround(440.0 / 16000.0 * 512.0));
  int expected = -1;
  double best_weight = 0.0;
  for (int m = 0; m < 40; ++m) {
    const MelFilter& f = fb.filters[m];
    if (bin >= f.start_bin && bin <= f.end_bin && f.weights[bin - f.start_bin] > best_weight) {
      best_weight = f.weights[bin - f.start_bin];
      expected = m;
    }
  }
  REQUIRE(expected >= 0);

  for (int frame = 0; frame < kSpectrogramFrames; ++frame) {
    int argmax = 0;
    for (int m = 0; m < kMelBands; ++m) {
      if (spec.at(0, frame, m) > spec.at(0, frame, argmax)) argmax = m;
    }
    CHECK(argmax == expected);
  }
}

TEST_CASE("log_mel_spectrogram: 100x40 in [0,1] at 8/16/44.1 kHz") {
  Rng rng(55);
  for (int rate : {8000, 16000, 44100}) {
    AudioClip clip;
    clip.sample_rate = rate;
    clip.samples.resize(rate);
    for (double& v : clip.samples) v = rng.uniform(-0.9, 0.9);
    const Tensor spec = log_mel_spectrogram(clip);
    CHECK(spec.shape == std::vector<int>{1, kSpectrogramFrames, kMelBands});
    CHECK(spec.all_finite());
    for (double v : spec.data) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("resample + one-second normalization") {
  const AudioClip half_rate = resampled(tone(440.0, 44100), 16000);
  CHECK(half_rate.sample_rate == 16000);
  CHECK(half_rate.samples.size() == 16000);

  AudioClip two_seconds;
  two_seconds.sample_rate = 16000;
  two_seconds.samples.assign(32000, 0.5);
  CHECK(normalized_to_one_second(two_seconds).samples.size() == 16000);

  AudioClip short_clip;
  short_clip.sample_rate = 16000;
  short_clip.samples.assign(1000, 0.5);
  const AudioClip padded = normalized_to_one_second(short_clip);
  CHECK(padded.samples.size() == 16000);
  CHECK(padded.samples[999] == doctest::Approx(0.5));
  CHECK(padded.samples[1000] == 0.0);
}

TEST_CASE("wav: write/read round trip within 16-bit quantization") {
  const auto path = temp_file("xmexp_test_tone.wav");
  const AudioClip original = tone(440.0, 16000, 0.7);
  write_wav(path, original);
  const AudioClip loaded = read_wav(path);
  CHECK(loaded.sample_rate == 16000);
  REQUIRE(loaded.samples.size() == original.samples.size());
  // Write scales by 32767, read divides by 32768: worst case is about 1.5
  // quantization steps.
  for (std::size_t i = 0; i < loaded.samples.size(); i += 997) {
    CHECK(std::fabs(loaded.samples[i] - original.samples[i]) <= 2.0 / 32768.0);
  }
  std::filesystem::remove(path);
}

TEST_CASE("wav: malformed header names the offset") {
  const auto path = temp_file("xmexp_test_bad.wav");
  {
    std::ofstream out(path, std::ios::binary);
    out << "RIFode-junk-not-a-wav";
  }
  CHECK_THROWS_WITH_AS(read_wav(path), doctest::Contains("offset 0"), InputError);
  std::filesystem::remove(path);
}

TEST_CASE("wav: stereo is averaged to mono") {
  // Hand-assembled 2-channel PCM16 file: L=16384, R=-16384 -> mean 0;
  // then L=8192, R=8192 -> mean 8192/32768.
  const auto path = temp_file("xmexp_test_stereo.wav");
  {
    std::ofstream out(path, std::ios::binary);
    const auto u16 = [&](std::uint16_t v) {
      out.put(static_cast<char>(v & 0xff));
      out.put(static_cast<char>(v >> 8));
    };
    const auto u32 = [&](std::uint32_t v) {
      for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
    };
    out << "RIFF"; u32(36 + 8); out << "WAVE";
    out << "fmt "; u32(16); u16(1); u16(2); u32(16000); u32(64000); u16(4); u16(16);
    out << "data"; u32(8);
    u16(16384); u16(static_cast<std::uint16_t>(-16384));
    u16(8192); u16(8192);
  }
  const AudioClip clip = read_wav(path);
  REQUIRE(clip.samples.size() == 2);
  CHECK(clip.samples[0] == doctest::Approx(0.0));
  CHECK(clip.samples[1] == doctest::Approx(8192.0 / 32768.0));
  std::filesystem::remove(path);
}

TEST_SUITE_END();
