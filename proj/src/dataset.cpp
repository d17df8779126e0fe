#include "xmexp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "xmexp/errors.hpp"
#include "xmexp/rng.hpp"

namespace xmexp {

std::vector<std::vector<int>> Dataset::indices_by_identity() const {
  std::vector<std::vector<int>> out(identities.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const int id = samples[i].identity;
    if (id < 0 || id >= static_cast<int>(identities.size())) {
      throw UsageError("sample " + std::to_string(i) + " has an out-of-range identity");
    }
    out[id].push_back(static_cast<int>(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic generation

namespace {

// Sum of two low-frequency gratings per channel, squashed into [0.05, 0.95].
Tensor make_visual_motif(int size, Rng& rng) {
  Tensor motif({3, size, size});
  for (int c = 0; c < 3; ++c) {
    double fx[2], fy[2], ph[2], amp[2];
    for (int k = 0; k < 2; ++k) {
      fx[k] = static_cast<double>(rng.below(4));
      fy[k] = static_cast<double>(1 + rng.below(3));
      ph[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
      amp[k] = rng.uniform(0.5, 1.0);
    }
    const double norm = amp[0] + amp[1];
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        double v = 0.0;
        for (int k = 0; k < 2; ++k) {
          v += amp[k] * std::cos(2.0 * std::numbers::pi * (fx[k] * x + fy[k] * y) / size + ph[k]);
        }
        motif.at(c, y, x) = 0.5 + 0.45 * v / norm;
      }
    }
  }
  return motif;
}

double motif_distance(const Tensor& a, const Tensor& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) acc += std::fabs(a.data[i] - b.data[i]);
  return acc / static_cast<double>(a.numel());
}

}  // namespace

std::vector<SyntheticSample> synthesize(const SyntheticSpec& spec, int image_size,
                                        const AudioParams& audio, std::uint64_t seed) {
  if (spec.identities < 1 || spec.samples_per_identity < 1) {
    throw ConfigError("synthetic spec needs at least one identity and one sample");
  }

  Rng rng(seed);
  Rng motif_rng = rng.fork();
  Rng sample_rng = rng.fork();

  // Distinct visual motifs, enforced by a minimum pairwise distance.
  std::vector<Tensor> motifs;
  for (int id = 0; id < spec.identities; ++id) {
    bool accepted = false;
    for (int attempt = 0; attempt < 200 && !accepted; ++attempt) {
      Tensor candidate = make_visual_motif(image_size, motif_rng);
      accepted = true;
      for (const Tensor& other : motifs) {
        if (motif_distance(candidate, other) < spec.min_motif_distance) {
          accepted = false;
          break;
        }
      }
      if (accepted) motifs.push_back(std::move(candidate));
    }
    if (!accepted) {
      throw ConfigError("could not generate " + std::to_string(spec.identities) +
                        " visual motifs at min_motif_distance " +
                        std::to_string(spec.min_motif_distance));
    }
  }

  // Distinct fundamentals: Mel filter centers spaced at least two filters
  // apart, kept low enough that the third harmonic stays below Nyquist.
  const int window =
      static_cast<int>(std::lround(audio.window_ms * audio.sample_rate / 1000.0));
  int dft_size = 1;
  while (dft_size < window) dft_size <<= 1;
  const MelFilterbank fb = build_mel_filterbank(kMelBands, audio.sample_rate, dft_size);
  const int lo_filter = 4, hi_filter = 24;
  const int span = hi_filter - lo_filter;
  if (spec.identities > span / 2 + 1) {
    throw ConfigError("synthetic generator supports at most " +
                      std::to_string(span / 2 + 1) + " identities (mel spacing)");
  }
  const int step = spec.identities > 1 ? span / (spec.identities - 1) : 0;
  std::vector<double> fundamentals(spec.identities);
  for (int id = 0; id < spec.identities; ++id) {
    fundamentals[id] = fb.center_hz(lo_filter + id * step);
  }

  std::vector<SyntheticSample> samples;
  samples.reserve(static_cast<std::size_t>(spec.identities) * spec.samples_per_identity);
  const int n_audio = audio.sample_rate;
  for (int id = 0; id < spec.identities; ++id) {
    const double f0 = fundamentals[id];
    for (int s = 0; s < spec.samples_per_identity; ++s) {
      SyntheticSample sample;
      sample.identity = "id" + std::to_string(id);

      sample.image = motifs[id];
      for (double& v : sample.image.data) {
        v = std::clamp(v + sample_rng.uniform(-spec.image_noise, spec.image_noise), 0.0, 1.0);
      }

      sample.audio.sample_rate = audio.sample_rate;
      sample.audio.samples.resize(n_audio);
      for (int i = 0; i < n_audio; ++i) {
        const double t = static_cast<double>(i) / audio.sample_rate;
        double v = 0.55 * std::sin(2.0 * std::numbers::pi * f0 * t) +
                   0.25 * std::sin(2.0 * std::numbers::pi * 2.0 * f0 * t) +
                   0.12 * std::sin(2.0 * std::numbers::pi * 3.0 * f0 * t);
        v += sample_rng.uniform(-spec.audio_noise, spec.audio_noise);
        sample.audio.samples[i] = std::clamp(v, -1.0, 1.0);
      }
      samples.push_back(std::move(sample));
    }
  }
  return samples;
}

Dataset to_dataset(const std::vector<SyntheticSample>& samples, const AudioParams& audio) {
  Dataset ds;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    StimulusPair pair;
    pair.image = s.image;
    pair.spectrogram = log_mel_spectrogram(s.audio, audio);
    pair.identity_name = s.identity;
    pair.source_id = s.identity + "_s" + std::to_string(i);
    auto it = std::find(ds.identities.begin(), ds.identities.end(), s.identity);
    if (it == ds.identities.end()) {
      pair.identity = static_cast<int>(ds.identities.size());
      ds.identities.push_back(s.identity);
    } else {
      pair.identity = static_cast<int>(it - ds.identities.begin());
    }
    ds.samples.push_back(std::move(pair));
  }
  return ds;
}

void write_synthetic(const std::vector<SyntheticSample>& samples,
                     const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory " + out_dir.string());

  std::ostringstream manifest;
  std::vector<int> count_by_identity_name;
  std::vector<std::string> names_seen;
  for (const auto& s : samples) {
    auto it = std::find(names_seen.begin(), names_seen.end(), s.identity);
    int n;
    if (it == names_seen.end()) {
      names_seen.push_back(s.identity);
      count_by_identity_name.push_back(0);
      n = count_by_identity_name.back()++;
    } else {
      n = count_by_identity_name[static_cast<std::size_t>(it - names_seen.begin())]++;
    }
    const std::string stem = s.identity + "_s" + std::to_string(n);
    write_ppm(out_dir / (stem + ".ppm"), s.image);
    write_wav(out_dir / (stem + ".wav"), s.audio);
    manifest << s.identity << ',' << stem << ".ppm" << ',' << stem << ".wav" << '\n';
  }

  std::ofstream mf(out_dir / "manifest.csv", std::ios::binary);
  if (!mf) throw IoError("cannot write manifest in " + out_dir.string());
  mf << manifest.str();
}

Dataset ingest_dataset(const std::filesystem::path& manifest_path, int image_size,
                       const AudioParams& audio) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest " + manifest_path.string());
  const std::filesystem::path base = manifest_path.parent_path();

  Dataset ds;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        fields.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (fields.size() != 3 || fields[0].empty()) {
      throw InputError("manifest " + manifest_path.string() + " line " +
                       std::to_string(line_no) + ": expected identity,image_path,audio_path");
    }

    std::filesystem::path image_path(fields[1]);
    if (!image_path.is_absolute()) image_path = base / image_path;
    std::filesystem::path audio_path(fields[2]);
    if (!audio_path.is_absolute()) audio_path = base / audio_path;

    StimulusPair pair;
    Tensor image = read_ppm(image_path);
    if (image.shape[1] != image_size || image.shape[2] != image_size) {
      image = nearest_resize(image, image_size, image_size);
    }
    pair.image = std::move(image);
    pair.spectrogram = log_mel_spectrogram(read_wav(audio_path), audio);
    pair.identity_name = fields[0];
    pair.source_id = fields[1];
    auto it = std::find(ds.identities.begin(), ds.identities.end(), fields[0]);
    if (it == ds.identities.end()) {
      pair.identity = static_cast<int>(ds.identities.size());
      ds.identities.push_back(fields[0]);
    } else {
      pair.identity = static_cast<int>(it - ds.identities.begin());
    }
    ds.samples.push_back(std::move(pair));
  }
  if (ds.samples.empty()) {
    throw InputError("manifest " + manifest_path.string() + " lists no samples");
  }
  return ds;
}

// ---------------------------------------------------------------------------
// PPM I/O

namespace {

int next_ppm_token(const std::string& bytes, std::size_t& pos,
                   const std::filesystem::path& path) {
  while (pos < bytes.size()) {
    if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      ++pos;
    } else if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  int value = 0;
  while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
    value = value * 10 + (bytes[pos] - '0');
    ++pos;
  }
  if (pos == start) {
    throw InputError("malformed PPM " + path.string() + " at offset " + std::to_string(pos) +
                     ": expected an integer");
  }
  return value;
}

}  // namespace

Tensor read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open PPM file " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw InputError("malformed PPM " + path.string() + " at offset 0: missing P6 magic");
  }
  std::size_t pos = 2;
  const int width = next_ppm_token(bytes, pos, path);
  const int height = next_ppm_token(bytes, pos, path);
  const int maxval = next_ppm_token(bytes, pos, path);
  if (width <= 0 || height <= 0 || maxval != 255) {
    throw InputError("malformed PPM " + path.string() + ": unsupported dims or maxval");
  }
  ++pos;  // single whitespace after maxval
  const std::size_t need = static_cast<std::size_t>(width) * height * 3;
  if (pos + need > bytes.size()) {
    throw InputError("malformed PPM " + path.string() + " at offset " + std::to_string(pos) +
                     ": truncated pixel data");
  }

  Tensor image({3, height, width});
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const unsigned char b =
            static_cast<unsigned char>(bytes[pos + (static_cast<std::size_t>(y) * width + x) * 3 + c]);
        image.at(c, y, x) = static_cast<double>(b) / 255.0;
      }
    }
  }
  return image;
}

void write_ppm(const std::filesystem::path& path, const Tensor& image) {
  if (image.rank() != 3 || image.shape[0] != 3) {
    throw UsageError("write_ppm expects a [3,H,W] tensor, got " + image.shape_str());
  }
  const int height = image.shape[1], width = image.shape[2];
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write PPM file " + path.string());
  out << "P6\n" << width << ' ' << height << "\n255\n";
  std::string pixels(static_cast<std::size_t>(width) * height * 3, '\0');
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(image.at(c, y, x), 0.0, 1.0);
        pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c] =
            static_cast<char>(std::lround(v * 255.0));
      }
    }
  }
  out.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));
  if (!out) throw IoError("short write to " + path.string());
}

Tensor nearest_resize(const Tensor& image, int out_h, int out_w) {
  const int c = image.shape[0], in_h = image.shape[1], in_w = image.shape[2];
  Tensor out({c, out_h, out_w});
  for (int ci = 0; ci < c; ++ci) {
    for (int y = 0; y < out_h; ++y) {
      const int sy = std::min(in_h - 1, y * in_h / out_h);
      for (int x = 0; x < out_w; ++x) {
        const int sx = std::min(in_w - 1, x * in_w / out_w);
        out.at(ci, y, x) = image.at(ci, sy, sx);
      }
    }
  }
  return out;
}

}  // namespace xmexp
