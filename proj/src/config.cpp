#include "xmexp/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "xmexp/errors.hpp"

namespace xmexp {

ModelConfig RunConfig::model_config() const {
  ModelConfig cfg;
  cfg.visual = ChannelConfig::visual();
  cfg.visual.in_h = image_size;
  cfg.visual.in_w = image_size;
  cfg.visual.filters = filters;
  cfg.visual.kernels = visual_kernels;
  cfg.visual.latent_dim = latent_dim;

  cfg.auditory = ChannelConfig::auditory();
  cfg.auditory.filters = filters;
  cfg.auditory.kernels = auditory_kernels;
  cfg.auditory.latent_dim = latent_dim;

  cfg.som = som;
  cfg.replay_capacity = replay_capacity;
  cfg.trainer = trainer;
  return cfg;
}

void RunConfig::validate() const {
  if (data_source != "synthetic" && data_source != "manifest") {
    throw ConfigError("data.source must be 'synthetic' or 'manifest'");
  }
  if (data_source == "manifest" && data_manifest.empty()) {
    throw ConfigError("data.manifest: no dataset path given (data.source = manifest)");
  }
  if (image_size < 8) throw ConfigError("channel.image_size must be >= 8");
  if (audio.sample_rate < 8000) throw ConfigError("audio.sample_rate must be >= 8000");
  if (!(audio.hop_ms > 0.0) || audio.window_ms < audio.hop_ms) {
    throw ConfigError("audio.window_ms must be >= audio.hop_ms > 0");
  }
  if (!(trainer.split_fraction > 0.0 && trainer.split_fraction < 1.0)) {
    throw ConfigError("trainer.split must be in (0, 1)");
  }
  if (trainer.passes < 1) throw ConfigError("trainer.passes must be >= 1");
  if (trainer.learning_rate < 0.0) throw ConfigError("trainer.learning_rate must be >= 0");
  if (replay_capacity < 1) throw ConfigError("replay.capacity must be >= 1");
  if (som.rows < 2 || som.cols < 2) throw ConfigError("som grid must be at least 2x2");
  if (som.epochs < 1) throw ConfigError("som.epochs must be >= 1");
  if (synth.identities < 1 || synth.samples_per_identity < 1) {
    throw ConfigError("synth.identities and synth.samples must be >= 1");
  }
  model_config().visual.validate();
  model_config().auditory.validate();
}

namespace {

struct KeyHandler {
  const char* key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

[[noreturn]] void bad_value(const std::string& key, const std::string& where) {
  throw ConfigError(where + ": invalid value for '" + key + "'");
}

long long parse_int(const std::string& v, const std::string& key, const std::string& where) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) bad_value(key, where);
    return x;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad_value(key, where);
  }
}

double parse_real(const std::string& v, const std::string& key, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) bad_value(key, where);
    return x;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad_value(key, where);
  }
}

std::array<int, 3> parse_int3(const std::string& v, const std::string& key,
                              const std::string& where) {
  std::array<int, 3> out{};
  std::stringstream ss(v);
  std::string item;
  int i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= 3) bad_value(key, where);
    out[i++] = static_cast<int>(parse_int(item, key, where));
  }
  if (i != 3) bad_value(key, where);
  return out;
}

const std::vector<KeyHandler>& key_handlers() {
  static const std::vector<KeyHandler> handlers = {
      {"seed", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.seed = static_cast<std::uint64_t>(parse_int(v, "seed", w)); }},
      {"out", [](RunConfig& c, const std::string& v, const std::string&) { c.out_dir = v; }},
      {"data.source", [](RunConfig& c, const std::string& v, const std::string&) {
         c.data_source = v; }},
      {"data.manifest", [](RunConfig& c, const std::string& v, const std::string&) {
         c.data_manifest = v; }},
      {"synth.identities", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.synth.identities = static_cast<int>(parse_int(v, "synth.identities", w)); }},
      {"synth.samples", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.synth.samples_per_identity = static_cast<int>(parse_int(v, "synth.samples", w)); }},
      {"synth.image_noise", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.synth.image_noise = parse_real(v, "synth.image_noise", w); }},
      {"synth.audio_noise", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.synth.audio_noise = parse_real(v, "synth.audio_noise", w); }},
      {"synth.min_motif_distance", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.synth.min_motif_distance = parse_real(v, "synth.min_motif_distance", w); }},
      {"channel.image_size", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.image_size = static_cast<int>(parse_int(v, "channel.image_size", w)); }},
      {"channel.latent_dim", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.latent_dim = static_cast<int>(parse_int(v, "channel.latent_dim", w)); }},
      {"channel.filters", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.filters = parse_int3(v, "channel.filters", w); }},
      {"channel.visual_kernels", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.visual_kernels = parse_int3(v, "channel.visual_kernels", w); }},
      {"channel.auditory_kernels", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.auditory_kernels = parse_int3(v, "channel.auditory_kernels", w); }},
      {"audio.sample_rate", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.audio.sample_rate = static_cast<int>(parse_int(v, "audio.sample_rate", w)); }},
      {"audio.window_ms", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.audio.window_ms = parse_real(v, "audio.window_ms", w); }},
      {"audio.hop_ms", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.audio.hop_ms = parse_real(v, "audio.hop_ms", w); }},
      {"som.rows", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.som.rows = static_cast<int>(parse_int(v, "som.rows", w)); }},
      {"som.cols", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.som.cols = static_cast<int>(parse_int(v, "som.cols", w)); }},
      {"som.epochs", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.som.epochs = static_cast<int>(parse_int(v, "som.epochs", w)); }},
      {"som.alpha_start", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.som.alpha_start = parse_real(v, "som.alpha_start", w); }},
      {"som.alpha_end", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.som.alpha_end = parse_real(v, "som.alpha_end", w); }},
      {"som.sigma_start", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.som.sigma_start = parse_real(v, "som.sigma_start", w); }},
      {"som.sigma_end", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.som.sigma_end = parse_real(v, "som.sigma_end", w); }},
      {"replay.capacity", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.replay_capacity = static_cast<std::size_t>(parse_int(v, "replay.capacity", w)); }},
      {"trainer.learning_rate", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.trainer.learning_rate = parse_real(v, "trainer.learning_rate", w); }},
      {"trainer.passes", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.trainer.passes = static_cast<int>(parse_int(v, "trainer.passes", w)); }},
      {"trainer.split", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.trainer.split_fraction = parse_real(v, "trainer.split", w); }},
  };
  return handlers;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value,
               const std::string& where) {
  for (const auto& h : key_handlers()) {
    if (key == h.key) {
      h.set(cfg, value, where);
      return;
    }
  }
  throw ConfigError(where + ": unknown key '" + key + "'");
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& where) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + " line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(where + " line " + std::to_string(line_no) + ": empty key");
    }
    apply_key(cfg, key, value, where + " line " + std::to_string(line_no));
  }
  return cfg;
}

void apply_env_overrides(RunConfig& cfg) {
  for (const auto& h : key_handlers()) {
    std::string env_name = "XMEXP_";
    for (const char* p = h.key; *p; ++p) {
      env_name.push_back(*p == '.' ? '_' : static_cast<char>(std::toupper(*p)));
    }
    if (const char* value = std::getenv(env_name.c_str())) {
      h.set(cfg, value, "env " + env_name);
    }
  }
}

RunConfig load_config(const std::string& path) {
  RunConfig cfg;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    cfg = parse_config_text(text, path);
  }
  apply_env_overrides(cfg);
  cfg.validate();
  return cfg;
}

}  // namespace xmexp
