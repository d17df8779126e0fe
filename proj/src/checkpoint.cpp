#include "xmexp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "xmexp/errors.hpp"

static_assert(std::numeric_limits<double>::is_iec559, "IEEE-754 doubles required");

namespace xmexp {

namespace {

void put_u16(std::ostream& out, std::uint16_t v) {
  const char bytes[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  out.write(bytes, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 4);
}

void put_f64(std::ostream& out, double v) {
  const std::uint64_t u = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((u >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

std::uint16_t get_u16(std::istream& in, const std::string& where) {
  unsigned char bytes[2];
  if (!in.read(reinterpret_cast<char*>(bytes), 2)) {
    throw InputError("truncated checkpoint " + where);
  }
  return static_cast<std::uint16_t>(bytes[0] | (bytes[1] << 8));
}

std::uint32_t get_u32(std::istream& in, const std::string& where) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw InputError("truncated checkpoint " + where);
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in, const std::string& where) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
    throw InputError("truncated checkpoint " + where);
  }
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(u);
}

std::string get_string(std::istream& in, const std::string& where) {
  const std::uint16_t len = get_u16(in, where);
  std::string s(len, '\0');
  if (len > 0 && !in.read(s.data(), len)) {
    throw InputError("truncated checkpoint " + where);
  }
  return s;
}

}  // namespace

void write_blocks(std::ostream& out, const std::vector<CheckpointBlock>& blocks) {
  out.write(kCheckpointMagic, 6);
  put_u32(out, static_cast<std::uint32_t>(blocks.size()));
  for (const auto& b : blocks) {
    put_u16(out, static_cast<std::uint16_t>(b.kind.size()));
    out.write(b.kind.data(), static_cast<std::streamsize>(b.kind.size()));
    put_u16(out, static_cast<std::uint16_t>(b.name.size()));
    out.write(b.name.data(), static_cast<std::streamsize>(b.name.size()));
    out.put(static_cast<char>(b.shape.size()));
    for (int d : b.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : b.values) put_f64(out, v);
  }
}

std::vector<CheckpointBlock> read_blocks(std::istream& in, const std::string& where) {
  char magic[6];
  if (!in.read(magic, 6) || std::memcmp(magic, kCheckpointMagic, 6) != 0) {
    throw InputError("not a checkpoint file (bad magic) " + where);
  }
  const std::uint32_t count = get_u32(in, where);
  std::vector<CheckpointBlock> blocks;
  blocks.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointBlock b;
    b.kind = get_string(in, where);
    b.name = get_string(in, where);
    const int rank = in.get();
    if (rank < 0) throw InputError("truncated checkpoint " + where);
    std::size_t numel = 1;
    for (int d = 0; d < rank; ++d) {
      const std::uint32_t dim = get_u32(in, where);
      b.shape.push_back(static_cast<int>(dim));
      numel *= dim;
    }
    b.values.resize(numel);
    for (std::size_t v = 0; v < numel; ++v) b.values[v] = get_f64(in, where);
    blocks.push_back(std::move(b));
  }
  return blocks;
}

std::vector<CheckpointBlock> snapshot(ExpectationModel& model) {
  std::vector<CheckpointBlock> blocks;
  const auto add_channel = [&](Channel& channel, const std::string& prefix) {
    const auto refs = channel.blocks(prefix);          // weights/biases pairs
    const auto params = channel.params();              // one per layer, same order
    for (std::size_t i = 0; i < refs.size(); ++i) {
      CheckpointBlock b;
      b.kind = param_kind_name(params[i / 2]->kind);
      b.name = refs[i].name;
      b.shape = refs[i].values->shape;
      b.values = refs[i].values->data;
      blocks.push_back(std::move(b));
    }
  };
  add_channel(model.visual(), "visual");
  add_channel(model.auditory(), "auditory");

  CheckpointBlock som;
  som.kind = "som";
  som.name = "som.prototypes";
  som.shape = {model.som().rows(), model.som().cols(), model.som().dim()};
  som.values = model.som().flat();
  blocks.push_back(std::move(som));
  return blocks;
}

void restore(ExpectationModel& model, const std::vector<CheckpointBlock>& blocks) {
  std::vector<std::pair<std::string, Tensor*>> targets;
  for (auto& ref : model.param_blocks()) targets.emplace_back(ref.name, ref.values);

  std::size_t matched = 0;
  bool som_loaded = false;
  for (const auto& b : blocks) {
    if (b.kind == "som") {
      const std::vector<int> want = {model.som().rows(), model.som().cols(), model.som().dim()};
      if (b.shape != want) {
        throw ConfigError("checkpoint SOM shape does not match config");
      }
      model.som().load_flat(b.values);
      som_loaded = true;
      continue;
    }
    bool found = false;
    for (auto& [name, tensor] : targets) {
      if (name != b.name) continue;
      if (tensor->shape != b.shape) {
        throw ConfigError("checkpoint block '" + b.name + "' shape mismatch (checkpoint " +
                          Tensor(b.shape).shape_str() + ", model " + tensor->shape_str() + ")");
      }
      tensor->data = b.values;
      found = true;
      ++matched;
      break;
    }
    if (!found) throw ConfigError("checkpoint block '" + b.name + "' not present in model");
  }
  if (matched != targets.size() || !som_loaded) {
    throw ConfigError("checkpoint is missing parameter blocks for this config");
  }
}

void save_checkpoint(const std::filesystem::path& path, ExpectationModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  write_blocks(out, snapshot(model));
  if (!out) throw IoError("short write to " + path.string());
}

void load_checkpoint(const std::filesystem::path& path, ExpectationModel& model) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  restore(model, read_blocks(in, path.string()));
}

std::string checkpoint_bytes(ExpectationModel& model) {
  std::ostringstream out(std::ios::binary);
  write_blocks(out, snapshot(model));
  return out.str();
}

}  // namespace xmexp
