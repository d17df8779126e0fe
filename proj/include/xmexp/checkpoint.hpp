#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "xmexp/trainer.hpp"

namespace xmexp {

// Versioned binary parameter file. Layout, all integers little-endian:
//   magic "XMEXP1"
//   u32 block count
//   per block: u16 kind length + bytes, u16 name length + bytes,
//              u8 rank, rank x u32 dims, numel x f64 (IEEE-754, LE)
// Round-trips bit-exactly.
inline constexpr char kCheckpointMagic[] = "XMEXP1";

struct CheckpointBlock {
  std::string kind;
  std::string name;
  std::vector<int> shape;
  std::vector<double> values;
};

void write_blocks(std::ostream& out, const std::vector<CheckpointBlock>& blocks);
std::vector<CheckpointBlock> read_blocks(std::istream& in, const std::string& where);

// Channel parameters plus the SOM prototypes (kind "som").
std::vector<CheckpointBlock> snapshot(ExpectationModel& model);
// Restores by block name; any missing/extra/mismatched block -> ConfigError.
void restore(ExpectationModel& model, const std::vector<CheckpointBlock>& blocks);

void save_checkpoint(const std::filesystem::path& path, ExpectationModel& model);
void load_checkpoint(const std::filesystem::path& path, ExpectationModel& model);

// In-memory serialization, used for byte-identity checks.
std::string checkpoint_bytes(ExpectationModel& model);

}  // namespace xmexp
