#pragma once

#include <filesystem>
#include <iosfwd>

#include "tpgnn/training.hpp"

namespace tpgnn {

// Versioned little-endian binary dump. Doubles are written bit-for-bit, so a
// round trip reproduces every value exactly.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint_file(const std::filesystem::path& path);

}  // namespace tpgnn
