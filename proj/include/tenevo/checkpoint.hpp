#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "tenevo/tnn.hpp"

namespace tenevo {

enum class CheckpointFormat { binary, text };

std::string to_string(CheckpointFormat f);
CheckpointFormat checkpoint_format_from_string(const std::string& s);

/// Parameters plus the time they belong to.
struct Checkpoint {
    TnnParams params;
    double t{0.0};
    std::int64_t step{0};
};

/// Binary layout: the 8-byte magic "TNNCKPT1", a little-endian uint64 header
/// length, a JSON header (architecture, flattening order version, count, t,
/// step), then `count` little-endian IEEE-754 doubles. The text variant is one
/// JSON document holding the same header and a "theta" array printed with
/// round-trip precision.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path,
                     CheckpointFormat format = CheckpointFormat::binary);
/// Detects the format from the first bytes.
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace tenevo
