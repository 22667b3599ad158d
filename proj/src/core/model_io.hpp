#pragma once

#include <filesystem>

#include "core/nn.hpp"

namespace photoscore {

// Binary model container: magic "RSRL", u16 format version, a text manifest
// describing the parameter blocks, the blocks as raw little-endian doubles,
// and a trailing CRC32 of everything before it.
void save_model(const TypeCNetwork& net, const std::filesystem::path& path);
TypeCNetwork load_model(const std::filesystem::path& path);

// Bitwise comparison of seed, zerocenter, parameters and running statistics.
bool models_equal(const TypeCNetwork& a, const TypeCNetwork& b);

}  // namespace photoscore
