#pragma once

#include "sfca/maskops.hpp"

#include <filesystem>

namespace sfca {

/// Reads an 8-bit single-channel PNG or a PGM (P2/P5); nonzero pixels are
/// class 1. Colour PNGs are reduced to gray first. Format follows the
/// file extension.
[[nodiscard]] BinaryMask read_mask(const std::filesystem::path& path);

/// Writes 0/255 gray pixels as PNG or binary PGM by extension.
void write_mask(const std::filesystem::path& path, const BinaryMask& mask);

}  // namespace sfca
