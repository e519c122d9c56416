#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "stormforge/image.hpp"

namespace stormforge {

// Reads an 8- or 16-bit RGB/RGBA (or gray) PNG; alpha is discarded and
// intensities are scaled to [0, 1].
// Errors: kFileNotFound, kDecodeFailure, kUnsupportedBitDepth.
Image load_png(const std::filesystem::path& path);
Image decode_png(const std::vector<std::uint8_t>& bytes);

// Writes 8-bit RGB, each intensity quantized to round(x * 255).
// Errors: kUnwritablePath.
void save_png(const Image& img, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const Image& img);

// round(x * 255) / 255 on every intensity; what a save/load round trip yields.
Image quantize_8bit(const Image& img);

}  // namespace stormforge
