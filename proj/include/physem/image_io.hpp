#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "physem/image.hpp"
#include "physem/types.hpp"

namespace physem {

using Bytes = std::vector<std::uint8_t>;

/// Decodes binary PGM (P5), binary PPM (P6) or PNG into a luminance plane.
/// Color input goes through to_luminance. Throws InvalidInput on anything
/// malformed or truncated.
ImagePlane decode_image(std::span<const std::uint8_t> bytes);

ImagePlane read_image_file(const std::filesystem::path& path);

Bytes encode_pgm(const ImagePlane& plane);

/// Renders a label map as PGM: 8-bit when every id fits in a byte, 16-bit
/// big-endian otherwise. Ids above 65535 are rejected.
Bytes encode_label_pgm(std::span<const RegionId> labels, int width, int height);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file(const std::filesystem::path& path, const std::string& text);

/// Writes to a sibling temp file, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace physem
