#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fuse3d/tensor.hpp"

namespace fuse3d {

/// 8-bit interleaved image as decoded from a file.
struct ColorImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    std::vector<std::uint8_t> pixels;
};

/// BT.601 studio-range luma: Y = 16 + (65.481 R + 128.553 G + 24.966 B) / 255.
ImagePlane to_luminance(const ColorImage& image);

/// Reads PGM (P5, 8 or 16 bit), PPM (P6), PNG (gray or RGB) or PFM (Pf, float).
/// Color images are reduced with to_luminance when `convert_color` is set and rejected otherwise.
ImagePlane load_image(const std::filesystem::path& path, bool convert_color = true);

/// Writes by extension: ".pgm" rounds and clamps to 8 bit, ".pfm" stores float32.
void save_image(const ImagePlane& image, const std::filesystem::path& path);

/// Decoders on in-memory bytes; exposed for tests.
ImagePlane decode_pgm(std::string_view bytes, bool convert_color = true);
ImagePlane decode_pfm(std::string_view bytes);
std::string encode_pgm(const ImagePlane& image);
std::string encode_pfm(const ImagePlane& image);

/// True for extensions load_image understands.
bool is_image_file(const std::filesystem::path& path);

} // namespace fuse3d
