#pragma once

#include <cstdint>

#include "fuse3d/tensor.hpp"

namespace fuse3d {

/// Procedural grayscale test image on the 0..255 scale: smooth shading and blobs, a
/// seed-dependent number of hard-edged shapes and, for busier images, stripe texture.
/// The mix varies with the seed so that both smooth and edge-dominated images occur.
/// Values are rounded to integers, so an 8-bit PGM round trip is lossless.
ImagePlane synthesize_image(std::uint64_t seed, std::size_t height = 64, std::size_t width = 64);

} // namespace fuse3d
