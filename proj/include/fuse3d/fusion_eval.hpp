#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fuse3d/tensor.hpp"

namespace fuse3d {

enum class OracleMode { Pixel, Patch };
enum class Overlap { None, HalfStride };

struct OracleConfig {
    OracleMode mode = OracleMode::Patch;
    std::size_t patch = 8;
    Overlap overlap = Overlap::None;
};

std::string describe(const OracleConfig& config);

/// Pixelwise mean of at least two aligned planes.
ImagePlane average_fusion(std::span<const ImagePlane> outputs);

/// Per pixel the candidate value closest to the truth; ties go to the lowest index.
ImagePlane oracle_pixel(std::span<const ImagePlane> outputs, const ImagePlane& truth);

/// Per window the candidate with the smallest window MSE (lowest index on ties).
/// Non-overlapping windows tile the image with stride p; half-stride windows use stride
/// ceil(p/2) and average the selected values where windows overlap. Edge windows shrink.
ImagePlane oracle_patch(std::span<const ImagePlane> outputs, const ImagePlane& truth, const OracleConfig& config);

struct SweepRow {
    std::size_t patch = 0;
    Overlap overlap = Overlap::None;
    double psnr = 0.0;
    double ssim = 0.0;
};

/// PSNR/SSIM of the patch oracle for every size, non-overlapping row first at each size.
std::vector<SweepRow> oracle_sweep(std::span<const ImagePlane> outputs, const ImagePlane& truth,
                                   std::span<const std::size_t> sizes);

struct ComparisonRow {
    std::string image;
    double psnr_a = 0.0;
    double psnr_b = 0.0;
    double gain = 0.0;   // psnr_a - psnr_b
};

struct Comparison {
    std::vector<ComparisonRow> rows;
    std::size_t wins_a = 0;
    std::size_t wins_b = 0;
    std::size_t ties = 0;
};

using ImageScore = std::pair<std::string, double>;

/// Per-image PSNR gain of method A over method B. Image ids must match in order.
Comparison compare_methods(std::span<const ImageScore> a, std::span<const ImageScore> b);

} // namespace fuse3d
