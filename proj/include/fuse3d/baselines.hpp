#pragma once

#include <string>
#include <vector>

#include "fuse3d/tensor.hpp"

namespace fuse3d {

// Simple deterministic restorers that provide something to fuse.

/// Normalized Gaussian smoothing, bandwidth clamp(sigma_noise / 25, 0.5, 3) px, truncated at 3 bandwidths.
ImagePlane gaussian_denoise(const ImagePlane& img, double sigma_noise);

/// Median over an odd window x window neighbourhood, replicated edges.
ImagePlane median_denoise(const ImagePlane& img, std::size_t window = 3);

/// Bicubic upscaling refined by 5 rounds of back-projection:
///   u <- u + up(lr - down(u))
ImagePlane sharpen_upscale(const ImagePlane& lr, std::size_t scale, int iterations = 5);

/// Names accepted by run_baseline, per task.
std::vector<std::string> denoise_methods();
std::vector<std::string> superres_methods();

/// Dispatches by name: "gaussian", "median" (uses `sigma`) or "bicubic", "sharpen" (uses `scale`).
ImagePlane run_baseline(const std::string& method, const ImagePlane& degraded, double sigma, std::size_t scale);

} // namespace fuse3d
