#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fuse3d/tensor.hpp"

namespace fuse3d {

enum class Task { Denoise, SuperResolve };

std::string_view task_name(Task task);
Task parse_task(std::string_view name);  // "dn" / "sr"

struct DegradeConfig {
    Task task = Task::Denoise;
    double sigma = 25.0;       // denoise
    std::size_t scale = 2;     // superresolve
    std::uint64_t seed = 0;
    bool clip = false;         // clamp noisy values to [0, 255]

    void validate() const;
};

/// Per-image RNG seed so results do not depend on processing order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view image_id);

/// img + N(0, sigma^2) per pixel. Not clipped unless `clip` is set.
ImagePlane add_awg_noise(const ImagePlane& img, double sigma, std::uint64_t seed, bool clip = false);

/// Bicubic resampling (a = -0.5) with replicated edges and pixel-center alignment.
/// When shrinking, the kernel is stretched by the inverse scale (antialiasing).
ImagePlane bicubic_resize(const ImagePlane& img, std::size_t out_height, std::size_t out_width);
/// Output dims are round(factor * input dims).
ImagePlane bicubic_resize(const ImagePlane& img, double factor);

/// Crops bottom/right rows so both dims are multiples of `scale`.
ImagePlane modcrop(const ImagePlane& img, std::size_t scale);

/// Low-resolution observation of a ground truth whose dims are multiples of `scale`.
ImagePlane downscale(const ImagePlane& hr, std::size_t scale);
/// Plain bicubic upscaling by an integer factor.
ImagePlane upscale(const ImagePlane& lr, std::size_t scale);

/// Ground truth (modcropped for SR) and its degraded observation.
struct DegradedImage {
    ImagePlane truth;
    ImagePlane degraded;
};
DegradedImage degrade(const ImagePlane& truth, const DegradeConfig& config, std::string_view image_id);

/// Method outputs for one image plus its ground truth, all aligned.
struct TrainingImage {
    std::string id;
    Volume methods;   // 2 x H x W
    ImagePlane truth;
};

struct PatchPair {
    Volume methods;
    ImagePlane truth;
    std::size_t image = 0;
    std::size_t y = 0;
    std::size_t x = 0;
};

/// Cuts an aligned p x p window at (y, x) out of every plane of `image`.
PatchPair cut_patch(const TrainingImage& image, std::size_t image_index, std::size_t y, std::size_t x, std::size_t p);

/// `count` windows drawn uniformly (image, then offset) with replacement.
std::vector<PatchPair> extract_patches(std::span<const TrainingImage> images, std::size_t p, std::size_t count,
                                       std::uint64_t seed);

} // namespace fuse3d
