#include "fuse3d/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "fuse3d/degrade.hpp"

namespace fuse3d {

namespace {

std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1));
}

} // namespace

ImagePlane gaussian_denoise(const ImagePlane& img, double sigma_noise) {
    if (!(sigma_noise > 0.0)) throw ArgumentError("gaussian_denoise: sigma must be positive");
    const double bw = std::clamp(sigma_noise / 25.0, 0.5, 3.0);
    const auto radius = static_cast<std::ptrdiff_t>(std::floor(3.0 * bw));
    std::vector<double> kernel;
    double total = 0.0;
    for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
        const double v = std::exp(-0.5 * static_cast<double>(t * t) / (bw * bw));
        kernel.push_back(v);
        total += v;
    }
    for (auto& k : kernel) k /= total;

    const std::size_t h = img.dim(0);
    const std::size_t w = img.dim(1);
    ImagePlane tmp({h, w});
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double s = 0.0;
            for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
                s += kernel[static_cast<std::size_t>(t + radius)] *
                     img(y, clamp_index(static_cast<std::ptrdiff_t>(x) + t, w));
            }
            tmp(y, x) = s;
        }
    }
    ImagePlane out({h, w});
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double s = 0.0;
            for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
                s += kernel[static_cast<std::size_t>(t + radius)] *
                     tmp(clamp_index(static_cast<std::ptrdiff_t>(y) + t, h), x);
            }
            out(y, x) = s;
        }
    }
    return out;
}

ImagePlane median_denoise(const ImagePlane& img, std::size_t window) {
    if (window < 3 || window % 2 == 0) {
        throw ArgumentError("median_denoise: window must be odd and >= 3, got " + std::to_string(window));
    }
    const auto r = static_cast<std::ptrdiff_t>(window / 2);
    const std::size_t h = img.dim(0);
    const std::size_t w = img.dim(1);
    ImagePlane out({h, w});
    std::vector<double> buf(window * window);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            std::size_t n = 0;
            for (std::ptrdiff_t dy = -r; dy <= r; ++dy) {
                for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
                    buf[n++] = img(clamp_index(static_cast<std::ptrdiff_t>(y) + dy, h),
                                   clamp_index(static_cast<std::ptrdiff_t>(x) + dx, w));
                }
            }
            auto mid = buf.begin() + static_cast<std::ptrdiff_t>(n / 2);
            std::nth_element(buf.begin(), mid, buf.end());
            out(y, x) = *mid;
        }
    }
    return out;
}

ImagePlane sharpen_upscale(const ImagePlane& lr, std::size_t scale, int iterations) {
    if (scale < 2) throw ArgumentError("sharpen_upscale: scale must be >= 2");
    ImagePlane u = upscale(lr, scale);
    for (int it = 0; it < iterations; ++it) {
        ImagePlane residual = downscale(u, scale);
        for (std::size_t i = 0; i < residual.size(); ++i) residual[i] = lr[i] - residual[i];
        const ImagePlane correction = upscale(residual, scale);
        for (std::size_t i = 0; i < u.size(); ++i) u[i] += correction[i];
    }
    return u;
}

std::vector<std::string> denoise_methods() { return {"gaussian", "median"}; }
std::vector<std::string> superres_methods() { return {"bicubic", "sharpen"}; }

ImagePlane run_baseline(const std::string& method, const ImagePlane& degraded, double sigma, std::size_t scale) {
    if (method == "gaussian") return gaussian_denoise(degraded, sigma);
    if (method == "median") return median_denoise(degraded, 3);
    if (method == "bicubic") return upscale(degraded, scale);
    if (method == "sharpen") return sharpen_upscale(degraded, scale);
    throw ArgumentError("unknown method '" + method + "' (available: gaussian, median, bicubic, sharpen)");
}

} // namespace fuse3d
