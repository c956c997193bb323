#include "fuse3d/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace fuse3d {

ImagePlane synthesize_image(std::uint64_t seed, std::size_t height, std::size_t width) {
    std::mt19937_64 rng(seed);
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    const double h = static_cast<double>(height);
    const double w = static_cast<double>(width);

    ImagePlane img({height, width});
    const double busy = uniform(0.0, 1.0);

    // Shading: linear ramp plus a few broad blobs.
    const double base = uniform(70.0, 180.0);
    const double gx = uniform(-60.0, 60.0) / w;
    const double gy = uniform(-60.0, 60.0) / h;
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) img(y, x) = base + gx * static_cast<double>(x) + gy * static_cast<double>(y);
    }
    const int blobs = 2 + static_cast<int>(uniform(0.0, 4.0));
    for (int b = 0; b < blobs; ++b) {
        const double cy = uniform(0.0, h), cx = uniform(0.0, w);
        const double s = uniform(0.1, 0.3) * std::min(h, w);
        const double amp = uniform(-60.0, 60.0);
        for (std::size_t y = 0; y < height; ++y) {
            for (std::size_t x = 0; x < width; ++x) {
                const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
                img(y, x) += amp * std::exp(-(dx * dx + dy * dy) / (2.0 * s * s));
            }
        }
    }

    // Hard-edged shapes: rectangles and discs painted with flat intensities.
    const int shapes = static_cast<int>(std::round(busy * busy * 30.0));
    for (int k = 0; k < shapes; ++k) {
        const double value = uniform(10.0, 245.0);
        const bool disc = uniform(0.0, 1.0) < 0.5;
        const double cy = uniform(0.0, h), cx = uniform(0.0, w);
        const double ry = uniform(1.5, 0.25 * h), rx = disc ? ry : uniform(1.5, 0.25 * w);
        for (std::size_t y = 0; y < height; ++y) {
            for (std::size_t x = 0; x < width; ++x) {
                const double dy = (static_cast<double>(y) - cy) / ry;
                const double dx = (static_cast<double>(x) - cx) / rx;
                const bool inside = disc ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
                if (inside) img(y, x) = value;
            }
        }
    }

    // Stripe texture inside a random window.
    if (uniform(0.0, 1.0) < busy) {
        const double period = uniform(3.0, 9.0);
        const double angle = uniform(0.0, std::numbers::pi);
        const double amp = uniform(15.0, 45.0);
        const double y0 = uniform(0.0, 0.5 * h), x0 = uniform(0.0, 0.5 * w);
        const double y1 = y0 + uniform(0.3, 0.5) * h, x1 = x0 + uniform(0.3, 0.5) * w;
        for (std::size_t y = 0; y < height; ++y) {
            for (std::size_t x = 0; x < width; ++x) {
                const double fy = static_cast<double>(y), fx = static_cast<double>(x);
                if (fy < y0 || fy >= y1 || fx < x0 || fx >= x1) continue;
                const double t = fx * std::cos(angle) + fy * std::sin(angle);
                img(y, x) += amp * std::sin(2.0 * std::numbers::pi * t / period);
            }
        }
    }

    for (auto& v : img.values()) v = std::round(std::clamp(v, 0.0, 255.0));
    return img;
}

} // namespace fuse3d
