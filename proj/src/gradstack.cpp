#include "fuse3d/gradstack.hpp"

#include <algorithm>
#include <vector>

namespace fuse3d {

namespace {

std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1));
}

} // namespace

ImagePlane average_image(std::span<const ImagePlane> methods) {
    if (methods.empty()) throw ArgumentError("average_image: empty method stack");
    return average_image(stack_planes(methods));
}

ImagePlane average_image(const Volume& methods) {
    const std::size_t n = methods.dim(0);
    const std::size_t plane = methods.dim(1) * methods.dim(2);
    ImagePlane avg({methods.dim(1), methods.dim(2)});
    for (std::size_t i = 0; i < plane; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += methods[k * plane + i];
        avg[i] = s / static_cast<double>(n);
    }
    return avg;
}

ImagePlane gradient_filter(const ImagePlane& img, GradientKind kind) {
    const std::size_t h = img.dim(0);
    const std::size_t w = img.dim(1);
    if (h < 3 || w < 3) {
        throw ArgumentError("gradient_filter: image " + shape_string(img.dims()) + " is smaller than 3x3");
    }
    ImagePlane out({h, w});
    auto at = [&](std::ptrdiff_t y, std::ptrdiff_t x) { return img(clamp_index(y, h), clamp_index(x, w)); };
    for (std::size_t yy = 0; yy < h; ++yy) {
        for (std::size_t xx = 0; xx < w; ++xx) {
            const auto y = static_cast<std::ptrdiff_t>(yy);
            const auto x = static_cast<std::ptrdiff_t>(xx);
            double v = 0.0;
            switch (kind) {
            case GradientKind::F1x: v = at(y, x) - at(y, x + 1); break;
            case GradientKind::F1y: v = at(y, x) - at(y + 1, x); break;
            case GradientKind::F2x: v = (at(y, x - 1) - 2.0 * at(y, x) + at(y, x + 1)) / 2.0; break;
            case GradientKind::F2y: v = (at(y - 1, x) - 2.0 * at(y, x) + at(y + 1, x)) / 2.0; break;
            }
            out(yy, xx) = v;
        }
    }
    return out;
}

Volume build_gradient_stack(std::span<const ImagePlane> methods) {
    if (methods.empty()) throw ArgumentError("build_gradient_stack: empty method stack");
    return build_gradient_stack(stack_planes(methods));
}

Volume build_gradient_stack(const Volume& methods) {
    const ImagePlane avg = average_image(methods);
    const std::vector<ImagePlane> channels{
        gradient_filter(avg, GradientKind::F2x), gradient_filter(avg, GradientKind::F1x), avg,
        gradient_filter(avg, GradientKind::F1y), gradient_filter(avg, GradientKind::F2y)};
    return stack_planes(channels);
}

} // namespace fuse3d
