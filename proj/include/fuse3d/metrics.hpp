#pragma once

#include <limits>
#include <string>
#include <utility>

#include "fuse3d/tensor.hpp"

namespace fuse3d {

double mse(const ImagePlane& a, const ImagePlane& b);

/// 10 log10(peak^2 / MSE). Identical images give +infinity.
double psnr(const ImagePlane& a, const ImagePlane& b, double peak = 255.0);
double psnr_from_mse(double mse, double peak = 255.0);

struct SsimParams {
    std::size_t window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 255.0;
};

/// Mean SSIM over all window positions fully inside the image (Gaussian-weighted statistics).
double ssim(const ImagePlane& a, const ImagePlane& b, const SsimParams& params = {});

/// Both planes with `crop` pixels removed from every side.
std::pair<ImagePlane, ImagePlane> eval_border_crop(const ImagePlane& a, const ImagePlane& b, std::size_t crop);

/// Writes "inf" for infinite values, otherwise fixed with `decimals` places.
std::string format_metric(double value, int decimals = 4);

} // namespace fuse3d
