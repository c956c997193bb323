#include "fuse3d/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

namespace fuse3d {

namespace {

void require_same(const ImagePlane& a, const ImagePlane& b, const char* who) {
    if (!a.same_shape(b)) {
        throw ArgumentError(std::string(who) + ": shape mismatch " + shape_string(a.dims()) + " vs " +
                            shape_string(b.dims()));
    }
}

// Separable 'valid' filtering with a normalized 1D Gaussian.
ImagePlane filter_valid(const ImagePlane& img, const std::vector<double>& k) {
    const std::size_t n = k.size();
    const std::size_t h = img.dim(0);
    const std::size_t w = img.dim(1);
    ImagePlane rows({h, w - n + 1});
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x + n <= w; ++x) {
            double s = 0.0;
            for (std::size_t t = 0; t < n; ++t) s += k[t] * img(y, x + t);
            rows(y, x) = s;
        }
    }
    ImagePlane out({h - n + 1, w - n + 1});
    for (std::size_t y = 0; y + n <= h; ++y) {
        for (std::size_t x = 0; x < out.dim(1); ++x) {
            double s = 0.0;
            for (std::size_t t = 0; t < n; ++t) s += k[t] * rows(y + t, x);
            out(y, x) = s;
        }
    }
    return out;
}

} // namespace

double mse(const ImagePlane& a, const ImagePlane& b) {
    require_same(a, b, "mse");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s / static_cast<double>(a.size());
}

double psnr_from_mse(double m, double peak) {
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / m);
}

double psnr(const ImagePlane& a, const ImagePlane& b, double peak) {
    require_same(a, b, "psnr");
    return psnr_from_mse(mse(a, b), peak);
}

double ssim(const ImagePlane& a, const ImagePlane& b, const SsimParams& params) {
    require_same(a, b, "ssim");
    if (a.dim(0) < params.window || a.dim(1) < params.window) {
        throw ArgumentError("ssim: image " + shape_string(a.dims()) + " smaller than the " +
                            std::to_string(params.window) + "x" + std::to_string(params.window) + " window");
    }
    std::vector<double> k(params.window);
    const double c = static_cast<double>(params.window - 1) / 2.0;
    double total = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
        const double d = static_cast<double>(i) - c;
        k[i] = std::exp(-d * d / (2.0 * params.sigma * params.sigma));
        total += k[i];
    }
    for (auto& v : k) v /= total;

    ImagePlane aa(a.dims()), bb(a.dims()), ab(a.dims());
    for (std::size_t i = 0; i < a.size(); ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    const ImagePlane mu_a = filter_valid(a, k);
    const ImagePlane mu_b = filter_valid(b, k);
    const ImagePlane e_aa = filter_valid(aa, k);
    const ImagePlane e_bb = filter_valid(bb, k);
    const ImagePlane e_ab = filter_valid(ab, k);

    const double c1 = (params.k1 * params.dynamic_range) * (params.k1 * params.dynamic_range);
    const double c2 = (params.k2 * params.dynamic_range) * (params.k2 * params.dynamic_range);
    double sum = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a[i];
        const double mb = mu_b[i];
        const double va = e_aa[i] - ma * ma;
        const double vb = e_bb[i] - mb * mb;
        const double cov = e_ab[i] - ma * mb;
        sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    return sum / static_cast<double>(mu_a.size());
}

std::pair<ImagePlane, ImagePlane> eval_border_crop(const ImagePlane& a, const ImagePlane& b, std::size_t crop) {
    require_same(a, b, "eval_border_crop");
    if (crop == 0) return {a, b};
    if (2 * crop >= a.dim(0) || 2 * crop >= a.dim(1)) {
        throw ArgumentError("eval_border_crop: crop " + std::to_string(crop) + " too large for " +
                            shape_string(a.dims()));
    }
    const std::size_t h = a.dim(0) - 2 * crop;
    const std::size_t w = a.dim(1) - 2 * crop;
    ImagePlane ca({h, w}), cb({h, w});
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            ca(y, x) = a(y + crop, x + crop);
            cb(y, x) = b(y + crop, x + crop);
        }
    }
    return {std::move(ca), std::move(cb)};
}

std::string format_metric(double value, int decimals) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (std::isnan(value)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

} // namespace fuse3d
