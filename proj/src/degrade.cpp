#include "fuse3d/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fuse3d {

std::string_view task_name(Task task) { return task == Task::Denoise ? "dn" : "sr"; }

Task parse_task(std::string_view name) {
    if (name == "dn") return Task::Denoise;
    if (name == "sr") return Task::SuperResolve;
    throw ArgumentError("unknown task '" + std::string(name) + "' (expected dn or sr)");
}

void DegradeConfig::validate() const {
    if (task == Task::Denoise && !(sigma > 0.0 && std::isfinite(sigma))) {
        throw ArgumentError("sigma must be positive");
    }
    if (task == Task::SuperResolve && scale < 2) throw ArgumentError("scale must be an integer >= 2");
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view image_id) {
    // FNV-1a of the id mixed into the run seed with a splitmix64 finalizer.
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : image_id) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL + h;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

ImagePlane add_awg_noise(const ImagePlane& img, double sigma, std::uint64_t seed, bool clip) {
    if (!(sigma > 0.0 && std::isfinite(sigma))) throw ArgumentError("add_awg_noise: sigma must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, sigma);
    ImagePlane out = img;
    for (auto& v : out.values()) {
        v += normal(rng);
        if (clip) v = std::clamp(v, 0.0, 255.0);
    }
    return out;
}

namespace {

double cubic(double x) {
    // Keys kernel with a = -0.5.
    const double ax = std::abs(x);
    const double ax2 = ax * ax;
    const double ax3 = ax2 * ax;
    if (ax <= 1.0) return 1.5 * ax3 - 2.5 * ax2 + 1.0;
    if (ax < 2.0) return -0.5 * ax3 + 2.5 * ax2 - 4.0 * ax + 2.0;
    return 0.0;
}

struct Contribution {
    std::vector<std::size_t> index;
    std::vector<double> weight;
};

// Per output sample: source indices (edge-replicated) and normalized weights.
std::vector<Contribution> contributions(std::size_t in, std::size_t out) {
    const double scale = static_cast<double>(out) / static_cast<double>(in);
    const double stretch = scale < 1.0 ? scale : 1.0;
    const double width = 4.0 / stretch;
    std::vector<Contribution> result(out);
    for (std::size_t o = 0; o < out; ++o) {
        const double u = (static_cast<double>(o) + 0.5) / scale - 0.5;
        const auto left = static_cast<std::ptrdiff_t>(std::floor(u - width / 2.0));
        const auto taps = static_cast<std::ptrdiff_t>(std::ceil(width)) + 2;
        Contribution c;
        double total = 0.0;
        for (std::ptrdiff_t t = 0; t < taps; ++t) {
            const std::ptrdiff_t j = left + t;
            const double wgt = stretch * cubic(stretch * (u - static_cast<double>(j)));
            if (wgt == 0.0) continue;
            c.index.push_back(static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(in) - 1)));
            c.weight.push_back(wgt);
            total += wgt;
        }
        for (auto& w : c.weight) w /= total;
        result[o] = std::move(c);
    }
    return result;
}

} // namespace

ImagePlane bicubic_resize(const ImagePlane& img, std::size_t out_height, std::size_t out_width) {
    if (out_height == 0 || out_width == 0) throw ArgumentError("bicubic_resize: degenerate output size");
    const std::size_t h = img.dim(0);
    const std::size_t w = img.dim(1);

    const auto rows = contributions(h, out_height);
    ImagePlane tmp({out_height, w});
    for (std::size_t o = 0; o < out_height; ++o) {
        const auto& c = rows[o];
        for (std::size_t x = 0; x < w; ++x) {
            double s = 0.0;
            for (std::size_t t = 0; t < c.index.size(); ++t) s += c.weight[t] * img(c.index[t], x);
            tmp(o, x) = s;
        }
    }
    const auto cols = contributions(w, out_width);
    ImagePlane out({out_height, out_width});
    for (std::size_t y = 0; y < out_height; ++y) {
        for (std::size_t o = 0; o < out_width; ++o) {
            const auto& c = cols[o];
            double s = 0.0;
            for (std::size_t t = 0; t < c.index.size(); ++t) s += c.weight[t] * tmp(y, c.index[t]);
            out(y, o) = s;
        }
    }
    return out;
}

ImagePlane bicubic_resize(const ImagePlane& img, double factor) {
    if (!(factor > 0.0)) throw ArgumentError("bicubic_resize: factor must be positive");
    const double oh = std::round(factor * static_cast<double>(img.dim(0)));
    const double ow = std::round(factor * static_cast<double>(img.dim(1)));
    if (oh < 1.0 || ow < 1.0) throw ArgumentError("bicubic_resize: degenerate output size");
    return bicubic_resize(img, static_cast<std::size_t>(oh), static_cast<std::size_t>(ow));
}

ImagePlane modcrop(const ImagePlane& img, std::size_t scale) {
    const std::size_t h = img.dim(0) - img.dim(0) % scale;
    const std::size_t w = img.dim(1) - img.dim(1) % scale;
    if (h == 0 || w == 0) throw ArgumentError("modcrop: image smaller than scale");
    if (h == img.dim(0) && w == img.dim(1)) return img;
    ImagePlane out({h, w});
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) out(y, x) = img(y, x);
    }
    return out;
}

ImagePlane downscale(const ImagePlane& hr, std::size_t scale) {
    if (scale < 1 || hr.dim(0) % scale || hr.dim(1) % scale) {
        throw ArgumentError("downscale: dims " + shape_string(hr.dims()) + " not divisible by " + std::to_string(scale));
    }
    return bicubic_resize(hr, hr.dim(0) / scale, hr.dim(1) / scale);
}

ImagePlane upscale(const ImagePlane& lr, std::size_t scale) {
    return bicubic_resize(lr, lr.dim(0) * scale, lr.dim(1) * scale);
}

DegradedImage degrade(const ImagePlane& truth, const DegradeConfig& config, std::string_view image_id) {
    config.validate();
    if (config.task == Task::Denoise) {
        return {truth, add_awg_noise(truth, config.sigma, derive_seed(config.seed, image_id), config.clip)};
    }
    ImagePlane gt = modcrop(truth, config.scale);
    ImagePlane lr = downscale(gt, config.scale);
    return {std::move(gt), std::move(lr)};
}

PatchPair cut_patch(const TrainingImage& image, std::size_t image_index, std::size_t y, std::size_t x, std::size_t p) {
    const std::size_t depth = image.methods.dim(0);
    PatchPair pair{Volume({depth, p, p}), ImagePlane({p, p}), image_index, y, x};
    for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t c = 0; c < p; ++c) {
            for (std::size_t z = 0; z < depth; ++z) pair.methods(z, r, c) = image.methods(z, y + r, x + c);
            pair.truth(r, c) = image.truth(y + r, x + c);
        }
    }
    return pair;
}

std::vector<PatchPair> extract_patches(std::span<const TrainingImage> images, std::size_t p, std::size_t count,
                                       std::uint64_t seed) {
    std::vector<PatchPair> out;
    if (count == 0) return out;
    if (images.empty()) throw ArgumentError("extract_patches: no images");
    for (const auto& im : images) {
        if (p == 0 || p > im.truth.dim(0) || p > im.truth.dim(1)) {
            throw ArgumentError("extract_patches: patch size " + std::to_string(p) + " exceeds image " + im.id + " (" +
                                shape_string(im.truth.dims()) + ")");
        }
    }
    std::mt19937_64 rng(seed);
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t k = std::uniform_int_distribution<std::size_t>(0, images.size() - 1)(rng);
        const auto& im = images[k];
        const std::size_t y = std::uniform_int_distribution<std::size_t>(0, im.truth.dim(0) - p)(rng);
        const std::size_t x = std::uniform_int_distribution<std::size_t>(0, im.truth.dim(1) - p)(rng);
        out.push_back(cut_patch(im, k, y, x, p));
    }
    return out;
}

} // namespace fuse3d
