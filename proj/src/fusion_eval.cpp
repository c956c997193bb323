#include "fuse3d/fusion_eval.hpp"

#include <cmath>
#include <limits>

#include "fuse3d/metrics.hpp"

namespace fuse3d {

namespace {

void check_aligned(std::span<const ImagePlane> outputs, const ImagePlane* truth, std::size_t min_count,
                   const char* who) {
    if (outputs.size() < min_count) {
        throw ArgumentError(std::string(who) + ": need at least " + std::to_string(min_count) + " candidates");
    }
    const auto& ref = truth ? *truth : outputs[0];
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        if (!outputs[i].same_shape(ref)) {
            throw ArgumentError(std::string(who) + ": candidate " + std::to_string(i) + " is " +
                                shape_string(outputs[i].dims()) + ", expected " + shape_string(ref.dims()));
        }
    }
}

// Window starts along one axis: multiples of `stride`, stopping once a window reaches the edge.
std::vector<std::size_t> window_starts(std::size_t extent, std::size_t patch, std::size_t stride) {
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s < extent; s += stride) {
        starts.push_back(s);
        if (s + patch >= extent) break;
    }
    return starts;
}

} // namespace

std::string describe(const OracleConfig& config) {
    if (config.mode == OracleMode::Pixel) return "pixel";
    return "patch" + std::to_string(config.patch) + (config.overlap == Overlap::None ? "-nonoverlap" : "-overlap");
}

ImagePlane average_fusion(std::span<const ImagePlane> outputs) {
    check_aligned(outputs, nullptr, 2, "average_fusion");
    ImagePlane out(outputs[0].dims());
    const double n = static_cast<double>(outputs.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double s = 0.0;
        for (const auto& o : outputs) s += o[i];
        out[i] = s / n;
    }
    return out;
}

ImagePlane oracle_pixel(std::span<const ImagePlane> outputs, const ImagePlane& truth) {
    check_aligned(outputs, &truth, 1, "oracle_pixel");
    ImagePlane out(truth.dims());
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::size_t best = 0;
        double best_err = std::abs(outputs[0][i] - truth[i]);
        for (std::size_t k = 1; k < outputs.size(); ++k) {
            const double err = std::abs(outputs[k][i] - truth[i]);
            if (err < best_err) {
                best = k;
                best_err = err;
            }
        }
        out[i] = outputs[best][i];
    }
    return out;
}

ImagePlane oracle_patch(std::span<const ImagePlane> outputs, const ImagePlane& truth, const OracleConfig& config) {
    if (config.mode == OracleMode::Pixel) return oracle_pixel(outputs, truth);
    check_aligned(outputs, &truth, 1, "oracle_patch");
    const std::size_t h = truth.dim(0);
    const std::size_t w = truth.dim(1);
    const std::size_t p = config.patch;
    if (p == 0 || p > h || p > w) {
        throw ArgumentError("oracle_patch: patch size " + std::to_string(p) + " invalid for " + shape_string(truth.dims()));
    }
    const std::size_t stride = config.overlap == Overlap::None ? p : (p + 1) / 2;

    ImagePlane sum(truth.dims());
    ImagePlane count(truth.dims());
    for (std::size_t y0 : window_starts(h, p, stride)) {
        const std::size_t y1 = std::min(y0 + p, h);
        for (std::size_t x0 : window_starts(w, p, stride)) {
            const std::size_t x1 = std::min(x0 + p, w);
            std::size_t best = 0;
            double best_err = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < outputs.size(); ++k) {
                double err = 0.0;
                for (std::size_t y = y0; y < y1; ++y) {
                    for (std::size_t x = x0; x < x1; ++x) {
                        const double d = outputs[k](y, x) - truth(y, x);
                        err += d * d;
                    }
                }
                if (err < best_err) {
                    best = k;
                    best_err = err;
                }
            }
            for (std::size_t y = y0; y < y1; ++y) {
                for (std::size_t x = x0; x < x1; ++x) {
                    sum(y, x) += outputs[best](y, x);
                    count(y, x) += 1.0;
                }
            }
        }
    }
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] /= count[i];
    return sum;
}

std::vector<SweepRow> oracle_sweep(std::span<const ImagePlane> outputs, const ImagePlane& truth,
                                   std::span<const std::size_t> sizes) {
    std::vector<SweepRow> rows;
    const bool ssim_ok = truth.dim(0) >= SsimParams{}.window && truth.dim(1) >= SsimParams{}.window;
    for (std::size_t p : sizes) {
        for (Overlap ov : {Overlap::None, Overlap::HalfStride}) {
            const ImagePlane fused = oracle_patch(outputs, truth, {OracleMode::Patch, p, ov});
            rows.push_back({p, ov, psnr(fused, truth),
                            ssim_ok ? ssim(fused, truth) : std::numeric_limits<double>::quiet_NaN()});
        }
    }
    return rows;
}

Comparison compare_methods(std::span<const ImageScore> a, std::span<const ImageScore> b) {
    if (a.size() != b.size()) {
        throw ArgumentError("compare_methods: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                            " images");
    }
    Comparison c;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].first != b[i].first) {
            throw ArgumentError("compare_methods: image id mismatch '" + a[i].first + "' vs '" + b[i].first + "'");
        }
        // Two exact reconstructions compare as a tie rather than inf - inf.
        const double gain = (a[i].second == b[i].second) ? 0.0 : a[i].second - b[i].second;
        c.rows.push_back({a[i].first, a[i].second, b[i].second, gain});
        if (gain > 0) {
            ++c.wins_a;
        } else if (gain < 0) {
            ++c.wins_b;
        } else {
            ++c.ties;
        }
    }
    return c;
}

} // namespace fuse3d
