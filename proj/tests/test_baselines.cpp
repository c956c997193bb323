#include <cmath>

#include <gtest/gtest.h>

#include "fuse3d/baselines.hpp"
#include "fuse3d/degrade.hpp"
#include "fuse3d/metrics.hpp"
#include "fuse3d/synth.hpp"
#include "test_util.hpp"

using namespace fuse3d;

namespace {

double variance(const ImagePlane& a) {
    double m = 0.0, s = 0.0;
    for (double v : a.values()) m += v;
    m /= static_cast<double>(a.size());
    for (double v : a.values()) s += (v - m) * (v - m);
    return s / static_cast<double>(a.size());
}

} // namespace

TEST(GaussianDenoise, ConstantPreserved) {
    for (double v : gaussian_denoise(ImagePlane({9, 9}, 42.0), 25.0).values()) EXPECT_NEAR(v, 42.0, 1e-12);
}

TEST(GaussianDenoise, ImpulseGivesNormalizedKernel) {
    ImagePlane img({15, 15}, 0.0);
    img(7, 7) = 1.0;
    const ImagePlane k = gaussian_denoise(img, 25.0);
    double s = 0.0;
    for (double v : k.values()) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
    // Bandwidth 1 px: separable Gaussian weights exp(-d^2/2), truncated at radius 3.
    double norm = 0.0;
    for (int d = -3; d <= 3; ++d) norm += std::exp(-0.5 * d * d);
    EXPECT_NEAR(k(7, 7), 1.0 / (norm * norm), 1e-12);
    EXPECT_NEAR(k(7, 9), std::exp(-2.0) / (norm * norm), 1e-12);
    EXPECT_EQ(k(7, 11), 0.0);
}

TEST(GaussianDenoise, ReducesNoiseVariance) {
    const ImagePlane noisy = add_awg_noise(ImagePlane({64, 64}, 100.0), 25.0, 1);
    EXPECT_LT(variance(gaussian_denoise(noisy, 25.0)), variance(noisy));
}

TEST(MedianDenoise, Examples) {
    EXPECT_EQ(median_denoise(ImagePlane({5, 5}, 9.0)), ImagePlane({5, 5}, 9.0));
    ImagePlane imp({5, 5}, 10.0);
    imp(2, 2) = 250.0;
    EXPECT_EQ(median_denoise(imp), ImagePlane({5, 5}, 10.0));
    const ImagePlane row({1, 3}, {1, 9, 2});
    EXPECT_EQ(median_denoise(row)(0, 1), 2.0);
    EXPECT_THROW(median_denoise(imp, 4), ArgumentError);
    EXPECT_THROW(median_denoise(imp, 1), ArgumentError);
}

TEST(SharpenUpscale, ConstantAndFixedPoint) {
    for (double v : sharpen_upscale(ImagePlane({8, 8}, 60.0), 2).values()) EXPECT_NEAR(v, 60.0, 1e-9);

    // The plain upscale of a constant already downscales back to it, so back-projection is a no-op.
    const ImagePlane lr({16, 16}, 60.0);
    const ImagePlane plain = sharpen_upscale(lr, 2, 0);
    const ImagePlane many = sharpen_upscale(lr, 2, 5);
    for (std::size_t i = 0; i < plain.size(); ++i) EXPECT_NEAR(plain[i], many[i], 1e-9);
}

TEST(SharpenUpscale, RefinesTowardConsistency) {
    const ImagePlane truth = modcrop(synthesize_image(3), 2);
    const ImagePlane lr = downscale(truth, 2);
    auto residual = [&](const ImagePlane& hr) {
        const ImagePlane d = downscale(hr, 2);
        double s = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) s += (d[i] - lr[i]) * (d[i] - lr[i]);
        return s;
    };
    EXPECT_LT(residual(sharpen_upscale(lr, 2)), residual(upscale(lr, 2)));
}

TEST(SharpenUpscale, DiffersFromBicubicOnMostImages) {
    int differ = 0;
    for (int i = 0; i < 10; ++i) {
        const ImagePlane truth = synthesize_image(100 + i);
        const ImagePlane lr = downscale(truth, 2);
        if (psnr(upscale(lr, 2), truth) != psnr(sharpen_upscale(lr, 2), truth)) ++differ;
    }
    EXPECT_GE(differ, 5);
}

TEST(Baselines, DeterministicAndDispatch) {
    const ImagePlane noisy = add_awg_noise(synthesize_image(4), 25.0, 2);
    for (const auto& m : denoise_methods()) EXPECT_EQ(run_baseline(m, noisy, 25.0, 2), run_baseline(m, noisy, 25.0, 2));
    EXPECT_EQ(run_baseline("gaussian", noisy, 25.0, 2), gaussian_denoise(noisy, 25.0));
    EXPECT_EQ(run_baseline("median", noisy, 25.0, 2), median_denoise(noisy, 3));
    const ImagePlane lr = downscale(synthesize_image(5), 2);
    EXPECT_EQ(run_baseline("bicubic", lr, 25.0, 2), upscale(lr, 2));
    EXPECT_EQ(run_baseline("sharpen", lr, 25.0, 2), sharpen_upscale(lr, 2));
    try {
        run_baseline("bm3d", noisy, 25.0, 2);
        FAIL();
    } catch (const ArgumentError& e) {
        EXPECT_NE(std::string(e.what()).find("gaussian"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("sharpen"), std::string::npos);
    }
}
