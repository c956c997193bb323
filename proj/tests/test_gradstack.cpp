#include <gtest/gtest.h>

#include "fuse3d/gradstack.hpp"
#include "test_util.hpp"

using namespace fuse3d;
using fuse3d::testing::random_tensor;

namespace {

ImagePlane transpose(const ImagePlane& a) {
    ImagePlane t({a.dim(1), a.dim(0)});
    for (std::size_t y = 0; y < a.dim(0); ++y)
        for (std::size_t x = 0; x < a.dim(1); ++x) t(x, y) = a(y, x);
    return t;
}

// Stencils written out independently with clamped indexing.
double at(const ImagePlane& img, long y, long x) {
    y = std::clamp<long>(y, 0, static_cast<long>(img.dim(0)) - 1);
    x = std::clamp<long>(x, 0, static_cast<long>(img.dim(1)) - 1);
    return img(y, x);
}

ImagePlane stencil(const ImagePlane& img, GradientKind kind) {
    ImagePlane out(img.dims());
    for (long y = 0; y < static_cast<long>(img.dim(0)); ++y) {
        for (long x = 0; x < static_cast<long>(img.dim(1)); ++x) {
            double v = 0.0;
            switch (kind) {
            case GradientKind::F1x: v = at(img, y, x) - at(img, y, x + 1); break;
            case GradientKind::F1y: v = at(img, y, x) - at(img, y + 1, x); break;
            case GradientKind::F2x: v = (at(img, y, x - 1) - 2 * at(img, y, x) + at(img, y, x + 1)) / 2; break;
            case GradientKind::F2y: v = (at(img, y - 1, x) - 2 * at(img, y, x) + at(img, y + 1, x)) / 2; break;
            }
            out(y, x) = v;
        }
    }
    return out;
}

constexpr GradientKind kAllKinds[] = {GradientKind::F1x, GradientKind::F1y, GradientKind::F2x, GradientKind::F2y};

} // namespace

TEST(AverageImage, Examples) {
    const ImagePlane one = random_tensor<2>({4, 5}, 1);
    EXPECT_EQ(average_image(std::span<const ImagePlane>(&one, 1)), one);

    const std::array<ImagePlane, 2> zh{ImagePlane({3, 3}, 0.0), ImagePlane({3, 3}, 100.0)};
    for (double v : average_image(zh).values()) EXPECT_EQ(v, 50.0);

    const std::array<ImagePlane, 2> pair{ImagePlane({1, 2}, {10, 20}), ImagePlane({1, 2}, {30, 0})};
    EXPECT_EQ(average_image(pair), ImagePlane({1, 2}, {20, 10}));

    EXPECT_THROW(average_image(std::span<const ImagePlane>()), ArgumentError);
}

TEST(GradientFilter, ConstantImageIsZero) {
    const ImagePlane c({6, 7}, 42.0);
    for (auto kind : kAllKinds) {
        for (double v : gradient_filter(c, kind).values()) EXPECT_EQ(v, 0.0);
    }
}

TEST(GradientFilter, LinearRamp) {
    ImagePlane ramp({5, 6});
    for (std::size_t y = 0; y < 5; ++y)
        for (std::size_t x = 0; x < 6; ++x) ramp(y, x) = static_cast<double>(x);
    const ImagePlane f2 = gradient_filter(ramp, GradientKind::F2x);
    const ImagePlane f1 = gradient_filter(ramp, GradientKind::F1x);
    for (std::size_t y = 0; y < 5; ++y) {
        for (std::size_t x = 1; x + 1 < 6; ++x) {
            EXPECT_EQ(f2(y, x), 0.0);
            EXPECT_EQ(f1(y, x), -1.0);
        }
    }
}

TEST(GradientFilter, SecondOrderCenter) {
    ImagePlane img({3, 3});
    for (std::size_t y = 0; y < 3; ++y) {
        img(y, 0) = 1;
        img(y, 1) = 4;
        img(y, 2) = 9;
    }
    EXPECT_EQ(gradient_filter(img, GradientKind::F2x)(1, 1), 1.0);
}

TEST(GradientFilter, MatchesIndependentStencils) {
    const ImagePlane img = random_tensor<2>({7, 9}, 3, 0.0, 255.0);
    for (auto kind : kAllKinds) EXPECT_EQ(gradient_filter(img, kind), stencil(img, kind));
}

TEST(GradientFilter, TransposeSymmetry) {
    const ImagePlane img = random_tensor<2>({6, 8}, 4);
    EXPECT_EQ(transpose(gradient_filter(transpose(img), GradientKind::F1x)), gradient_filter(img, GradientKind::F1y));
    EXPECT_EQ(transpose(gradient_filter(transpose(img), GradientKind::F2x)), gradient_filter(img, GradientKind::F2y));
}

TEST(GradientFilter, PeriodicInteriorMeanIsZero) {
    // One period of a sampled sinusoid repeated, so the forward differences over a full period sum to zero.
    ImagePlane img({4, 17});
    for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 17; ++x) img(y, x) = std::sin(2.0 * M_PI * static_cast<double>(x % 8) / 8.0) + y;
    const ImagePlane f1 = gradient_filter(img, GradientKind::F1x);
    for (std::size_t y = 0; y < 4; ++y) {
        double s = 0.0;
        for (std::size_t x = 0; x < 16; ++x) s += f1(y, x);
        EXPECT_NEAR(s / 16.0, 0.0, 1e-12);
    }
}

TEST(GradientFilter, RejectsTinyImages) {
    EXPECT_THROW(gradient_filter(ImagePlane({2, 5}), GradientKind::F1x), ArgumentError);
    EXPECT_THROW(gradient_filter(ImagePlane({5, 2}), GradientKind::F2y), ArgumentError);
}

TEST(GradientStack, ConstantInputs) {
    const std::array<ImagePlane, 2> c{ImagePlane({4, 4}, 7.0), ImagePlane({4, 4}, 7.0)};
    const Volume s = build_gradient_stack(c);
    ASSERT_EQ(s.dims(), (Volume::Dims{5, 4, 4}));
    for (std::size_t z = 0; z < 5; ++z) {
        for (double v : slice(s, z).values()) EXPECT_EQ(v, z == 2 ? 7.0 : 0.0);
    }
}

TEST(GradientStack, IdenticalInputsMatchSingle) {
    const ImagePlane img = random_tensor<2>({6, 6}, 5);
    const std::array<ImagePlane, 2> twice{img, img};
    EXPECT_EQ(build_gradient_stack(twice), build_gradient_stack(std::span<const ImagePlane>(&img, 1)));
}

TEST(GradientStack, ChannelOrderAndComponents) {
    const std::array<ImagePlane, 2> pair{random_tensor<2>({8, 8}, 6, 0, 255), random_tensor<2>({8, 8}, 7, 0, 255)};
    const Volume s = build_gradient_stack(pair);
    const ImagePlane avg = average_image(pair);
    EXPECT_EQ(slice(s, 2), avg);
    EXPECT_EQ(slice(s, 0), stencil(avg, GradientKind::F2x));
    EXPECT_EQ(slice(s, 1), stencil(avg, GradientKind::F1x));
    EXPECT_EQ(slice(s, 3), stencil(avg, GradientKind::F1y));
    EXPECT_EQ(slice(s, 4), stencil(avg, GradientKind::F2y));
    EXPECT_EQ(build_gradient_stack(stack_planes(pair)), s);
}
