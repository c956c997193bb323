#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "fuse3d/tensor.hpp"

namespace fuse3d::testing {

template <std::size_t R>
Tensor<R> random_tensor(const typename Tensor<R>::Dims& dims, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor<R> t(dims);
    for (auto& v : t.values()) v = u(rng);
    return t;
}

inline FilterBank random_bank(std::size_t n, std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed) {
    FilterBank bank(n, c, h, w);
    bank.weights = random_tensor<4>(bank.weights.dims(), seed);
    std::mt19937_64 rng(seed + 1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& b : bank.biases) b = u(rng);
    return bank;
}

// Direct six-loop cross-correlation with explicit bounds checks instead of a padded copy.
inline FeatureStack naive_conv3d(const Volume& in, const FilterBank& bank, const Pad3& pad) {
    const long D = static_cast<long>(in.dim(0)), H = static_cast<long>(in.dim(1)), W = static_cast<long>(in.dim(2));
    const long c = static_cast<long>(bank.depth()), h = static_cast<long>(bank.height()),
               w = static_cast<long>(bank.width());
    const long od = D + 2 * static_cast<long>(pad.depth) - c + 1;
    const long oh = H + 2 * static_cast<long>(pad.height) - h + 1;
    const long ow = W + 2 * static_cast<long>(pad.width) - w + 1;
    FeatureStack out({bank.filters(), static_cast<std::size_t>(od), static_cast<std::size_t>(oh),
                      static_cast<std::size_t>(ow)});
    for (std::size_t k = 0; k < bank.filters(); ++k)
        for (long z = 0; z < od; ++z)
            for (long y = 0; y < oh; ++y)
                for (long x = 0; x < ow; ++x) {
                    double s = bank.biases[k];
                    for (long i = 0; i < c; ++i)
                        for (long j = 0; j < h; ++j)
                            for (long l = 0; l < w; ++l) {
                                const long zz = z + i - static_cast<long>(pad.depth);
                                const long yy = y + j - static_cast<long>(pad.height);
                                const long xx = x + l - static_cast<long>(pad.width);
                                if (zz < 0 || zz >= D || yy < 0 || yy >= H || xx < 0 || xx >= W) continue;
                                s += bank.weights(k, i, j, l) * in(zz, yy, xx);
                            }
                    out(k, z, y, x) = s;
                }
    return out;
}

inline double rel_diff(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

class TempDir {
public:
    TempDir() {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        std::string name = info ? std::string(info->test_suite_name()) + "_" + info->name() : "fuse3d";
        path_ = std::filesystem::temp_directory_path() / ("fuse3d_test_" + name);
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace fuse3d::testing
