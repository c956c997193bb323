#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fuse3d/errors.hpp"

namespace fuse3d {

/// Dense row-major array of doubles with a fixed rank. The first axis is outermost.
template <std::size_t Rank>
class Tensor {
public:
    using Dims = std::array<std::size_t, Rank>;

    Tensor() { dims_.fill(0); }

    explicit Tensor(const Dims& dims, double fill = 0.0) : dims_(dims), values_(count(dims), fill) {
        for (std::size_t i = 0; i < Rank; ++i) {
            if (dims[i] == 0) {
                throw ShapeError("tensor axis " + std::to_string(i) + " has zero extent");
            }
        }
    }

    Tensor(const Dims& dims, std::vector<double> values) : dims_(dims), values_(std::move(values)) {
        for (std::size_t i = 0; i < Rank; ++i) {
            if (dims[i] == 0) {
                throw ShapeError("tensor axis " + std::to_string(i) + " has zero extent");
            }
        }
        if (values_.size() != count(dims)) {
            throw ShapeError("value count " + std::to_string(values_.size()) + " does not match dims product " +
                             std::to_string(count(dims)));
        }
    }

    const Dims& dims() const noexcept { return dims_; }
    std::size_t dim(std::size_t axis) const noexcept { return dims_[axis]; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double* data() noexcept { return values_.data(); }
    const double* data() const noexcept { return values_.data(); }
    std::span<double> values() & noexcept { return values_; }
    std::span<const double> values() const& noexcept { return values_; }
    // A temporary hands over its storage so range-for over f().values() stays valid.
    std::vector<double> values() && noexcept { return std::move(values_); }
    std::vector<double>& storage() noexcept { return values_; }
    const std::vector<double>& storage() const noexcept { return values_; }

    double& operator[](std::size_t i) noexcept { return values_[i]; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    template <typename... Idx>
        requires(sizeof...(Idx) == Rank)
    double& operator()(Idx... idx) noexcept {
        return values_[offset({static_cast<std::size_t>(idx)...})];
    }

    template <typename... Idx>
        requires(sizeof...(Idx) == Rank)
    double operator()(Idx... idx) const noexcept {
        return values_[offset({static_cast<std::size_t>(idx)...})];
    }

    std::size_t offset(const Dims& idx) const noexcept {
        std::size_t off = 0;
        for (std::size_t i = 0; i < Rank; ++i) {
            off = off * dims_[i] + idx[i];
        }
        return off;
    }

    void fill(double v) { std::fill(values_.begin(), values_.end(), v); }

    bool same_shape(const Tensor& other) const noexcept { return dims_ == other.dims_; }

    friend bool operator==(const Tensor& a, const Tensor& b) = default;

    static std::size_t count(const Dims& dims) {
        return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
    }

private:
    Dims dims_;
    std::vector<double> values_;
};

/// Single H x W image, intensities on whatever scale the caller uses (0..255 for files).
using ImagePlane = Tensor<2>;
/// d x H x W stack of planes, depth outermost.
using Volume = Tensor<3>;
/// n x d x H x W: one volume per filter.
using FeatureStack = Tensor<4>;

/// n filters of size c x h x w plus one bias per filter.
struct FilterBank {
    Tensor<4> weights;
    std::vector<double> biases;

    FilterBank() = default;
    FilterBank(std::size_t n, std::size_t c, std::size_t h, std::size_t w)
        : weights({n, c, h, w}), biases(n, 0.0) {}

    std::size_t filters() const noexcept { return weights.dim(0); }
    std::size_t depth() const noexcept { return weights.dim(1); }
    std::size_t height() const noexcept { return weights.dim(2); }
    std::size_t width() const noexcept { return weights.dim(3); }

    friend bool operator==(const FilterBank&, const FilterBank&) = default;
};

/// Symmetric zero padding per axis.
struct Pad3 {
    std::size_t depth = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    friend bool operator==(const Pad3&, const Pad3&) = default;
};

/// Stacks equally sized planes into a volume (depth = number of planes).
Volume stack_planes(std::span<const ImagePlane> planes);

/// Copies depth slice z of a volume.
ImagePlane slice(const Volume& v, std::size_t z);

inline std::string shape_string(std::span<const std::size_t> dims) {
    std::string s;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(dims[i]);
    }
    return s;
}

} // namespace fuse3d
