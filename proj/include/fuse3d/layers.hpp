#pragma once

#include <span>
#include <cmath>
#include <cstddef>
#include <vector>

#include "fuse3d/tensor.hpp"

namespace fuse3d {

/// Output dims of a stride-1 3D convolution. Throws ShapeError naming the first axis
/// whose padded extent is smaller than the kernel.
std::array<std::size_t, 4> conv3d_output_dims(const Volume::Dims& input, const FilterBank& bank, const Pad3& pad);

/// Stride-1 zero-padded 3D cross-correlation:
///   out[k,z,y,x] = bias[k] + sum_{i,j,l} w[k,i,j,l] * padded[z+i, y+j, x+l]
FeatureStack conv3d_forward(const Volume& input, const FilterBank& bank, const Pad3& pad);

struct Conv3dGrad {
    Volume input;                 // empty when not requested
    Tensor<4> weights;
    std::vector<double> biases;
};

/// Gradients of sum(grad_out * conv3d_forward(input, bank, pad)).
/// The input gradient is skipped when `want_input_grad` is false (first layer of a branch).
Conv3dGrad conv3d_backward(const Volume& input, const FilterBank& bank, const Pad3& pad,
                           const FeatureStack& grad_out, bool want_input_grad = true);

/// Vectorized tanh, within a few ulp of std::tanh.
void tanh_inplace(std::span<double> values);

template <std::size_t R>
Tensor<R> tanh_forward(const Tensor<R>& x) {
    Tensor<R> y = x;
    tanh_inplace(y.values());
    return y;
}

/// grad_in = grad_out * (1 - y^2), with y the cached tanh output.
template <std::size_t R>
Tensor<R> tanh_backward(const Tensor<R>& y, const Tensor<R>& grad_out) {
    if (!y.same_shape(grad_out)) throw ShapeError("tanh_backward: gradient shape mismatch");
    Tensor<R> g(y.dims());
    for (std::size_t i = 0; i < y.size(); ++i) g[i] = grad_out[i] * (1.0 - y[i] * y[i]);
    return g;
}

/// Sum over the filter axis only: out[z,y,x] = sum_k input[k,z,y,x].
Volume sum_filters(const FeatureStack& input);

/// out[z,y,x] = tanh(weight * sum_k input[k,z,y,x] + bias). Depth is preserved.
Volume filter_collapse(const FeatureStack& input, double weight, double bias);

struct CollapseGrad {
    FeatureStack input;
    double weight = 0.0;
    double bias = 0.0;
};

/// `output` is the value returned by filter_collapse for the same arguments.
CollapseGrad filter_collapse_backward(const FeatureStack& input, double weight, const Volume& output,
                                      const Volume& grad_out);

/// Linear reconstruction: out[y,x] = weight * sum_{k,z} input[k,z,y,x] + bias.
ImagePlane global_collapse(const FeatureStack& input, double weight, double bias);

CollapseGrad global_collapse_backward(const FeatureStack& input, double weight, const ImagePlane& grad_out);

} // namespace fuse3d
