#include "fuse3d/layers.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include <Eigen/Core>

namespace fuse3d {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr const char* kAxisNames[3] = {"depth", "height", "width"};

struct ConvGeometry {
    std::size_t in[3];      // unpadded input extent
    std::size_t padded[3];
    std::size_t kernel[3];
    std::size_t out[3];
    std::size_t pad[3];
    std::size_t k_size() const { return kernel[0] * kernel[1] * kernel[2]; }
    std::size_t p_size() const { return out[0] * out[1] * out[2]; }
};

ConvGeometry geometry(const Volume::Dims& input, const FilterBank& bank, const Pad3& pad) {
    ConvGeometry g{};
    const std::size_t pads[3] = {pad.depth, pad.height, pad.width};
    const std::size_t kern[3] = {bank.depth(), bank.height(), bank.width()};
    for (int a = 0; a < 3; ++a) {
        g.in[a] = input[a];
        g.pad[a] = pads[a];
        g.kernel[a] = kern[a];
        g.padded[a] = input[a] + 2 * pads[a];
        if (kern[a] == 0 || g.padded[a] < kern[a]) {
            throw ShapeError(std::string("conv3d: ") + kAxisNames[a] + " axis: padded input extent " +
                             std::to_string(g.padded[a]) + " is smaller than kernel extent " +
                             std::to_string(kern[a]));
        }
        g.out[a] = g.padded[a] - kern[a] + 1;
    }
    if (bank.biases.size() != bank.filters()) {
        throw ShapeError("conv3d: bias count " + std::to_string(bank.biases.size()) + " != filter count " +
                         std::to_string(bank.filters()));
    }
    return g;
}

// Zero-padded copy of the input, padded[0] x padded[1] x padded[2].
std::vector<double> pad_volume(const Volume& input, const ConvGeometry& g) {
    std::vector<double> out(g.padded[0] * g.padded[1] * g.padded[2], 0.0);
    for (std::size_t z = 0; z < g.in[0]; ++z) {
        for (std::size_t y = 0; y < g.in[1]; ++y) {
            const double* src = input.data() + (z * g.in[1] + y) * g.in[2];
            double* dst = out.data() + ((z + g.pad[0]) * g.padded[1] + (y + g.pad[1])) * g.padded[2] + g.pad[2];
            std::memcpy(dst, src, g.in[2] * sizeof(double));
        }
    }
    return out;
}

// Rows indexed by kernel tap (i,j,l), columns by output position (z,y,x).
RowMat im2col(const std::vector<double>& padded, const ConvGeometry& g) {
    RowMat col(g.k_size(), g.p_size());
    std::size_t row = 0;
    for (std::size_t i = 0; i < g.kernel[0]; ++i) {
        for (std::size_t j = 0; j < g.kernel[1]; ++j) {
            for (std::size_t l = 0; l < g.kernel[2]; ++l, ++row) {
                double* dst = col.data() + row * g.p_size();
                for (std::size_t z = 0; z < g.out[0]; ++z) {
                    for (std::size_t y = 0; y < g.out[1]; ++y) {
                        const double* src = padded.data() + ((z + i) * g.padded[1] + (y + j)) * g.padded[2] + l;
                        std::memcpy(dst, src, g.out[2] * sizeof(double));
                        dst += g.out[2];
                    }
                }
            }
        }
    }
    return col;
}

Volume col2im_cropped(const RowMat& col, const ConvGeometry& g) {
    std::vector<double> padded(g.padded[0] * g.padded[1] * g.padded[2], 0.0);
    std::size_t row = 0;
    for (std::size_t i = 0; i < g.kernel[0]; ++i) {
        for (std::size_t j = 0; j < g.kernel[1]; ++j) {
            for (std::size_t l = 0; l < g.kernel[2]; ++l, ++row) {
                const double* src = col.data() + row * g.p_size();
                for (std::size_t z = 0; z < g.out[0]; ++z) {
                    for (std::size_t y = 0; y < g.out[1]; ++y) {
                        double* dst = padded.data() + ((z + i) * g.padded[1] + (y + j)) * g.padded[2] + l;
                        for (std::size_t x = 0; x < g.out[2]; ++x) dst[x] += src[x];
                        src += g.out[2];
                    }
                }
            }
        }
    }
    Volume out({g.in[0], g.in[1], g.in[2]});
    for (std::size_t z = 0; z < g.in[0]; ++z) {
        for (std::size_t y = 0; y < g.in[1]; ++y) {
            const double* src = padded.data() + ((z + g.pad[0]) * g.padded[1] + (y + g.pad[1])) * g.padded[2] + g.pad[2];
            std::memcpy(out.data() + (z * g.in[1] + y) * g.in[2], src, g.in[2] * sizeof(double));
        }
    }
    return out;
}

} // namespace

std::array<std::size_t, 4> conv3d_output_dims(const Volume::Dims& input, const FilterBank& bank, const Pad3& pad) {
    const ConvGeometry g = geometry(input, bank, pad);
    return {bank.filters(), g.out[0], g.out[1], g.out[2]};
}

FeatureStack conv3d_forward(const Volume& input, const FilterBank& bank, const Pad3& pad) {
    const ConvGeometry g = geometry(input.dims(), bank, pad);
    const std::size_t n = bank.filters();
    const RowMat col = im2col(pad_volume(input, g), g);

    FeatureStack out({n, g.out[0], g.out[1], g.out[2]});
    Eigen::Map<const RowMat> w(bank.weights.data(), n, g.k_size());
    Eigen::Map<RowMat> result(out.data(), n, g.p_size());
    result.noalias() = w * col;
    for (std::size_t k = 0; k < n; ++k) result.row(k).array() += bank.biases[k];
    return out;
}

Conv3dGrad conv3d_backward(const Volume& input, const FilterBank& bank, const Pad3& pad,
                           const FeatureStack& grad_out, bool want_input_grad) {
    const ConvGeometry g = geometry(input.dims(), bank, pad);
    const std::size_t n = bank.filters();
    const FeatureStack::Dims expected{n, g.out[0], g.out[1], g.out[2]};
    if (grad_out.dims() != expected) {
        throw ShapeError("conv3d_backward: grad_out is " + shape_string(grad_out.dims()) + ", expected " +
                         shape_string(expected));
    }

    const RowMat col = im2col(pad_volume(input, g), g);
    Eigen::Map<const RowMat> go(grad_out.data(), n, g.p_size());
    Eigen::Map<const RowMat> w(bank.weights.data(), n, g.k_size());

    Conv3dGrad grad;
    grad.weights = Tensor<4>(bank.weights.dims());
    Eigen::Map<RowMat> gw(grad.weights.data(), n, g.k_size());
    gw.noalias() = go * col.transpose();

    grad.biases.resize(n);
    // Plain loop: Eigen's reductions peel to an address-dependent alignment boundary.
    for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < g.p_size(); ++j) s += go(k, j);
        grad.biases[k] = s;
    }

    if (want_input_grad) {
        RowMat gcol(g.k_size(), g.p_size());
        gcol.noalias() = w.transpose() * go;
        grad.input = col2im_cropped(gcol, g);
    }
    return grad;
}

Volume sum_filters(const FeatureStack& input) {
    const auto& d = input.dims();
    Volume s({d[1], d[2], d[3]});
    const std::size_t plane = s.size();
    for (std::size_t k = 0; k < d[0]; ++k) {
        const double* src = input.data() + k * plane;
        for (std::size_t i = 0; i < plane; ++i) s[i] += src[i];
    }
    return s;
}

Volume filter_collapse(const FeatureStack& input, double weight, double bias) {
    Volume s = sum_filters(input);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = weight * s[i] + bias;
    tanh_inplace(s.values());
    return s;
}

CollapseGrad filter_collapse_backward(const FeatureStack& input, double weight, const Volume& output,
                                      const Volume& grad_out) {
    const auto& d = input.dims();
    const Volume::Dims vd{d[1], d[2], d[3]};
    if (output.dims() != vd || grad_out.dims() != vd) {
        throw ShapeError("filter_collapse_backward: expected volume " + shape_string(vd));
    }
    const Volume s = sum_filters(input);
    CollapseGrad g;
    g.input = FeatureStack(d);
    const std::size_t plane = s.size();
    std::vector<double> pre(plane);
    for (std::size_t i = 0; i < plane; ++i) {
        pre[i] = grad_out[i] * (1.0 - output[i] * output[i]);
        g.weight += pre[i] * s[i];
        g.bias += pre[i];
    }
    for (std::size_t k = 0; k < d[0]; ++k) {
        double* dst = g.input.data() + k * plane;
        for (std::size_t i = 0; i < plane; ++i) dst[i] = weight * pre[i];
    }
    return g;
}

ImagePlane global_collapse(const FeatureStack& input, double weight, double bias) {
    const auto& d = input.dims();
    const std::size_t plane = d[2] * d[3];
    ImagePlane out({d[2], d[3]});
    for (std::size_t kz = 0; kz < d[0] * d[1]; ++kz) {
        const double* src = input.data() + kz * plane;
        for (std::size_t i = 0; i < plane; ++i) out[i] += src[i];
    }
    for (std::size_t i = 0; i < plane; ++i) out[i] = weight * out[i] + bias;
    return out;
}

CollapseGrad global_collapse_backward(const FeatureStack& input, double weight, const ImagePlane& grad_out) {
    const auto& d = input.dims();
    if (grad_out.dim(0) != d[2] || grad_out.dim(1) != d[3]) {
        throw ShapeError("global_collapse_backward: grad_out is " + shape_string(grad_out.dims()) +
                         ", expected " + std::to_string(d[2]) + "x" + std::to_string(d[3]));
    }
    const std::size_t plane = d[2] * d[3];
    CollapseGrad g;
    g.input = FeatureStack(d);
    for (std::size_t kz = 0; kz < d[0] * d[1]; ++kz) {
        const double* src = input.data() + kz * plane;
        double* dst = g.input.data() + kz * plane;
        for (std::size_t i = 0; i < plane; ++i) {
            g.weight += grad_out[i] * src[i];
            dst[i] = weight * grad_out[i];
        }
    }
    for (std::size_t i = 0; i < plane; ++i) g.bias += grad_out[i];
    return g;
}

Volume stack_planes(std::span<const ImagePlane> planes) {
    if (planes.empty()) throw ArgumentError("stack_planes: no planes");
    const auto h = planes[0].dim(0);
    const auto w = planes[0].dim(1);
    Volume v({planes.size(), h, w});
    for (std::size_t z = 0; z < planes.size(); ++z) {
        if (planes[z].dim(0) != h || planes[z].dim(1) != w) {
            throw ShapeError("stack_planes: plane " + std::to_string(z) + " is " + shape_string(planes[z].dims()) +
                             ", expected " + std::to_string(h) + "x" + std::to_string(w));
        }
        std::copy(planes[z].values().begin(), planes[z].values().end(), v.data() + z * h * w);
    }
    return v;
}

ImagePlane slice(const Volume& v, std::size_t z) {
    const std::size_t plane = v.dim(1) * v.dim(2);
    std::vector<double> values(v.data() + z * plane, v.data() + (z + 1) * plane);
    return ImagePlane({v.dim(1), v.dim(2)}, std::move(values));
}

void tanh_inplace(std::span<double> values) {
    // tanh(x) = sign(x) (1 - e) / (1 + e), e = exp(-2|x|), using Eigen's packet exp.
    // Work on an aligned copy so the packet/scalar split depends only on the index.
    Eigen::ArrayXd a = Eigen::Map<const Eigen::ArrayXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    const Eigen::ArrayXd e = (-2.0 * a.abs()).exp();
    a = a.sign() * (1.0 - e) / (1.0 + e);
    std::copy(a.begin(), a.end(), values.begin());
}

} // namespace fuse3d
