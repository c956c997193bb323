#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fuse3d/tensor.hpp"

namespace fuse3d {

struct LossResult {
    double loss = 0.0;
    std::vector<ImagePlane> grad;  // dL/dpredicted, one per pair
};

/// Sum over pairs and pixels of squared differences; grad_i = 2 (F_i - G_i).
LossResult mse_loss(std::span<const ImagePlane> predicted, std::span<const ImagePlane> target);

/// Momentum SGD: v <- a v - b g; theta <- theta + v.
struct SgdState {
    double momentum = 0.9;
    double learning_rate = 3e-8;  // the summed loss has very large gradients at init; 1e-7 diverges
    std::vector<double> velocity;
};

void sgd_step(SgdState& state, std::span<double> params, std::span<const double> grads);

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double learning_rate = 0.001;
    std::uint64_t step = 0;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
};

/// t <- t+1; m <- a1 m + (1-a1) g; v <- a2 v + (1-a2) g^2;
/// theta <- theta - b * sqrt(1 - a2^t) / (1 - a1^t) * m / (sqrt(v) + eps).
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

} // namespace fuse3d
