#include "fuse3d/optim.hpp"

#include <cmath>
#include <string>

namespace fuse3d {

LossResult mse_loss(std::span<const ImagePlane> predicted, std::span<const ImagePlane> target) {
    if (predicted.size() != target.size()) {
        throw ArgumentError("mse_loss: " + std::to_string(predicted.size()) + " predictions for " +
                            std::to_string(target.size()) + " targets");
    }
    LossResult r;
    r.grad.reserve(predicted.size());
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (!predicted[i].same_shape(target[i])) {
            throw ArgumentError("mse_loss: pair " + std::to_string(i) + " shape mismatch (" +
                                shape_string(predicted[i].dims()) + " vs " + shape_string(target[i].dims()) + ")");
        }
        ImagePlane g(predicted[i].dims());
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double d = predicted[i][k] - target[i][k];
            r.loss += d * d;
            g[k] = 2.0 * d;
        }
        r.grad.push_back(std::move(g));
    }
    return r;
}

namespace {

void check_sizes(std::size_t params, std::size_t grads, const char* who) {
    if (params != grads) {
        throw ShapeError(std::string(who) + ": " + std::to_string(grads) + " gradients for " +
                         std::to_string(params) + " parameters");
    }
}

} // namespace

void sgd_step(SgdState& state, std::span<double> params, std::span<const double> grads) {
    check_sizes(params.size(), grads.size(), "sgd_step");
    if (state.velocity.empty()) state.velocity.assign(params.size(), 0.0);
    check_sizes(params.size(), state.velocity.size(), "sgd_step");
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.velocity[i] = state.momentum * state.velocity[i] - state.learning_rate * grads[i];
        params[i] += state.velocity[i];
    }
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
    check_sizes(params.size(), grads.size(), "adam_step");
    if (state.first_moment.empty()) {
        state.first_moment.assign(params.size(), 0.0);
        state.second_moment.assign(params.size(), 0.0);
    }
    check_sizes(params.size(), state.first_moment.size(), "adam_step");

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction = std::sqrt(1.0 - std::pow(state.beta2, t)) / (1.0 - std::pow(state.beta1, t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.first_moment[i] = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g;
        state.second_moment[i] = state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g;
        params[i] -= state.learning_rate * correction * state.first_moment[i] /
                     (std::sqrt(state.second_moment[i]) + state.epsilon);
    }
}

} // namespace fuse3d
