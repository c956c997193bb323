#include "fuse3d/train.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "fuse3d/optim.hpp"
#include "fuse3d/parallel.hpp"

namespace fuse3d {

OptimizerKind parse_optimizer(std::string_view name) {
    if (name == "adam") return OptimizerKind::Adam;
    if (name == "sgd") return OptimizerKind::Sgd;
    throw ArgumentError("unknown optimizer '" + std::string(name) + "' (expected adam or sgd)");
}

void TrainConfig::validate() const {
    if (batch_size == 0) throw ArgumentError("batch size must be positive");
    if (patch == 0) throw ArgumentError("patch size must be positive");
    if (snapshot_interval == 0) throw ArgumentError("snapshot interval must be positive");
}

BatchGradient batch_gradient(const ModelParams& params, std::span<const PatchPair> batch, std::size_t threads) {
    std::vector<std::vector<double>> grads(batch.size());
    std::vector<double> losses(batch.size());
    parallel_for(batch.size(), threads, [&](std::size_t i) {
        ForwardTrace trace;
        const ImagePlane fused = model_forward(params, batch[i].methods, trace);
        ImagePlane grad_out(fused.dims());
        double loss = 0.0;
        for (std::size_t k = 0; k < fused.size(); ++k) {
            const double d = fused[k] - batch[i].truth[k];
            loss += d * d;
            grad_out[k] = 2.0 * d;
        }
        losses[i] = loss;
        grads[i] = flatten(model_backward(params, batch[i].methods, grad_out, trace));
    });

    BatchGradient out;
    out.grad.assign(parameter_count(params), 0.0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        out.loss += losses[i];
        for (std::size_t k = 0; k < out.grad.size(); ++k) out.grad[k] += grads[i][k];
    }
    return out;
}

TrainResult train(const ModelParams& init, std::span<const TrainingImage> data, const TrainConfig& config,
                  const SnapshotCallback& on_snapshot) {
    config.validate();
    if (data.empty()) throw ArgumentError("train: empty dataset");

    std::vector<TrainingImage> scaled(data.begin(), data.end());
    for (auto& im : scaled) {
        if (im.methods.dim(0) != 2) throw UnsupportedError("train: exactly two fused methods supported");
        for (auto& v : im.methods.values()) v /= kIntensityScale;
        for (auto& v : im.truth.values()) v /= kIntensityScale;
    }

    TrainResult result{init, {}};
    std::vector<double> theta = flatten(init);
    AdamState adam;
    adam.learning_rate = config.adam_learning_rate;
    SgdState sgd;
    sgd.momentum = config.sgd_momentum;
    sgd.learning_rate = config.sgd_learning_rate;

    for (std::size_t it = 1; it <= config.iterations; ++it) {
        const auto batch =
            extract_patches(scaled, config.patch, config.batch_size, derive_seed(config.seed, "batch" + std::to_string(it)));
        const BatchGradient bg = batch_gradient(result.params, batch, config.threads);
        if (!std::isfinite(bg.loss)) {
            throw DivergenceError("training diverged: non-finite loss at iteration " + std::to_string(it));
        }
        double norm = 0.0;
        for (double g : bg.grad) norm += g * g;
        norm = std::sqrt(norm);

        if (config.optimizer == OptimizerKind::Adam) {
            adam_step(adam, theta, bg.grad);
        } else {
            sgd_step(sgd, theta, bg.grad);
        }
        unflatten(theta, result.params);

        if ((it - 1) % config.snapshot_interval == 0 || it == config.iterations) {
            result.curve.push_back({it, bg.loss, norm});
            if (on_snapshot) on_snapshot(result.curve.back());
        }
    }
    return result;
}

void write_loss_csv(std::ostream& out, std::span<const LossPoint> curve, std::span<const std::string> provenance) {
    for (const auto& line : provenance) out << "# " << line << "\n";
    out << "iteration,loss,grad_norm\n";
    char buf[128];
    for (const auto& p : curve) {
        std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g\n", p.iteration, p.loss, p.grad_norm);
        out << buf;
    }
}

} // namespace fuse3d
