#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fuse3d/degrade.hpp"
#include "fuse3d/model.hpp"

namespace fuse3d {

enum class OptimizerKind { Adam, Sgd };

OptimizerKind parse_optimizer(std::string_view name);

struct TrainConfig {
    OptimizerKind optimizer = OptimizerKind::Adam;
    std::size_t iterations = 20000;
    std::size_t batch_size = 16;
    std::size_t patch = 32;
    std::uint64_t seed = 0;
    std::size_t snapshot_interval = 100;
    std::size_t threads = 1;
    double adam_learning_rate = 0.001;
    double sgd_momentum = 0.9;
    double sgd_learning_rate = 3e-8;

    void validate() const;
};

struct LossPoint {
    std::size_t iteration = 0;   // 1-based optimizer step
    double loss = 0.0;           // batch loss before the step, unit intensity scale
    double grad_norm = 0.0;
};

struct TrainResult {
    ModelParams params;
    std::vector<LossPoint> curve;
};

using SnapshotCallback = std::function<void(const LossPoint&)>;

/// Minibatch minimization of the summed squared error between fused patches and ground truth.
/// `data` is on the 0..255 scale; the network sees it divided by 255. Each step draws
/// `batch_size` windows uniformly with replacement from a generator seeded by `config.seed`.
/// The curve holds steps 1, 1 + interval, ... and the final step.
TrainResult train(const ModelParams& init, std::span<const TrainingImage> data, const TrainConfig& config,
                  const SnapshotCallback& on_snapshot = {});

/// Loss and gradient of one batch, reduced in batch order.
struct BatchGradient {
    double loss = 0.0;
    std::vector<double> grad;
};
BatchGradient batch_gradient(const ModelParams& params, std::span<const PatchPair> batch, std::size_t threads);

/// "iteration,loss,grad_norm" rows preceded by `provenance` comment lines.
void write_loss_csv(std::ostream& out, std::span<const LossPoint> curve, std::span<const std::string> provenance = {});

} // namespace fuse3d
