#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fuse3d/tensor.hpp"

namespace fuse3d {

/// Fixed architecture constants.
inline constexpr std::size_t kConvFilters = 32;
inline constexpr std::size_t kKernelDepth = 3;
inline constexpr std::size_t kKernelSize = 5;
inline constexpr double kInitStddev = 0.05;
/// Intensities are divided by this before entering the network.
inline constexpr double kIntensityScale = 255.0;
/// Residue weights for branches a1, a2, b1, b2.
inline constexpr std::array<double, 4> kBranchCoefficients{1.0, 0.1, 1.0, 0.1};
inline constexpr std::array<const char*, 4> kBranchNames{"a1", "a2", "b1", "b2"};

enum class BranchKind {
    MethodStack,    // input is the stacked method outputs (depth 2)
    GradientStack,  // input is the average image and its gradients (depth 5)
};

std::size_t branch_input_depth(BranchKind kind);

struct ScalarLayer {
    double weight = 1.0;
    double bias = 0.0;
    friend bool operator==(const ScalarLayer&, const ScalarLayer&) = default;
};

/// One branch: `stages` x (3D conv + tanh, filter-sum + tanh), then 3D conv + tanh and a
/// linear collapse to a single residue plane. With one stage that is the 4-layer network.
struct BranchParams {
    BranchKind kind = BranchKind::MethodStack;
    int input_sign = 1;
    std::vector<FilterBank> convs;   // stages + 1 entries
    std::vector<ScalarLayer> sums;   // stages entries
    ScalarLayer reconstruction;

    std::size_t stages() const noexcept { return sums.size(); }
    friend bool operator==(const BranchParams&, const BranchParams&) = default;
};

/// Zero padding of conv layer `layer` (0-based) in a branch with `conv_count` conv layers.
Pad3 branch_pad(BranchKind kind, std::size_t layer, std::size_t conv_count);

/// Branches in order a1, a2, b1, b2. The combination coefficients are fixed constants.
struct ModelParams {
    std::array<BranchParams, 4> branches;

    std::size_t stages() const noexcept { return branches[0].stages(); }
    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Same layout as ModelParams; holds dL/dtheta. input_sign carries no meaning here.
using ParamGradients = ModelParams;

/// Conv weights ~ N(0, 0.05^2) (rounded to float32 so checkpoints reproduce them exactly),
/// sum/reconstruction weights 1, biases 0, input_sign -1 on a2 and b2.
ModelParams init_params(std::uint64_t seed, std::size_t stages = 1);

/// Every weight and bias zero. The model then reduces to the average of its inputs.
ModelParams zero_params(std::size_t stages = 1);

/// Same structure as `like`, all values zero.
ParamGradients zero_gradients(const ModelParams& like);

struct BranchTrace {
    Volume input;                     // input_sign * raw input
    std::vector<FeatureStack> convs;  // tanh(conv) outputs, one per conv layer
    std::vector<Volume> sums;         // filter-collapse outputs, one per stage
};

struct ForwardTrace {
    std::array<BranchTrace, 4> branches;
    std::uint64_t fingerprint = 0;
};

/// Residue plane of one branch. `input` depth must match the branch kind.
ImagePlane branch_forward(const BranchParams& params, const Volume& input, BranchTrace& trace);
ImagePlane branch_forward(const BranchParams& params, const Volume& input);

/// Gradients of sum(grad_residue * residue) for one branch.
BranchParams branch_backward(const BranchParams& params, const BranchTrace& trace, const ImagePlane& grad_residue);

/// Sum of coefficient-weighted branch residues for a two-method stack.
ImagePlane model_residue(const ModelParams& params, const Volume& methods, ForwardTrace* trace = nullptr);

/// F = (I1 + I2)/2 + R_a1 + 0.1 R_a2 + R_b1 + 0.1 R_b2 on whatever intensity scale `methods` uses.
ImagePlane model_forward(const ModelParams& params, const Volume& methods);
ImagePlane model_forward(const ModelParams& params, const Volume& methods, ForwardTrace& trace);

/// Exact gradients of sum(grad_out * F). Throws ConsistencyError when `trace` was not produced
/// by model_forward on the same params and methods.
ParamGradients model_backward(const ModelParams& params, const Volume& methods, const ImagePlane& grad_out,
                              const ForwardTrace& trace);

/// Fuses two method outputs given on the 0..255 scale: the average is taken in intensity units and
/// the residue is computed on the unit scale the network was trained on.
ImagePlane fuse_images(const ModelParams& params, const ImagePlane& first, const ImagePlane& second);

// Flat views used by the optimizers. Order: branches a1..b2, per branch conv w/b, sum w/b, ...
std::size_t parameter_count(const ModelParams& params);
std::vector<double> flatten(const ModelParams& params);
void unflatten(std::span<const double> values, ModelParams& params);

/// Checkpoint tensor names ("a1.conv1.w", "a1.sum2.b", ...) paired with mutable views.
struct NamedTensor {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::span<double> values;
};
std::vector<NamedTensor> named_tensors(ModelParams& params);

/// Little-endian "3DCF" checkpoint, float32 values.
std::string serialize_params(const ModelParams& params);
ModelParams deserialize_params(std::string_view bytes);
void save_params(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_params(const std::filesystem::path& path);

inline constexpr std::uint32_t kCheckpointVersion = 1;

} // namespace fuse3d
