#include "fuse3d/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <span>

#include "fuse3d/layers.hpp"
#include "fuse3d/model.hpp"

namespace fuse3d {

namespace {

class Checker {
public:
    Checker(const GradcheckOptions& opt, std::mt19937_64& rng) : opt_(opt), rng_(rng) {}

    // Compares analytic[i] with the central difference of `objective` in values[i] for the
    // chosen indices. `values` is perturbed in place and restored.
    void check(GradcheckEntry& entry, std::span<double> values, std::span<const double> analytic,
               const std::function<double()>& objective, bool sample) {
        std::vector<std::size_t> idx(values.size());
        std::iota(idx.begin(), idx.end(), 0);
        if (sample && idx.size() > opt_.samples_per_tensor) {
            std::shuffle(idx.begin(), idx.end(), rng_);
            idx.resize(opt_.samples_per_tensor);
        }
        for (std::size_t i : idx) {
            const double saved = values[i];
            values[i] = saved + opt_.step;
            const double up = objective();
            values[i] = saved - opt_.step;
            const double down = objective();
            values[i] = saved;
            const double numeric = (up - down) / (2.0 * opt_.step);
            entry.max_rel_error = std::max(entry.max_rel_error, relative_error(analytic[i], numeric));
            ++entry.checked;
        }
    }

private:
    const GradcheckOptions& opt_;
    std::mt19937_64& rng_;
};

template <std::size_t R>
Tensor<R> random_tensor(const typename Tensor<R>::Dims& dims, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    Tensor<R> t(dims);
    std::uniform_real_distribution<double> u(lo, hi);
    for (auto& v : t.values()) v = u(rng);
    return t;
}

template <std::size_t R>
double dot(const Tensor<R>& a, const Tensor<R>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void perturb_params(ModelParams& p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    for (auto& br : p.branches) {
        for (auto& c : br.convs) {
            for (auto& b : c.biases) b = u(rng);
        }
        for (auto& s : br.sums) s = {1.0 + u(rng), u(rng)};
        br.reconstruction = {1.0 + u(rng), u(rng)};
    }
}

} // namespace

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / denom;
}

std::vector<GradcheckEntry> run_gradcheck(const GradcheckOptions& options) {
    std::mt19937_64 rng(options.seed);
    Checker checker(options, rng);
    std::vector<GradcheckEntry> report;

    {
        // conv3d: 2x6x6 input, 3 filters of 2x3x3, pad (0,1,1).
        Volume input = random_tensor<3>({2, 6, 6}, rng);
        FilterBank bank(3, 2, 3, 3);
        bank.weights = random_tensor<4>(bank.weights.dims(), rng);
        for (auto& b : bank.biases) b = std::uniform_real_distribution<double>(-1, 1)(rng);
        const Pad3 pad{0, 1, 1};
        const FeatureStack g = random_tensor<4>(conv3d_output_dims(input.dims(), bank, pad), rng);
        auto objective = [&] { return dot(g, conv3d_forward(input, bank, pad)); };
        const Conv3dGrad grad = conv3d_backward(input, bank, pad, g);

        GradcheckEntry e_in{"conv3d.input"}, e_w{"conv3d.weights"}, e_b{"conv3d.biases"};
        checker.check(e_in, input.values(), grad.input.values(), objective, false);
        checker.check(e_w, bank.weights.values(), grad.weights.values(), objective, false);
        checker.check(e_b, bank.biases, grad.biases, objective, false);
        report.insert(report.end(), {e_in, e_w, e_b});
    }
    {
        Volume x = random_tensor<3>({2, 5, 5}, rng, -3.0, 3.0);
        const Volume g = random_tensor<3>(x.dims(), rng);
        auto objective = [&] { return dot(g, tanh_forward(x)); };
        const Volume grad = tanh_backward(tanh_forward(x), g);
        GradcheckEntry e{"tanh.input"};
        checker.check(e, x.values(), grad.values(), objective, false);
        report.push_back(e);
    }
    {
        FeatureStack x = random_tensor<4>({4, 2, 5, 5}, rng);
        double wb[2] = {0.7, -0.2};
        const Volume g = random_tensor<3>({2, 5, 5}, rng);
        auto objective = [&] { return dot(g, filter_collapse(x, wb[0], wb[1])); };
        const CollapseGrad grad = filter_collapse_backward(x, wb[0], filter_collapse(x, wb[0], wb[1]), g);
        GradcheckEntry e_in{"filter_collapse.input"}, e_p{"filter_collapse.weight_bias"};
        checker.check(e_in, x.values(), grad.input.values(), objective, false);
        const double analytic[2] = {grad.weight, grad.bias};
        checker.check(e_p, wb, analytic, objective, false);
        report.insert(report.end(), {e_in, e_p});
    }
    {
        FeatureStack x = random_tensor<4>({4, 3, 5, 5}, rng);
        double wb[2] = {0.6, 0.3};
        const ImagePlane g = random_tensor<2>({5, 5}, rng);
        auto objective = [&] { return dot(g, global_collapse(x, wb[0], wb[1])); };
        const CollapseGrad grad = global_collapse_backward(x, wb[0], g);
        GradcheckEntry e_in{"global_collapse.input"}, e_p{"global_collapse.weight_bias"};
        checker.check(e_in, x.values(), grad.input.values(), objective, false);
        const double analytic[2] = {grad.weight, grad.bias};
        checker.check(e_p, wb, analytic, objective, false);
        report.insert(report.end(), {e_in, e_p});
    }

    ModelParams params = init_params(options.seed);
    perturb_params(params, rng);

    // Single branches, one of each kind, on 16x16 inputs.
    for (std::size_t b : {std::size_t{1}, std::size_t{2}}) {
        const BranchKind kind = params.branches[b].kind;
        const Volume input = random_tensor<3>({branch_input_depth(kind), 16, 16}, rng, 0.0, 1.0);
        const ImagePlane g = random_tensor<2>({16, 16}, rng);
        BranchTrace trace;
        branch_forward(params.branches[b], input, trace);
        ParamGradients grads = params;
        grads.branches[b] = branch_backward(params.branches[b], trace, g);

        auto objective = [&] { return dot(g, branch_forward(params.branches[b], input)); };
        auto pt = named_tensors(params);
        auto gt = named_tensors(grads);
        GradcheckEntry e{std::string("branch.") + kBranchNames[b]};
        const std::string prefix = std::string(kBranchNames[b]) + ".";
        for (std::size_t t = 0; t < pt.size(); ++t) {
            if (pt[t].name.rfind(prefix, 0) == 0) checker.check(e, pt[t].values, gt[t].values, objective, true);
        }
        report.push_back(e);
    }

    // Full model on two random 2x12x12 stacks.
    for (int sample = 0; sample < 2; ++sample) {
        const Volume methods = random_tensor<3>({2, 12, 12}, rng, 0.0, 1.0);
        const ImagePlane g = random_tensor<2>({12, 12}, rng);
        ForwardTrace trace;
        model_forward(params, methods, trace);
        ParamGradients grads = model_backward(params, methods, g, trace);
        auto objective = [&] { return dot(g, model_forward(params, methods)); };
        auto pt = named_tensors(params);
        auto gt = named_tensors(grads);
        for (std::size_t b = 0; b < 4; ++b) {
            GradcheckEntry e{"model." + std::string(kBranchNames[b]) + ".sample" + std::to_string(sample)};
            const std::string prefix = std::string(kBranchNames[b]) + ".";
            for (std::size_t t = 0; t < pt.size(); ++t) {
                if (pt[t].name.rfind(prefix, 0) != 0) continue;
                checker.check(e, pt[t].values, gt[t].values, objective, true);
            }
            report.push_back(e);
        }
    }
    return report;
}

} // namespace fuse3d
