// Acceptance gate: one PASS/FAIL line per criterion. Exit status is nonzero if any criterion fails.
// Usage: fuse3d_acceptance [criterion numbers...]   (default: all)

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fuse3d/baselines.hpp"
#include "fuse3d/degrade.hpp"
#include "fuse3d/fusion_eval.hpp"
#include "fuse3d/gradcheck.hpp"
#include "fuse3d/metrics.hpp"
#include "fuse3d/model.hpp"
#include "fuse3d/optim.hpp"
#include "fuse3d/synth.hpp"
#include "fuse3d/train.hpp"

namespace fs = std::filesystem;
using namespace fuse3d;

namespace {

// Pinned tolerances and budgets.
constexpr double kGradcheckTolerance = 1e-4;
constexpr double kGradcheckSeconds = 120.0;
constexpr double kSweepOverlapSlackDb = 0.01;
constexpr double kFusionGainDb = 0.05;
constexpr double kTrainingBudgetSeconds = 1800.0;
constexpr std::size_t kMaxAdamIterations = 20000;
constexpr double kAdamStepLow = 0.0009;
constexpr double kAdamStepHigh = 0.001;
constexpr double kAdamGradFloor = 1e-3;
constexpr double kPsnrUnitDiff = 48.1308;
constexpr double kPsnrUnitTolerance = 1e-4;
constexpr double kSsimSelfTolerance = 1e-12;

// Desk-scale setup.
constexpr std::size_t kImageSize = 64;
constexpr double kSigma = 25.0;
constexpr std::size_t kScale = 2;
constexpr std::uint64_t kDataSeed = 2024;
constexpr std::size_t kTrainImages = 20;
constexpr std::size_t kTestImages = 10;

// Fusion-gain training run (criterion 5): fixed Adam step, as many steps as fit the budget.
constexpr std::size_t kFusionIterations = 11000;
constexpr std::size_t kFusionBatch = 8;
constexpr std::size_t kFusionPatch = 32;
constexpr std::uint64_t kFusionSeed = 1;

// Optimizer comparison (criterion 6).
constexpr std::size_t kCompareIterations = 500;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, a);
    return buf;
}

std::string image_id(const char* prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%02zu", prefix, i);
    return buf;
}

// Truth and the two candidate restorations of one synthetic image.
TrainingImage make_example(Task task, const std::string& id) {
    DegradeConfig config;
    config.task = task;
    config.sigma = kSigma;
    config.scale = kScale;
    config.seed = kDataSeed;
    const ImagePlane clean = synthesize_image(derive_seed(kDataSeed, id), kImageSize, kImageSize);
    const DegradedImage d = degrade(clean, config, id);
    const auto methods = task == Task::Denoise ? denoise_methods() : superres_methods();
    std::vector<ImagePlane> outputs;
    for (const auto& m : methods) outputs.push_back(run_baseline(m, d.degraded, kSigma, kScale));
    return {id, stack_planes(outputs), d.truth};
}

std::vector<TrainingImage> make_set(Task task, const char* prefix, std::size_t count) {
    std::vector<TrainingImage> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(make_example(task, image_id(prefix, i)));
    return out;
}

Outcome criterion_gradcheck() {
    const auto t0 = Clock::now();
    const auto report = run_gradcheck({});
    const double secs = seconds_since(t0);
    double worst = 0.0;
    std::string worst_name;
    for (const auto& e : report) {
        if (e.max_rel_error >= worst) {
            worst = e.max_rel_error;
            worst_name = e.name;
        }
    }
    return {worst <= kGradcheckTolerance && secs < kGradcheckSeconds,
            "max rel error " + fmt("%.3e", worst) + " (" + worst_name + "), " + fmt("%.1f", secs) + " s, " +
                std::to_string(report.size()) + " checks"};
}

Outcome criterion_zero_model() {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<std::size_t> dim(5, 40);
    std::uniform_real_distribution<double> val(0.0, 255.0);
    const ModelParams zero = zero_params();
    std::size_t mismatches = 0, pixels = 0;
    for (int pair = 0; pair < 10; ++pair) {
        const std::size_t h = dim(rng), w = dim(rng);
        std::array<ImagePlane, 2> planes{ImagePlane({h, w}), ImagePlane({h, w})};
        for (auto& p : planes)
            for (auto& v : p.values()) v = val(rng);
        const ImagePlane avg = average_fusion(planes);
        const ImagePlane direct = model_forward(zero, stack_planes(planes));
        const ImagePlane fused = fuse_images(zero, planes[0], planes[1]);
        for (std::size_t i = 0; i < avg.size(); ++i) {
            if (direct[i] != avg[i] || fused[i] != avg[i]) ++mismatches;
        }
        pixels += avg.size();
    }
    return {mismatches == 0, std::to_string(mismatches) + " of " + std::to_string(pixels) + " pixels differ"};
}

std::vector<std::vector<ImagePlane>> dn_candidate_sets(const std::vector<TrainingImage>& set) {
    std::vector<std::vector<ImagePlane>> out;
    for (const auto& im : set) out.push_back({slice(im.methods, 0), slice(im.methods, 1)});
    return out;
}

Outcome criterion_oracle_chain() {
    const auto set = make_set(Task::Denoise, "test", kTestImages);
    const auto cands = dn_candidate_sets(set);
    std::size_t violations = 0, checks = 0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const ImagePlane& g = set[i].truth;
        const double pix = mse(oracle_pixel(cands[i], g), g);
        const double best = std::min(mse(cands[i][0], g), mse(cands[i][1], g));
        for (std::size_t p = 1; p <= kImageSize; ++p) {
            for (Overlap ov : {Overlap::None, Overlap::HalfStride}) {
                const double m = mse(oracle_patch(cands[i], g, {OracleMode::Patch, p, ov}), g);
                if (!(pix <= m)) ++violations;
                if (!(m <= best)) ++violations;
                checks += 2;
            }
        }
    }
    return {violations == 0, std::to_string(violations) + " violations in " + std::to_string(checks) +
                                 " inequalities (p = 1.." + std::to_string(kImageSize) + ", both modes)"};
}

Outcome criterion_sweep() {
    const auto set = make_set(Task::Denoise, "test", kTestImages);
    const auto cands = dn_candidate_sets(set);
    const std::size_t sizes[] = {1, 5, 9, 17};
    std::vector<double> mean(8, 0.0);
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto rows = oracle_sweep(cands[i], set[i].truth, sizes);
        for (std::size_t r = 0; r < rows.size(); ++r) mean[r] += rows[r].psnr / static_cast<double>(set.size());
    }
    bool ok = true;
    double worst_overlap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < 4; ++k) {
        if (k > 0 && (mean[2 * k] > mean[2 * k - 2] || mean[2 * k + 1] > mean[2 * k - 1])) ok = false;
        worst_overlap = std::min(worst_overlap, mean[2 * k + 1] - mean[2 * k]);
    }
    if (worst_overlap < -kSweepOverlapSlackDb) ok = false;
    std::string detail = "non-overlap";
    for (std::size_t k = 0; k < 4; ++k) detail += " " + fmt("%.3f", mean[2 * k]);
    detail += " | overlap";
    for (std::size_t k = 0; k < 4; ++k) detail += " " + fmt("%.3f", mean[2 * k + 1]);
    detail += " | min(overlap - non-overlap) " + fmt("%+.4f", worst_overlap) + " dB";
    return {ok, detail};
}

// SR scores drop a scale-wide border, the same default the eval command uses.
double mean_psnr(const std::vector<ImagePlane>& est, const std::vector<TrainingImage>& set, std::size_t crop) {
    double s = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto [a, b] = eval_border_crop(est[i], set[i].truth, crop);
        s += psnr(a, b);
    }
    return s / static_cast<double>(set.size());
}

Outcome fusion_gain(Task task) {
    const auto t0 = Clock::now();
    const auto train_set = make_set(task, "train", kTrainImages);
    const auto test_set = make_set(task, "test", kTestImages);

    TrainConfig config;
    config.iterations = kFusionIterations;
    config.batch_size = kFusionBatch;
    config.patch = kFusionPatch;
    config.seed = kFusionSeed;
    config.snapshot_interval = 1000;
    const TrainResult result = train(init_params(kFusionSeed), train_set, config);

    std::vector<ImagePlane> a, b, fused;
    for (const auto& im : test_set) {
        a.push_back(slice(im.methods, 0));
        b.push_back(slice(im.methods, 1));
        fused.push_back(fuse_images(result.params, a.back(), b.back()));
    }
    const std::size_t crop = task == Task::SuperResolve ? kScale : 0;
    const double pa = mean_psnr(a, test_set, crop), pb = mean_psnr(b, test_set, crop);
    const double pf = mean_psnr(fused, test_set, crop);
    const double secs = seconds_since(t0);
    const double gain = pf - std::max(pa, pb);
    const auto names = task == Task::Denoise ? denoise_methods() : superres_methods();
    return {gain >= kFusionGainDb && secs <= kTrainingBudgetSeconds && kFusionIterations <= kMaxAdamIterations,
            names[0] + " " + fmt("%.3f", pa) + " dB, " + names[1] + " " + fmt("%.3f", pb) + " dB, fused " +
                fmt("%.3f", pf) + " dB, gain " + fmt("%+.3f", gain) + " dB, " +
                std::to_string(kFusionIterations) + " iterations, crop " + std::to_string(crop) + ", " +
                fmt("%.0f", secs) + " s"};
}

Outcome criterion_fusion_gain() {
    const Outcome dn = fusion_gain(Task::Denoise);
    std::printf("  dn: %s\n", dn.detail.c_str());
    std::fflush(stdout);
    const Outcome sr = fusion_gain(Task::SuperResolve);
    std::printf("  sr: %s\n", sr.detail.c_str());
    return {dn.pass && sr.pass, std::string("dn ") + (dn.pass ? "pass" : "fail") + ", sr " + (sr.pass ? "pass" : "fail")};
}

Outcome criterion_adam_vs_sgd() {
    const auto set = make_set(Task::Denoise, "train", kTrainImages);
    TrainConfig config;
    config.iterations = kCompareIterations;
    config.seed = 3;
    config.snapshot_interval = kCompareIterations;
    const ModelParams init = init_params(3);
    const TrainResult adam = train(init, set, config);
    config.optimizer = OptimizerKind::Sgd;
    const TrainResult sgd = train(init, set, config);
    const double la = adam.curve.back().loss, ls = sgd.curve.back().loss;
    return {adam.curve.back().iteration == kCompareIterations && la <= ls,
            "loss at iteration " + std::to_string(kCompareIterations) + ": adam " + fmt("%.4f", la) + ", sgd " +
                fmt("%.4f", ls) + " (sgd lr " + fmt("%.0e", config.sgd_learning_rate) + ")"};
}

Outcome criterion_adam_first_step() {
    const auto set = make_set(Task::Denoise, "train", kTrainImages);
    std::vector<TrainingImage> scaled = set;
    for (auto& im : scaled) {
        for (auto& v : im.methods.values()) v /= kIntensityScale;
        for (auto& v : im.truth.values()) v /= kIntensityScale;
    }
    const ModelParams init = init_params(4);
    const auto batch = extract_patches(scaled, 32, 16, 5);
    const BatchGradient g = batch_gradient(init, batch, 1);
    std::vector<double> theta = flatten(init);
    const std::vector<double> before = theta;
    AdamState adam;
    adam_step(adam, theta, g.grad);
    std::size_t checked = 0, bad = 0;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (std::abs(g.grad[i]) < kAdamGradFloor) continue;
        const double step = std::abs(theta[i] - before[i]);
        lo = std::min(lo, step);
        hi = std::max(hi, step);
        if (step < kAdamStepLow || step > kAdamStepHigh) ++bad;
        ++checked;
    }
    return {checked > 0 && bad == 0, std::to_string(checked) + " parameters with |g| >= 1e-3, step range [" +
                                         fmt("%.9f", lo) + ", " + fmt("%.9f", hi) + "], " + std::to_string(bad) +
                                         " outside"};
}

Outcome criterion_metrics() {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 255.0);
    ImagePlane a({32, 32});
    for (auto& v : a.values()) v = u(rng);
    ImagePlane b = a;
    for (auto& v : b.values()) v += 1.0;
    const double p = psnr(a, b);
    const double s = ssim(a, a);
    std::uniform_real_distribution<double> m(1e-4, 1e4);
    std::size_t monotone_fail = 0;
    for (int i = 0; i < 100; ++i) {
        double x = m(rng), y = m(rng);
        if (x > y) std::swap(x, y);
        if (x < y && !(psnr_from_mse(x) > psnr_from_mse(y))) ++monotone_fail;
    }
    const bool ok = std::abs(p - kPsnrUnitDiff) <= kPsnrUnitTolerance && std::abs(s - 1.0) <= kSsimSelfTolerance &&
                    monotone_fail == 0;
    return {ok, "psnr(unit diff) " + fmt("%.6f", p) + ", ssim(x,x) " + fmt("%.15f", s) + ", " +
                    std::to_string(monotone_fail) + " monotonicity failures in 100 pairs"};
}

int run_cli(const fs::path& cwd, const std::string& args) {
    const std::string cmd = "cd '" + cwd.string() + "' && '" FUSE3D_CLI "' " + args + " >> cli.log 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> snapshot_tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file() || e.path().filename() == "cli.log") continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        files[fs::relative(e.path(), root).string()] = ss.str();
    }
    return files;
}

Outcome criterion_determinism() {
    const fs::path base = fs::temp_directory_path() / "fuse3d_acceptance_determinism";
    fs::remove_all(base);
    const std::vector<std::string> steps = {
        "synth --out clean --count 6 --seed 11 --size 48",
        "degrade --task dn --sigma 25 --in clean --out dn --seed 5 --threads 2",
        "baseline --method gaussian --in dn --out dn --threads 2",
        "baseline --method median --in dn --out dn --threads 2",
        "train --methods dn/methods/gaussian,dn/methods/median --gt dn/gt --out dn/model.3dcf --iters 5 --batch 4 "
        "--patch 24 --seed 9 --snapshot 1 --threads 2",
        "apply --model dn/model.3dcf --methods dn/methods/gaussian,dn/methods/median --out dn/fused --threads 2",
        "oracle --methods dn/methods/gaussian,dn/methods/median --gt dn/gt --out dn/oracle --mode patch --patch 8 "
        "--overlap half --threads 2",
        "eval --methods dn/methods/gaussian,dn/methods/median,dn/fused --gt dn/gt --out dn/eval.csv --threads 2",
        "sweep --methods dn/methods/gaussian,dn/methods/median --gt dn/gt --out dn/sweep.csv --threads 2",
        "compare --a dn/fused --b dn/methods/gaussian --gt dn/gt --out dn/compare.csv --threads 2",
        "degrade --task sr --scale 2 --in clean --out sr --seed 5 --threads 2",
        "baseline --method bicubic --in sr --out sr --threads 2",
        "baseline --method sharpen --in sr --out sr --threads 2",
        "eval --methods sr/methods/bicubic,sr/methods/sharpen --gt sr/gt --out sr/eval.csv --threads 2",
    };
    std::vector<std::map<std::string, std::string>> trees;
    for (const char* run : {"run1", "run2"}) {
        const fs::path dir = base / run;
        fs::create_directories(dir);
        for (const auto& s : steps) {
            const int code = run_cli(dir, s);
            if (code != 0) return {false, "'" + s + "' exited with " + std::to_string(code)};
        }
        trees.push_back(snapshot_tree(dir));
    }
    std::size_t differ = 0;
    for (const auto& [name, bytes] : trees[0]) {
        auto it = trees[1].find(name);
        if (it == trees[1].end() || it->second != bytes) ++differ;
    }
    if (trees[0].size() != trees[1].size()) ++differ;
    const std::size_t files = trees[0].size();
    fs::remove_all(base);
    return {differ == 0 && files > 0, std::to_string(files) + " files compared across " + std::to_string(steps.size()) +
                                          " stages, " + std::to_string(differ) + " differ"};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"gradient oracle suite", criterion_gradcheck},
        {"zero-parameter model equals average fusion", criterion_zero_model},
        {"oracle bound chain", criterion_oracle_chain},
        {"oracle sweep trends", criterion_sweep},
        {"fusion gain over both candidates (dn, sr)", criterion_fusion_gain},
        {"adam reaches lower loss than sgd", criterion_adam_vs_sgd},
        {"adam first-step magnitude", criterion_adam_first_step},
        {"metric anchors", criterion_metrics},
        {"pipeline determinism", criterion_determinism},
    };
    std::set<std::size_t> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::strtoul(argv[i], nullptr, 10));

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!wanted.empty() && !wanted.count(i + 1)) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %zu [%s] %s: %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                    o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
