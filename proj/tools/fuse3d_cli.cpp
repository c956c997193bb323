// fuse3d: batch front-end for degradation, baselines, 3D convolutional fusion and evaluation.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fuse3d/baselines.hpp"
#include "fuse3d/dataset.hpp"
#include "fuse3d/degrade.hpp"
#include "fuse3d/errors.hpp"
#include "fuse3d/fusion_eval.hpp"
#include "fuse3d/gradcheck.hpp"
#include "fuse3d/image_io.hpp"
#include "fuse3d/metrics.hpp"
#include "fuse3d/model.hpp"
#include "fuse3d/parallel.hpp"
#include "fuse3d/synth.hpp"
#include "fuse3d/train.hpp"

namespace fs = std::filesystem;
using namespace fuse3d;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Common {
    std::size_t threads = 1;
    std::string format = "pfm";
    std::vector<std::string> provenance;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// key=value lines turned into "--key value" arguments. Blank lines and '#' comments are skipped.
std::vector<std::string> read_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::vector<std::string> args;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        args.push_back("--" + trim(line.substr(0, eq)));
        args.push_back(trim(line.substr(eq + 1)));
    }
    return args;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void write_image(const ImagePlane& img, const fs::path& dir, const std::string& id, const Common& common) {
    save_image(img, dir / (id + "." + common.format));
}

void open_csv(std::ofstream& out, const fs::path& path, const Common& common) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    out.open(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    for (const auto& line : common.provenance) out << "# " << line << "\n";
}

// Degraded images of a run directory, or the images of a plain directory.
fs::path degraded_dir(const fs::path& in) {
    return fs::is_directory(in / "degraded") ? in / "degraded" : in;
}

std::vector<fs::path> method_dirs(const std::string& list) {
    std::vector<fs::path> dirs;
    for (const auto& s : split_list(list)) dirs.emplace_back(s);
    return dirs;
}

void require_two(const std::vector<fs::path>& dirs) {
    if (dirs.size() != 2) {
        throw UsageError("exactly two fused methods supported, got " + std::to_string(dirs.size()));
    }
}

struct Candidates {
    std::string id;
    std::vector<ImagePlane> outputs;
    ImagePlane truth;
};

std::vector<Candidates> load_candidates(const std::vector<fs::path>& dirs, const fs::path& gt_dir) {
    std::vector<Candidates> out;
    for (const auto& t : load_training_set(dirs, gt_dir)) {
        Candidates c{t.id, {}, t.truth};
        for (std::size_t k = 0; k < t.methods.dim(0); ++k) c.outputs.push_back(slice(t.methods, k));
        out.push_back(std::move(c));
    }
    return out;
}

// ---------------------------------------------------------------------------------------------

struct SynthArgs {
    std::string out;
    std::size_t count = 10;
    std::uint64_t seed = 0;
    std::size_t size = 64;
};

int run_synth(const SynthArgs& a, const Common& common) {
    fs::create_directories(a.out);
    for (std::size_t i = 0; i < a.count; ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "img%03zu", i);
        const ImagePlane img = synthesize_image(derive_seed(a.seed, id), a.size, a.size);
        // Synthetic images are integer valued, so PGM is lossless.
        save_image(img, fs::path(a.out) / (std::string(id) + ".pgm"));
    }
    (void)common;
    return 0;
}

struct DegradeArgs {
    std::string task = "dn";
    double sigma = 25.0;
    std::size_t scale = 2;
    std::string in;
    std::string out;
    std::uint64_t seed = 0;
    bool clip = false;
};

int run_degrade(const DegradeArgs& a, const Common& common) {
    DegradeConfig config;
    config.task = parse_task(a.task);
    config.sigma = a.sigma;
    config.scale = a.scale;
    config.seed = a.seed;
    config.clip = a.clip;
    config.validate();

    const fs::path root(a.out);
    fs::create_directories(root / "gt");
    fs::create_directories(root / "degraded");
    const auto inputs = list_images(a.in);
    if (inputs.empty()) throw IoError("no images in " + a.in);

    std::vector<DegradedImage> results(inputs.size());
    parallel_for(inputs.size(), common.threads, [&](std::size_t i) {
        results[i] = degrade(load_image(inputs[i]), config, inputs[i].stem().string());
    });

    Manifest manifest{config, {}};
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const std::string id = inputs[i].stem().string();
        write_image(results[i].truth, root / "gt", id, common);
        write_image(results[i].degraded, root / "degraded", id, common);
        manifest.entries.push_back({id, "gt/" + id + "." + common.format, "degraded/" + id + "." + common.format});
    }
    write_manifest(root, manifest, common.provenance);
    return 0;
}

struct BaselineArgs {
    std::string method;
    std::string in;
    std::string out;
    double sigma = -1.0;   // negative: take it from the run manifest, else 25
    long scale = -1;
};

int run_baseline_cmd(BaselineArgs a, const Common& common) {
    const fs::path in(a.in);
    if (fs::is_regular_file(in / "manifest.csv")) {
        const Manifest m = read_manifest(in);
        if (a.sigma < 0.0) a.sigma = m.config.sigma;
        if (a.scale < 0) a.scale = static_cast<long>(m.config.scale);
    }
    if (a.sigma < 0.0) a.sigma = 25.0;
    if (a.scale < 0) a.scale = 2;
    if (a.sigma <= 0.0) throw UsageError("sigma must be positive");
    if (a.scale < 2) throw UsageError("scale must be an integer >= 2");
    const auto scale = static_cast<std::size_t>(a.scale);

    const auto inputs = list_images(degraded_dir(in));
    const fs::path out_dir = fs::path(a.out) / "methods" / a.method;
    std::vector<ImagePlane> outputs(inputs.size());
    // Resolve the method name before touching the output directory.
    (void)run_baseline(a.method, ImagePlane({8, 8}, 0.0), a.sigma, scale);
    fs::create_directories(out_dir);
    parallel_for(inputs.size(), common.threads, [&](std::size_t i) {
        outputs[i] = run_baseline(a.method, load_image(inputs[i]), a.sigma, scale);
    });
    for (std::size_t i = 0; i < inputs.size(); ++i) write_image(outputs[i], out_dir, inputs[i].stem().string(), common);
    return 0;
}

struct TrainArgs {
    std::string methods;
    std::string gt;
    std::string out;
    std::string loss;
    std::size_t iters = 20000;
    std::size_t patch = 32;
    std::size_t batch = 16;
    std::uint64_t seed = 0;
    std::string optimizer = "adam";
    std::size_t snapshot = 100;
    std::size_t stages = 1;
    double learning_rate = 0.0;
};

int run_train(const TrainArgs& a, const Common& common) {
    const auto dirs = method_dirs(a.methods);
    require_two(dirs);
    TrainConfig config;
    config.optimizer = parse_optimizer(a.optimizer);
    config.iterations = a.iters;
    config.patch = a.patch;
    config.batch_size = a.batch;
    config.seed = a.seed;
    config.snapshot_interval = a.snapshot;
    config.threads = common.threads;
    if (a.learning_rate > 0.0) {
        config.adam_learning_rate = a.learning_rate;
        config.sgd_learning_rate = a.learning_rate;
    }
    config.validate();
    if (a.stages == 0) throw UsageError("stages must be positive");

    const auto data = load_training_set(dirs, a.gt);
    const ModelParams init = init_params(a.seed, a.stages);
    const TrainResult result = train(init, data, config, [](const LossPoint& p) {
        std::fprintf(stderr, "iter %zu loss %.6g grad_norm %.6g\n", p.iteration, p.loss, p.grad_norm);
    });

    save_params(result.params, a.out);
    const fs::path loss_path = a.loss.empty() ? fs::path(a.out + ".loss.csv") : fs::path(a.loss);
    if (loss_path.has_parent_path()) fs::create_directories(loss_path.parent_path());
    std::ofstream csv(loss_path, std::ios::binary);
    if (!csv) throw IoError("cannot open " + loss_path.string() + " for writing");
    write_loss_csv(csv, result.curve, common.provenance);
    if (!csv) throw IoError("write failed: " + loss_path.string());
    return 0;
}

struct ApplyArgs {
    std::string model;
    std::string methods;
    std::string out;
};

int run_apply(const ApplyArgs& a, const Common& common) {
    const auto dirs = method_dirs(a.methods);
    require_two(dirs);
    const ModelParams params = load_params(a.model);
    const auto first = list_images(dirs[0]);
    if (first.empty()) throw IoError("no images in " + dirs[0].string());
    std::vector<ImagePlane> fused(first.size());
    parallel_for(first.size(), common.threads, [&](std::size_t i) {
        const std::string id = first[i].stem().string();
        const ImagePlane a0 = load_image(first[i]);
        const ImagePlane a1 = load_image(find_image(dirs[1], id));
        if (!a0.same_shape(a1)) throw ShapeError("image '" + id + "': method outputs differ in size");
        fused[i] = fuse_images(params, a0, a1);
    });
    fs::create_directories(a.out);
    for (std::size_t i = 0; i < first.size(); ++i) write_image(fused[i], a.out, first[i].stem().string(), common);
    return 0;
}

OracleConfig parse_oracle(const std::string& mode, std::size_t patch, const std::string& overlap) {
    OracleConfig c;
    if (mode == "pixel") {
        c.mode = OracleMode::Pixel;
    } else if (mode == "patch") {
        c.mode = OracleMode::Patch;
    } else {
        throw UsageError("unknown oracle mode '" + mode + "' (expected pixel or patch)");
    }
    if (overlap == "none") {
        c.overlap = Overlap::None;
    } else if (overlap == "half") {
        c.overlap = Overlap::HalfStride;
    } else {
        throw UsageError("unknown overlap '" + overlap + "' (expected none or half)");
    }
    if (patch == 0) throw UsageError("patch size must be positive");
    c.patch = patch;
    return c;
}

struct OracleArgs {
    std::string methods;
    std::string gt;
    std::string out;
    std::string mode = "patch";
    std::size_t patch = 8;
    std::string overlap = "none";
};

int run_oracle(const OracleArgs& a, const Common& common) {
    const OracleConfig config = parse_oracle(a.mode, a.patch, a.overlap);
    const auto set = load_candidates(method_dirs(a.methods), a.gt);
    std::vector<ImagePlane> fused(set.size());
    parallel_for(set.size(), common.threads, [&](std::size_t i) {
        fused[i] = config.mode == OracleMode::Pixel ? oracle_pixel(set[i].outputs, set[i].truth)
                                                    : oracle_patch(set[i].outputs, set[i].truth, config);
    });
    fs::create_directories(a.out);
    std::ofstream csv;
    open_csv(csv, fs::path(a.out) / "oracle.csv", common);
    csv << "image,config,psnr,ssim\n";
    for (std::size_t i = 0; i < set.size(); ++i) {
        write_image(fused[i], a.out, set[i].id, common);
        csv << set[i].id << "," << describe(config) << "," << format_metric(psnr(fused[i], set[i].truth)) << ","
            << format_metric(ssim(fused[i], set[i].truth)) << "\n";
    }
    return 0;
}

struct EvalArgs {
    std::string methods;
    std::string gt;
    std::string out;
    long crop = -1;   // negative: the SR scale from the run manifest next to --gt, else 0
};

std::size_t default_crop(const fs::path& gt_dir) {
    fs::path gt = fs::absolute(gt_dir).lexically_normal();
    if (gt.filename().empty()) gt = gt.parent_path();
    const fs::path run = gt.parent_path();
    if (!fs::is_regular_file(run / "manifest.csv")) return 0;
    const Manifest m = read_manifest(run);
    return m.config.task == Task::SuperResolve ? m.config.scale : 0;
}

int run_eval(const EvalArgs& a, Common common) {
    const std::size_t crop = a.crop < 0 ? default_crop(a.gt) : static_cast<std::size_t>(a.crop);
    common.provenance.push_back("crop: " + std::to_string(crop));
    const auto dirs = method_dirs(a.methods);
    if (dirs.empty()) throw UsageError("--methods needs at least one directory");
    const auto truths = list_images(a.gt);
    if (truths.empty()) throw IoError("no images in " + a.gt);

    struct Row {
        std::string image, method;
        double psnr = 0.0, ssim = 0.0;
    };
    std::vector<Row> rows(truths.size() * dirs.size());
    parallel_for(rows.size(), common.threads, [&](std::size_t r) {
        const std::size_t i = r / dirs.size();
        const std::size_t m = r % dirs.size();
        const std::string id = truths[i].stem().string();
        const ImagePlane truth = load_image(truths[i]);
        const ImagePlane est = load_image(find_image(dirs[m], id));
        if (!est.same_shape(truth)) {
            throw ShapeError("image '" + id + "' in " + dirs[m].string() + ": " + shape_string(est.dims()) +
                             " does not match ground truth " + shape_string(truth.dims()));
        }
        const auto [x, y] = eval_border_crop(est, truth, crop);
        const std::string name = dirs[m].filename().empty() ? dirs[m].parent_path().filename().string()
                                                            : dirs[m].filename().string();
        rows[r] = {id, name, psnr(x, y), x.dim(0) >= 11 && x.dim(1) >= 11 ? ssim(x, y) : std::nan("")};
    });

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!a.out.empty()) {
        open_csv(file, a.out, common);
        out = &file;
    } else {
        for (const auto& line : common.provenance) std::cout << "# " << line << "\n";
    }
    *out << "image,method,psnr,ssim\n";
    for (const auto& r : rows) {
        *out << r.image << "," << r.method << "," << format_metric(r.psnr) << "," << format_metric(r.ssim) << "\n";
    }
    return 0;
}

struct SweepArgs {
    std::string methods;
    std::string gt;
    std::string out;
    std::string sizes = "1,5,9,17";
};

int run_sweep(const SweepArgs& a, const Common& common) {
    std::vector<std::size_t> sizes;
    for (const auto& s : split_list(a.sizes)) {
        std::size_t pos = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(s, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != s.size() || v == 0) throw UsageError("bad patch size '" + s + "'");
        sizes.push_back(v);
    }
    if (sizes.empty()) throw UsageError("--sizes is empty");
    const auto set = load_candidates(method_dirs(a.methods), a.gt);

    std::vector<std::vector<SweepRow>> per_image(set.size());
    parallel_for(set.size(), common.threads,
                 [&](std::size_t i) { per_image[i] = oracle_sweep(set[i].outputs, set[i].truth, sizes); });

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!a.out.empty()) {
        open_csv(file, a.out, common);
        out = &file;
    } else {
        for (const auto& line : common.provenance) std::cout << "# " << line << "\n";
    }
    // One row per (size, mode), averaged over the images. Infinite PSNRs (a candidate equal to
    // the truth) are left out of the mean and the count column says how many entered it.
    *out << "image,config,psnr,ssim,count\n";
    for (std::size_t r = 0; r < per_image[0].size(); ++r) {
        double p = 0.0, q = 0.0;
        std::size_t n = 0;
        for (const auto& rows : per_image) {
            if (!std::isfinite(rows[r].psnr)) continue;
            p += rows[r].psnr;
            q += rows[r].ssim;
            ++n;
        }
        const auto& row = per_image[0][r];
        const OracleConfig c{OracleMode::Patch, row.patch, row.overlap};
        const double inf = std::numeric_limits<double>::infinity();
        *out << "all," << describe(c) << "," << format_metric(n ? p / n : inf) << ","
             << format_metric(n ? q / n : 1.0) << "," << n << "\n";
    }
    return 0;
}

struct CompareArgs {
    std::string a;
    std::string b;
    std::string gt;
    std::string out;
};

int run_compare(const CompareArgs& a, const Common& common) {
    const auto truths = list_images(a.gt);
    std::vector<ImageScore> sa(truths.size()), sb(truths.size());
    parallel_for(truths.size(), common.threads, [&](std::size_t i) {
        const std::string id = truths[i].stem().string();
        const ImagePlane truth = load_image(truths[i]);
        sa[i] = {id, psnr(load_image(find_image(a.a, id)), truth)};
        sb[i] = {id, psnr(load_image(find_image(a.b, id)), truth)};
    });
    const Comparison cmp = compare_methods(sa, sb);

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!a.out.empty()) {
        open_csv(file, a.out, common);
        out = &file;
    } else {
        for (const auto& line : common.provenance) std::cout << "# " << line << "\n";
    }
    *out << "image,psnr_a,psnr_b,gain\n";
    for (const auto& r : cmp.rows) {
        *out << r.image << "," << format_metric(r.psnr_a) << "," << format_metric(r.psnr_b) << ","
             << format_metric(r.gain) << "\n";
    }
    std::fprintf(stderr, "wins a=%zu b=%zu ties=%zu\n", cmp.wins_a, cmp.wins_b, cmp.ties);
    return 0;
}

struct GradcheckArgs {
    std::uint64_t seed = 1;
    double step = 1e-4;
    std::size_t samples = 24;
    double tolerance = 1e-4;
};

int run_gradcheck_cmd(const GradcheckArgs& a) {
    GradcheckOptions opt;
    opt.seed = a.seed;
    opt.step = a.step;
    opt.samples_per_tensor = a.samples;
    const auto report = run_gradcheck(opt);
    double worst = 0.0;
    std::printf("%-32s %8s %12s\n", "check", "entries", "max_rel_err");
    for (const auto& e : report) {
        std::printf("%-32s %8zu %12.3e\n", e.name.c_str(), e.checked, e.max_rel_error);
        worst = std::max(worst, e.max_rel_error);
    }
    const bool ok = worst <= a.tolerance;
    std::printf("max relative error %.3e (tolerance %.1e): %s\n", worst, a.tolerance, ok ? "ok" : "FAILED");
    return ok ? 0 : kExitRuntime;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fuse two restored images with a residual 3D conv network"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    app.name("fuse3d");
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();

    Common common;
    std::string config_file;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_file, "key=value defaults; flags override");
        sub->add_option("--threads", common.threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--format", common.format, "image output format")->check(CLI::IsMember({"pfm", "pgm"}));
    };

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "write synthetic ground-truth images");
    c_synth->add_option("--out", synth.out, "output directory")->required();
    c_synth->add_option("--count", synth.count, "number of images")->check(CLI::PositiveNumber);
    c_synth->add_option("--seed", synth.seed, "generator seed");
    c_synth->add_option("--size", synth.size, "image side in pixels")->check(CLI::Range(8, 4096));
    add_common(c_synth);

    DegradeArgs deg;
    auto* c_deg = app.add_subcommand("degrade", "add noise (dn) or downscale (sr)");
    c_deg->add_option("--task", deg.task, "dn or sr")->check(CLI::IsMember({"dn", "sr"}));
    c_deg->add_option("--sigma", deg.sigma, "noise standard deviation (dn)");
    c_deg->add_option("--scale", deg.scale, "downscaling factor (sr)");
    c_deg->add_option("--in", deg.in, "ground-truth image directory")->required();
    c_deg->add_option("--out", deg.out, "dataset root (gt/, degraded/, manifest.csv)")->required();
    c_deg->add_option("--seed", deg.seed, "noise seed");
    c_deg->add_flag("--clip", deg.clip, "clamp noisy values to [0,255]");
    add_common(c_deg);

    BaselineArgs base;
    auto* c_base = app.add_subcommand("baseline", "run a baseline restorer over a degraded set");
    c_base->add_option("--method", base.method, "gaussian, median, bicubic or sharpen")->required();
    c_base->add_option("--in", base.in, "dataset root written by degrade")->required();
    c_base->add_option("--out", base.out, "root receiving methods/<name>/")->required();
    c_base->add_option("--sigma", base.sigma, "noise level (negative: from manifest)");
    c_base->add_option("--scale", base.scale, "upscaling factor (negative: from manifest)");
    add_common(c_base);

    TrainArgs tr;
    auto* c_train = app.add_subcommand("train", "train the fusion network");
    c_train->add_option("--methods", tr.methods, "two method directories, comma separated")->required();
    c_train->add_option("--gt", tr.gt, "ground-truth directory")->required();
    c_train->add_option("--out", tr.out, "checkpoint path")->required();
    c_train->add_option("--loss", tr.loss, "loss CSV (default <out>.loss.csv)");
    c_train->add_option("--iters", tr.iters, "optimizer steps");
    c_train->add_option("--patch", tr.patch, "training window side");
    c_train->add_option("--batch", tr.batch, "windows per step");
    c_train->add_option("--seed", tr.seed, "init and sampling seed");
    c_train->add_option("--optimizer", tr.optimizer, "adam or sgd")->check(CLI::IsMember({"adam", "sgd"}));
    c_train->add_option("--snapshot", tr.snapshot, "loss logging interval");
    c_train->add_option("--stages", tr.stages, "conv + filter-sum stages per branch");
    c_train->add_option("--learning-rate", tr.learning_rate, "step size (0: optimizer default)");
    add_common(c_train);

    ApplyArgs ap;
    auto* c_apply = app.add_subcommand("apply", "fuse two method outputs with a trained model");
    c_apply->add_option("--model", ap.model, "checkpoint path")->required();
    c_apply->add_option("--methods", ap.methods, "two method directories, comma separated")->required();
    c_apply->add_option("--out", ap.out, "output directory")->required();
    add_common(c_apply);

    OracleArgs orc;
    auto* c_oracle = app.add_subcommand("oracle", "ground-truth oracle fusion");
    c_oracle->add_option("--methods", orc.methods, "method directories, comma separated")->required();
    c_oracle->add_option("--gt", orc.gt, "ground-truth directory")->required();
    c_oracle->add_option("--out", orc.out, "output directory")->required();
    c_oracle->add_option("--mode", orc.mode, "pixel or patch");
    c_oracle->add_option("--patch", orc.patch, "tile side");
    c_oracle->add_option("--overlap", orc.overlap, "none or half");
    add_common(c_oracle);

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "PSNR/SSIM of method directories against ground truth");
    c_eval->add_option("--methods", ev.methods, "method directories, comma separated")->required();
    c_eval->add_option("--gt", ev.gt, "ground-truth directory")->required();
    c_eval->add_option("--out", ev.out, "CSV path (default stdout)");
    c_eval->add_option("--crop", ev.crop, "border pixels excluded on every side");
    add_common(c_eval);

    SweepArgs sw;
    auto* c_sweep = app.add_subcommand("sweep", "patch oracle PSNR/SSIM over patch sizes");
    c_sweep->add_option("--methods", sw.methods, "method directories, comma separated")->required();
    c_sweep->add_option("--gt", sw.gt, "ground-truth directory")->required();
    c_sweep->add_option("--out", sw.out, "CSV path (default stdout)");
    c_sweep->add_option("--sizes", sw.sizes, "tile sides, comma separated");
    add_common(c_sweep);

    CompareArgs cmp;
    auto* c_cmp = app.add_subcommand("compare", "per-image PSNR gain of directory A over B");
    c_cmp->add_option("--a", cmp.a, "first method directory")->required();
    c_cmp->add_option("--b", cmp.b, "second method directory")->required();
    c_cmp->add_option("--gt", cmp.gt, "ground-truth directory")->required();
    c_cmp->add_option("--out", cmp.out, "CSV path (default stdout)");
    add_common(c_cmp);

    GradcheckArgs gc;
    auto* c_gc = app.add_subcommand("gradcheck", "finite-difference check of every backward pass");
    c_gc->add_option("--seed", gc.seed, "parameter and input seed");
    c_gc->add_option("--step", gc.step, "central-difference step");
    c_gc->add_option("--samples", gc.samples, "entries probed per tensor");
    c_gc->add_option("--tolerance", gc.tolerance, "max relative error");
    add_common(c_gc);

    // Values from --config are spliced in front of the command-line flags of the subcommand,
    // so with TakeLast the command line wins.
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        for (std::size_t i = 0; i + 1 < args.size(); ++i) {
            if (args[i] == "--config") {
                auto extra = read_config(args[i + 1]);
                args.insert(args.begin() + 1, extra.begin(), extra.end());
                break;
            }
            if (args[i].rfind("--config=", 0) == 0) {
                auto extra = read_config(args[i].substr(9));
                args.insert(args.begin() + 1, extra.begin(), extra.end());
                break;
            }
        }
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }

    std::string command_line = "fuse3d";
    for (int i = 1; i < argc; ++i) command_line += std::string(" ") + argv[i];
    std::string seed = "none";
    if (*c_synth) seed = std::to_string(synth.seed);
    if (*c_deg) seed = std::to_string(deg.seed);
    if (*c_train) seed = std::to_string(tr.seed);
    common.provenance = {"command: " + command_line, "seed: " + seed, std::string("version: ") + kVersion};

    try {
        if (*c_synth) return run_synth(synth, common);
        if (*c_deg) return run_degrade(deg, common);
        if (*c_base) return run_baseline_cmd(base, common);
        if (*c_train) return run_train(tr, common);
        if (*c_apply) return run_apply(ap, common);
        if (*c_oracle) return run_oracle(orc, common);
        if (*c_eval) return run_eval(ev, common);
        if (*c_sweep) return run_sweep(sw, common);
        if (*c_cmp) return run_compare(cmp, common);
        if (*c_gc) return run_gradcheck_cmd(gc);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const UnsupportedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
