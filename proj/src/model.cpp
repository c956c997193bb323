#include "fuse3d/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <type_traits>

#include "fuse3d/gradstack.hpp"
#include "fuse3d/layers.hpp"

namespace fuse3d {

namespace {

// Calls fn(name, dims, span) for every learnable tensor in checkpoint order.
template <typename Params, typename F>
void visit_tensors(Params& params, F&& fn) {
    using Span = std::conditional_t<std::is_const_v<Params>, std::span<const double>, std::span<double>>;
    for (std::size_t b = 0; b < params.branches.size(); ++b) {
        auto& br = params.branches[b];
        const std::string prefix = std::string(kBranchNames[b]) + ".";
        const std::size_t stages = br.sums.size();
        for (std::size_t s = 0; s <= stages; ++s) {
            auto& conv = br.convs[s];
            const auto layer = std::to_string(2 * s + 1);
            const auto& d = conv.weights.dims();
            fn(prefix + "conv" + layer + ".w",
               std::vector<std::uint32_t>{static_cast<std::uint32_t>(d[0]), static_cast<std::uint32_t>(d[1]),
                                          static_cast<std::uint32_t>(d[2]), static_cast<std::uint32_t>(d[3])},
               Span(conv.weights.values()));
            fn(prefix + "conv" + layer + ".b", std::vector<std::uint32_t>{static_cast<std::uint32_t>(d[0])},
               Span(conv.biases));
            if (s < stages) {
                auto& sum = br.sums[s];
                const auto sl = std::to_string(2 * s + 2);
                fn(prefix + "sum" + sl + ".w", std::vector<std::uint32_t>{1}, Span(&sum.weight, 1));
                fn(prefix + "sum" + sl + ".b", std::vector<std::uint32_t>{1}, Span(&sum.bias, 1));
            }
        }
        const auto rl = std::to_string(2 * stages + 2);
        fn(prefix + "rec" + rl + ".w", std::vector<std::uint32_t>{1}, Span(&br.reconstruction.weight, 1));
        fn(prefix + "rec" + rl + ".b", std::vector<std::uint32_t>{1}, Span(&br.reconstruction.bias, 1));
    }
}

BranchKind kind_of(std::size_t branch) { return branch < 2 ? BranchKind::MethodStack : BranchKind::GradientStack; }

BranchParams make_branch(BranchKind kind, int sign, std::size_t stages) {
    BranchParams br;
    br.kind = kind;
    br.input_sign = sign;
    for (std::size_t s = 0; s <= stages; ++s) br.convs.emplace_back(kConvFilters, kKernelDepth, kKernelSize, kKernelSize);
    br.sums.resize(stages);
    return br;
}

void tanh_inplace(FeatureStack& t) {
    fuse3d::tanh_inplace(t.values());
}

// FNV-1a over 64-bit words; the tail is zero-padded.
class Fnv1a {
public:
    void add(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; i += 8) {
            std::uint64_t word = 0;
            std::memcpy(&word, p + i, std::min<std::size_t>(8, len - i));
            hash_ ^= word;
            hash_ *= 1099511628211ULL;
        }
    }
    template <typename T>
    void add(const T& v) {
        add(&v, sizeof(T));
    }
    std::uint64_t value() const { return hash_; }

private:
    std::uint64_t hash_ = 1469598103934665603ULL;
};

std::uint64_t fingerprint(const ModelParams& params, const Volume& methods) {
    Fnv1a h;
    visit_tensors(params, [&](const std::string&, const std::vector<std::uint32_t>&, std::span<const double> v) {
        h.add(v.data(), v.size_bytes());
    });
    for (const auto& br : params.branches) h.add(br.input_sign);
    for (auto d : methods.dims()) h.add(d);
    h.add(methods.data(), methods.size() * sizeof(double));
    return h.value();
}

void check_methods(const Volume& methods) {
    if (methods.dim(0) != 2) {
        throw UnsupportedError("exactly two fused methods supported, got " + std::to_string(methods.dim(0)));
    }
}

} // namespace

std::size_t branch_input_depth(BranchKind kind) { return kind == BranchKind::MethodStack ? 2 : 5; }

Pad3 branch_pad(BranchKind kind, std::size_t layer, std::size_t conv_count) {
    // Method-stack branches keep depth 2 throughout. Gradient-stack branches shrink depth
    // 5 -> 3 in the first conv and 3 -> 1 in the last; any extra stages in between keep depth.
    if (kind == BranchKind::MethodStack) return {1, 2, 2};
    if (layer == 0 || layer + 1 == conv_count) return {0, 2, 2};
    return {1, 2, 2};
}

ModelParams init_params(std::uint64_t seed, std::size_t stages) {
    ModelParams p;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, kInitStddev);
    for (std::size_t b = 0; b < 4; ++b) {
        p.branches[b] = make_branch(kind_of(b), (b % 2 == 0) ? 1 : -1, stages);
        for (auto& conv : p.branches[b].convs) {
            for (auto& w : conv.weights.values()) w = static_cast<double>(static_cast<float>(normal(rng)));
        }
    }
    return p;
}

ModelParams zero_params(std::size_t stages) {
    ModelParams p;
    for (std::size_t b = 0; b < 4; ++b) {
        p.branches[b] = make_branch(kind_of(b), (b % 2 == 0) ? 1 : -1, stages);
        for (auto& s : p.branches[b].sums) s = {0.0, 0.0};
        p.branches[b].reconstruction = {0.0, 0.0};
    }
    return p;
}

ParamGradients zero_gradients(const ModelParams& like) {
    ParamGradients g = like;
    visit_tensors(g, [](const std::string&, const std::vector<std::uint32_t>&, std::span<double> v) {
        std::fill(v.begin(), v.end(), 0.0);
    });
    return g;
}

ImagePlane branch_forward(const BranchParams& params, const Volume& input, BranchTrace& trace) {
    const std::size_t want = branch_input_depth(params.kind);
    if (input.dim(0) != want) {
        throw ShapeError("branch_forward: input depth " + std::to_string(input.dim(0)) + ", expected " +
                         std::to_string(want));
    }
    const std::size_t conv_count = params.convs.size();
    if (conv_count != params.sums.size() + 1) throw ShapeError("branch_forward: inconsistent layer counts");

    trace.input = input;
    if (params.input_sign < 0) {
        for (auto& v : trace.input.values()) v = -v;
    }
    trace.convs.clear();
    trace.sums.clear();

    const Volume* current = &trace.input;
    for (std::size_t layer = 0; layer < conv_count; ++layer) {
        FeatureStack h = conv3d_forward(*current, params.convs[layer], branch_pad(params.kind, layer, conv_count));
        tanh_inplace(h);
        trace.convs.push_back(std::move(h));
        if (layer + 1 < conv_count) {
            const auto& s = params.sums[layer];
            trace.sums.push_back(filter_collapse(trace.convs.back(), s.weight, s.bias));
            current = &trace.sums.back();
        }
    }
    return global_collapse(trace.convs.back(), params.reconstruction.weight, params.reconstruction.bias);
}

ImagePlane branch_forward(const BranchParams& params, const Volume& input) {
    BranchTrace trace;
    return branch_forward(params, input, trace);
}

BranchParams branch_backward(const BranchParams& params, const BranchTrace& trace, const ImagePlane& grad_residue) {
    const std::size_t conv_count = params.convs.size();
    if (trace.convs.size() != conv_count || trace.sums.size() + 1 != conv_count) {
        throw ConsistencyError("branch_backward: trace does not match branch layout");
    }
    BranchParams grad = params;

    CollapseGrad rec = global_collapse_backward(trace.convs.back(), params.reconstruction.weight, grad_residue);
    grad.reconstruction = {rec.weight, rec.bias};
    FeatureStack grad_h = std::move(rec.input);

    for (std::size_t layer = conv_count; layer-- > 0;) {
        const FeatureStack& h = trace.convs[layer];
        for (std::size_t i = 0; i < h.size(); ++i) grad_h[i] *= 1.0 - h[i] * h[i];
        const Volume& conv_in = layer == 0 ? trace.input : trace.sums[layer - 1];
        Conv3dGrad cg = conv3d_backward(conv_in, params.convs[layer], branch_pad(params.kind, layer, conv_count),
                                        grad_h, layer > 0);
        grad.convs[layer].weights = std::move(cg.weights);
        grad.convs[layer].biases = std::move(cg.biases);
        if (layer > 0) {
            const auto& s = params.sums[layer - 1];
            CollapseGrad sg = filter_collapse_backward(trace.convs[layer - 1], s.weight, trace.sums[layer - 1], cg.input);
            grad.sums[layer - 1] = {sg.weight, sg.bias};
            grad_h = std::move(sg.input);
        }
    }
    return grad;
}

ImagePlane model_residue(const ModelParams& params, const Volume& methods, ForwardTrace* trace) {
    check_methods(methods);
    const Volume grad_stack = build_gradient_stack(methods);
    ForwardTrace local;
    ForwardTrace& tr = trace ? *trace : local;

    ImagePlane residue({methods.dim(1), methods.dim(2)});
    for (std::size_t b = 0; b < 4; ++b) {
        const Volume& input = b < 2 ? methods : grad_stack;
        const ImagePlane r = branch_forward(params.branches[b], input, tr.branches[b]);
        for (std::size_t i = 0; i < residue.size(); ++i) residue[i] += kBranchCoefficients[b] * r[i];
    }
    if (trace) trace->fingerprint = fingerprint(params, methods);
    return residue;
}

namespace {

// F = avg + (c1 R_a1 + c2 R_a2 + d1 R_b1 + d2 R_b2), residues accumulated left to right from zero.
ImagePlane forward_impl(const ModelParams& params, const Volume& methods, ForwardTrace* trace) {
    const ImagePlane residue = model_residue(params, methods, trace);
    ImagePlane out = average_image(methods);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += residue[i];
    return out;
}

} // namespace

ImagePlane model_forward(const ModelParams& params, const Volume& methods) {
    return forward_impl(params, methods, nullptr);
}

ImagePlane model_forward(const ModelParams& params, const Volume& methods, ForwardTrace& trace) {
    return forward_impl(params, methods, &trace);
}

ParamGradients model_backward(const ModelParams& params, const Volume& methods, const ImagePlane& grad_out,
                              const ForwardTrace& trace) {
    check_methods(methods);
    if (trace.fingerprint != fingerprint(params, methods)) {
        throw ConsistencyError("model_backward: trace was recorded for different parameters or inputs");
    }
    if (grad_out.dim(0) != methods.dim(1) || grad_out.dim(1) != methods.dim(2)) {
        throw ShapeError("model_backward: grad_out is " + shape_string(grad_out.dims()) + ", expected " +
                         std::to_string(methods.dim(1)) + "x" + std::to_string(methods.dim(2)));
    }
    ParamGradients grads = params;
    ImagePlane scaled(grad_out.dims());
    for (std::size_t b = 0; b < 4; ++b) {
        for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = kBranchCoefficients[b] * grad_out[i];
        grads.branches[b] = branch_backward(params.branches[b], trace.branches[b], scaled);
        grads.branches[b].input_sign = params.branches[b].input_sign;
    }
    return grads;
}

ImagePlane fuse_images(const ModelParams& params, const ImagePlane& first, const ImagePlane& second) {
    const std::array<ImagePlane, 2> raw{first, second};
    const Volume stack = stack_planes(raw);
    Volume scaled = stack;
    for (auto& v : scaled.values()) v /= kIntensityScale;
    ImagePlane out = average_image(stack);
    const ImagePlane residue = model_residue(params, scaled);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += kIntensityScale * residue[i];
    return out;
}

std::size_t parameter_count(const ModelParams& params) {
    std::size_t n = 0;
    visit_tensors(params, [&](const std::string&, const std::vector<std::uint32_t>&, std::span<const double> v) {
        n += v.size();
    });
    return n;
}

std::vector<double> flatten(const ModelParams& params) {
    std::vector<double> out;
    out.reserve(parameter_count(params));
    visit_tensors(params, [&](const std::string&, const std::vector<std::uint32_t>&, std::span<const double> v) {
        out.insert(out.end(), v.begin(), v.end());
    });
    return out;
}

void unflatten(std::span<const double> values, ModelParams& params) {
    if (values.size() != parameter_count(params)) {
        throw ShapeError("unflatten: " + std::to_string(values.size()) + " values for " +
                         std::to_string(parameter_count(params)) + " parameters");
    }
    std::size_t pos = 0;
    visit_tensors(params, [&](const std::string&, const std::vector<std::uint32_t>&, std::span<double> v) {
        std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), v.size(), v.begin());
        pos += v.size();
    });
}

std::vector<NamedTensor> named_tensors(ModelParams& params) {
    std::vector<NamedTensor> out;
    visit_tensors(params, [&](const std::string& name, const std::vector<std::uint32_t>& dims, std::span<double> v) {
        out.push_back({name, dims, v});
    });
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoint format

namespace {

constexpr char kMagic[4] = {'3', 'D', 'C', 'F'};

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u16(std::string& out, std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::size_t offset() const { return pos_; }
    bool at_end() const { return pos_ == bytes_.size(); }

    std::uint64_t read_le(std::size_t width, const char* what) {
        need(width, what);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < width; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += width;
        return v;
    }

    std::string_view read_bytes(std::size_t n, const char* what) {
        need(n, what);
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

private:
    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) {
            throw FormatError(std::string("checkpoint truncated while reading ") + what, pos_);
        }
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

struct RawTensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> values;
    std::size_t offset = 0;
};

} // namespace

std::string serialize_params(const ModelParams& params) {
    std::string out(kMagic, sizeof(kMagic));
    put_u32(out, kCheckpointVersion);
    std::uint32_t count = 0;
    visit_tensors(params, [&](const std::string&, const std::vector<std::uint32_t>&, std::span<const double>) { ++count; });
    put_u32(out, count);
    visit_tensors(params, [&](const std::string& name, const std::vector<std::uint32_t>& dims, std::span<const double> v) {
        put_u16(out, static_cast<std::uint16_t>(name.size()));
        out += name;
        put_u8(out, static_cast<std::uint8_t>(dims.size()));
        for (auto d : dims) put_u32(out, d);
        for (double x : v) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
    });
    return out;
}

ModelParams deserialize_params(std::string_view bytes) {
    Reader in(bytes);
    const auto magic = in.read_bytes(4, "magic");
    if (std::memcmp(magic.data(), kMagic, 4) != 0) throw FormatError("bad checkpoint magic", 0);
    const auto version = static_cast<std::uint32_t>(in.read_le(4, "version"));
    if (version != kCheckpointVersion) {
        throw VersionError("unsupported checkpoint version " + std::to_string(version) + "; supported versions: " +
                           std::to_string(kCheckpointVersion));
    }
    const auto count = static_cast<std::uint32_t>(in.read_le(4, "tensor count"));

    std::map<std::string, RawTensor> raw;
    for (std::uint32_t t = 0; t < count; ++t) {
        RawTensor rt;
        rt.offset = in.offset();
        const auto name_len = static_cast<std::size_t>(in.read_le(2, "name length"));
        std::string name(in.read_bytes(name_len, "tensor name"));
        const auto rank = static_cast<std::size_t>(in.read_le(1, "rank"));
        std::uint64_t elems = 1;
        for (std::size_t r = 0; r < rank; ++r) {
            rt.dims.push_back(static_cast<std::uint32_t>(in.read_le(4, "dims")));
            elems *= rt.dims.back();
        }
        if (elems * 4 > bytes.size()) throw FormatError("tensor '" + name + "' larger than file", rt.offset);
        rt.values.resize(static_cast<std::size_t>(elems));
        for (auto& v : rt.values) v = std::bit_cast<float>(static_cast<std::uint32_t>(in.read_le(4, "values")));
        if (!raw.emplace(name, std::move(rt)).second) {
            throw FormatError("duplicate tensor '" + name + "'", in.offset());
        }
    }
    if (!in.at_end()) throw FormatError("trailing bytes after last tensor", in.offset());

    // Stage count follows from the reconstruction layer index (rec4 for one stage).
    std::size_t stages = 0;
    for (; stages < 64; ++stages) {
        if (raw.count("a1.rec" + std::to_string(2 * stages + 2) + ".w")) break;
    }
    if (stages == 64 || stages == 0) throw FormatError("checkpoint has no reconstruction layer", in.offset());

    ModelParams params = zero_params(stages);
    std::size_t used = 0;
    for (auto& nt : named_tensors(params)) {
        auto it = raw.find(nt.name);
        if (it == raw.end()) throw FormatError("missing tensor '" + nt.name + "'", in.offset());
        if (it->second.dims != nt.dims) throw FormatError("tensor '" + nt.name + "' has wrong dims", it->second.offset);
        for (std::size_t i = 0; i < nt.values.size(); ++i) nt.values[i] = static_cast<double>(it->second.values[i]);
        ++used;
    }
    if (used != raw.size()) throw FormatError("checkpoint contains unknown tensors", in.offset());
    return params;
}

void save_params(const ModelParams& params, const std::filesystem::path& path) {
    const std::string bytes = serialize_params(params);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

ModelParams load_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_params(ss.str());
}

} // namespace fuse3d
