#include "fuse3d/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fuse3d/image_io.hpp"

namespace fuse3d {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

} // namespace

void write_manifest(const fs::path& root, const Manifest& manifest, const std::vector<std::string>& provenance) {
    const fs::path path = root / "manifest.csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    for (const auto& line : provenance) out << "# " << line << "\n";
    out << "id,gt,degraded,task,sigma,scale,seed\n";
    char sigma[64];
    std::snprintf(sigma, sizeof(sigma), "%.17g", manifest.config.sigma);
    for (const auto& e : manifest.entries) {
        out << e.id << "," << e.gt << "," << e.degraded << "," << task_name(manifest.config.task) << "," << sigma << ","
            << manifest.config.scale << "," << manifest.config.seed << "\n";
    }
    if (!out) throw IoError("write failed: " + path.string());
}

Manifest read_manifest(const fs::path& root) {
    const fs::path path = root / "manifest.csv";
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    Manifest m;
    std::string line;
    bool header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            header = true;
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 7) {
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected 7 fields, got " +
                          std::to_string(f.size()));
        }
        m.entries.push_back({f[0], f[1], f[2]});
        m.config.task = parse_task(f[3]);
        m.config.sigma = std::stod(f[4]);
        m.config.scale = std::stoul(f[5]);
        m.config.seed = std::stoull(f[6]);
    }
    return m;
}

std::vector<fs::path> list_images(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && is_image_file(entry.path())) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    return out;
}

fs::path find_image(const fs::path& dir, const std::string& id) {
    for (const char* ext : {".pfm", ".pgm", ".png", ".ppm", ".pnm"}) {
        const fs::path p = dir / (id + ext);
        if (fs::is_regular_file(p)) return p;
    }
    throw IoError("no image '" + id + "' in " + dir.string());
}

std::vector<TrainingImage> load_training_set(const std::vector<fs::path>& method_dirs, const fs::path& gt_dir) {
    if (method_dirs.empty()) throw ArgumentError("load_training_set: no method directories");
    std::vector<TrainingImage> out;
    for (const auto& first : list_images(method_dirs[0])) {
        const std::string id = first.stem().string();
        std::vector<ImagePlane> planes{load_image(first)};
        for (std::size_t k = 1; k < method_dirs.size(); ++k) planes.push_back(load_image(find_image(method_dirs[k], id)));
        ImagePlane truth = load_image(find_image(gt_dir, id));
        for (const auto& p : planes) {
            if (!p.same_shape(truth)) {
                throw ShapeError("image '" + id + "': method output " + shape_string(p.dims()) +
                                 " does not match ground truth " + shape_string(truth.dims()));
            }
        }
        out.push_back({id, stack_planes(planes), std::move(truth)});
    }
    if (out.empty()) throw IoError("no images in " + method_dirs[0].string());
    return out;
}

} // namespace fuse3d
