#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fuse3d/degrade.hpp"

namespace fuse3d {

// On-disk layout of a run directory:
//   gt/<id>.pfm            ground truth (modcropped for SR)
//   degraded/<id>.pfm      noisy or low-resolution observation
//   methods/<name>/<id>.*  restorer outputs
//   manifest.csv           id -> files, with the degradation parameters

struct ManifestEntry {
    std::string id;
    std::string gt;        // relative to the run directory
    std::string degraded;
};

struct Manifest {
    DegradeConfig config;
    std::vector<ManifestEntry> entries;
};

void write_manifest(const std::filesystem::path& root, const Manifest& manifest,
                    const std::vector<std::string>& provenance = {});
Manifest read_manifest(const std::filesystem::path& root);

/// Supported image files directly inside `dir`, sorted by file name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

/// The image in `dir` whose stem is `id`. Throws IoError if there is none.
std::filesystem::path find_image(const std::filesystem::path& dir, const std::string& id);

/// Loads the images of `dirs` (one per method) and `gt_dir` matched by file stem. Image ids
/// are taken from the first method directory.
std::vector<TrainingImage> load_training_set(const std::vector<std::filesystem::path>& method_dirs,
                                             const std::filesystem::path& gt_dir);

} // namespace fuse3d
