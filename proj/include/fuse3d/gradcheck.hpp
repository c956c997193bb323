#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fuse3d {

struct GradcheckOptions {
    std::uint64_t seed = 1;
    double step = 1e-4;
    /// Entries checked per tensor in the branch/model checks; layer checks cover every entry.
    std::size_t samples_per_tensor = 24;
};

struct GradcheckEntry {
    std::string name;
    std::size_t checked = 0;
    double max_rel_error = 0.0;
};

/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).
double relative_error(double analytic, double numeric);

/// Central finite differences against the analytic backward passes of every layer op,
/// each branch kind, and the complete four-branch model, in double precision.
std::vector<GradcheckEntry> run_gradcheck(const GradcheckOptions& options = {});

} // namespace fuse3d
