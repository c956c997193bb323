#pragma once

#include <cstddef>
#include <functional>

namespace fuse3d {

/// Runs fn(0..count-1) on up to `threads` workers. Each index runs exactly once; callers write
/// results into per-index slots and reduce afterwards so output does not depend on `threads`.
/// The exception from the lowest failing index is rethrown.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

} // namespace fuse3d
