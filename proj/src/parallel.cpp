#include "fuse3d/parallel.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace fuse3d {

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
    std::vector<std::exception_ptr> errors(count);
    auto run = [&](std::size_t worker) {
        for (std::size_t i = worker; i < count; i += workers) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

} // namespace fuse3d
