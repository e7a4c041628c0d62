#pragma once

#include <cstdlib>
#include <thread>

namespace mechlearn {

/// Worker count for parallel Monte Carlo: an explicit request wins, then the
/// MECHLEARN_THREADS environment variable, then the hardware default.
/// Results are bit-reproducible for a fixed (seed, worker count).
inline int resolve_workers(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("MECHLEARN_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) return cap;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace mechlearn
