#include "porescope/parallel.hpp"

#include <cstdlib>

namespace porescope {

int max_threads() {
    if (const char* env = std::getenv("PORESCOPE_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
}

} // namespace porescope
