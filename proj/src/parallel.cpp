#include "labeldense/parallel.hpp"

#include <algorithm>

namespace labeldense {

int default_thread_count() {
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::clamp(hw, 1u, 8u));
}

}  // namespace labeldense
