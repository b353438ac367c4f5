#include "sigma/runtime.hpp"

#include <cstdlib>

extern "C" void openblas_set_num_threads(int num_threads);

namespace sigma {

void set_threads(int n) {
    openblas_set_num_threads(n < 1 ? 1 : n);
}

void apply_thread_env() {
    const char* env = std::getenv("SIGMA_THREADS");
    if (!env || *env == '\0') return;
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end && *end == '\0' && n > 0) set_threads(static_cast<int>(n));
}

}  // namespace sigma
