#pragma once

namespace sigma {

// Caps the BLAS worker pool. Values below 1 are clamped to 1.
void set_threads(int n);

// Applies the SIGMA_THREADS environment variable when it holds a positive
// integer; anything else is ignored.
void apply_thread_env();

}  // namespace sigma
