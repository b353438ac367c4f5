#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sigma/tasks.hpp"

namespace sigma {

// Distribution over integer altitudes, stored densely from min_value.
struct WalkPmf {
    int32_t min_value = 0;
    std::vector<double> p;

    int32_t max_value() const { return min_value + static_cast<int32_t>(p.size()) - 1; }
    double at(int32_t value) const;
};

inline constexpr uint32_t WALK_MAX_STEPS = 4096;

// Law of X_n given X_0 = x0, by repeated convolution with the one-step kernel.
WalkPmf walk_forward_pmf_dp(const WalkParams& params, int32_t x0, uint32_t n);

// Same law in closed form: sum over the number o of stay moves, with
// u = (n - o + delta) / 2 up moves and d = n - o - u down moves per term.
WalkPmf walk_forward_pmf_closed(const WalkParams& params, int32_t x0, uint32_t n);

// Computes both routes and requires agreement to 1e-12 before returning the
// dynamic-programming result.
WalkPmf walk_forward_pmf(const WalkParams& params, int32_t x0, uint32_t n);

// Law of X_t1 given X_t2 = x_t2, with X_0 uniform over params.starts: the
// start-mixture prior at t1 reweighted by the forward likelihood of the
// observation.
WalkPmf walk_backward_pmf(const WalkParams& params, uint32_t t1, uint32_t t2, int32_t x_t2);

inline constexpr uint32_t WALK_PATH_COUNT_MAX_STEPS = 75;  // exact in 128-bit

// Exact number of length-n {down, stay, up} move sequences from altitude a to
// altitude b. Sums to 3^n over b.
unsigned __int128 walk_path_count(int64_t a, int64_t b, uint32_t n);

std::string u128_to_string(unsigned __int128 value);

}  // namespace sigma
