#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "sigma/rng.hpp"
#include "sigma/walk.hpp"

using namespace sigma;

namespace {
const WalkParams kDefault;
}

TEST_CASE("forward pmf: zero and one step") {
    const WalkPmf zero = walk_forward_pmf(kDefault, 100, 0);
    CHECK(zero.at(100) == 1.0);
    CHECK(zero.at(99) == 0.0);

    const WalkPmf one = walk_forward_pmf(kDefault, 100, 1);
    CHECK(one.at(99) == 0.4);
    CHECK(one.at(100) == 0.2);
    CHECK(one.at(101) == 0.4);

    // per-step variance, exactly, from the one-step pmf
    double var = 0.0;
    for (int32_t v = one.min_value; v <= one.max_value(); v++)
        var += one.at(v) * static_cast<double>(v - 100) * static_cast<double>(v - 100);
    CHECK(var == 0.8);
}

TEST_CASE("forward pmf: two steps back at the origin") {
    // stay-stay plus up-down plus down-up: 0.2^2 + 2 * 0.4^2 = 0.36
    const WalkPmf two = walk_forward_pmf(kDefault, 50, 2);
    CHECK(two.at(50) == doctest::Approx(0.36).epsilon(1e-14));
}

TEST_CASE("forward pmf: closed form agrees with convolution up to 60 steps") {
    for (uint32_t n = 0; n <= 60; n++) {
        const WalkPmf dp = walk_forward_pmf_dp(kDefault, 0, n);
        const WalkPmf closed = walk_forward_pmf_closed(kDefault, 0, n);
        REQUIRE(dp.p.size() == closed.p.size());
        double sum = 0.0, var = 0.0;
        for (size_t i = 0; i < dp.p.size(); i++) {
            REQUIRE(std::abs(dp.p[i] - closed.p[i]) <= 1e-12);
            sum += dp.p[i];
            const double d = static_cast<double>(dp.min_value + static_cast<int32_t>(i));
            var += dp.p[i] * d * d;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
        CHECK(std::abs(var - 0.8 * n) < 1e-9);  // independent increments
    }
    // the combined entry point enforces the same agreement internally
    CHECK_NOTHROW(walk_forward_pmf(kDefault, 0, 60));
    CHECK_THROWS_AS(walk_forward_pmf(kDefault, 0, WALK_MAX_STEPS + 1), std::invalid_argument);
}

TEST_CASE("path counts: exact values and the 3^n identity") {
    CHECK(walk_path_count(5, 5, 0) == 1);
    CHECK(walk_path_count(5, 6, 0) == 0);
    CHECK(walk_path_count(5, 5, 1) == 1);
    CHECK(walk_path_count(5, 5, 2) == 3);  // stay-stay, up-down, down-up
    CHECK(walk_path_count(0, 3, 3) == 1);
    CHECK(walk_path_count(0, 9, 8) == 0);
    CHECK(u128_to_string(walk_path_count(0, 0, 4)) == "19");

    for (uint32_t n = 0; n <= 12; n++) {
        unsigned __int128 total = 0;
        for (int64_t b = -static_cast<int64_t>(n); b <= static_cast<int64_t>(n); b++) {
            total += walk_path_count(0, b, n);
            CHECK(walk_path_count(0, b, n) == walk_path_count(0, -b, n));
        }
        unsigned __int128 expect = 1;
        for (uint32_t i = 0; i < n; i++) expect *= 3;
        CHECK(total == expect);
    }
    CHECK_THROWS_AS(walk_path_count(0, 0, WALK_PATH_COUNT_MAX_STEPS + 1), std::invalid_argument);
}

TEST_CASE("path counts reproduce the pmf when all moves are equally likely") {
    WalkParams p;
    p.p_move = 1.0 / 3.0;
    p.p_stay = 1.0 / 3.0;
    for (uint32_t n = 0; n <= 12; n++) {
        const WalkPmf pmf = walk_forward_pmf(p, 0, n);
        double third_pow = 1.0;
        for (uint32_t i = 0; i < n; i++) third_pow /= 3.0;
        for (int32_t b = -static_cast<int32_t>(n); b <= static_cast<int32_t>(n); b++) {
            const double expect = static_cast<double>(walk_path_count(0, b, n)) * third_pow;
            CHECK(pmf.at(b) == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("backward pmf: support pins the start when only one is reachable") {
    // X_9 = 101 is reachable only from start 100 (the others are 19+ away).
    const WalkPmf post = walk_backward_pmf(kDefault, 0, 9, 101);
    CHECK(post.at(100) == doctest::Approx(1.0).epsilon(1e-12));
    double sum = 0.0;
    for (double w : post.p) sum += w;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("backward pmf: start posterior concentrates on the nearest start") {
    const WalkPmf post = walk_backward_pmf(kDefault, 0, 60, 120);
    CHECK(post.at(120) > post.at(130));
    CHECK(post.at(130) > post.at(100));
    CHECK(post.at(100) > 0.0);
    CHECK(post.at(140) > 0.0);
    CHECK(post.at(120) > 0.5);
}

TEST_CASE("backward pmf: input validation") {
    CHECK_THROWS_AS(walk_backward_pmf(kDefault, 10, 5, 100), std::invalid_argument);
    CHECK_THROWS_AS(walk_backward_pmf(kDefault, 0, WALK_MAX_STEPS + 1, 100), std::invalid_argument);
    // altitude 500 cannot be reached from any start in 5 steps
    CHECK_THROWS_AS(walk_backward_pmf(kDefault, 2, 5, 500), std::invalid_argument);
}

TEST_CASE("backward pmf matches a Monte-Carlo rejection estimate") {
    const uint32_t t1 = 5, t2 = 15;
    const int32_t observed_alt = 121;
    const WalkPmf post = walk_backward_pmf(kDefault, t1, t2, observed_alt);

    Rng rng(20240815);
    std::map<int32_t, int64_t> hist;
    int64_t kept = 0;
    const int64_t walks = 10000000;
    for (int64_t i = 0; i < walks; i++) {
        int32_t x = kDefault.starts[rng.uniform_int(4)];
        int32_t x_t1 = x;
        for (uint32_t t = 1; t <= t2; t++) {
            const double r = rng.uniform();
            x += r < 0.4 ? -1 : r < 0.8 ? 1 : 0;
            if (t == t1) x_t1 = x;
        }
        if (x == observed_alt) {
            hist[x_t1]++;
            kept++;
        }
    }
    REQUIRE(kept > 100000);
    for (int32_t v = post.min_value; v <= post.max_value(); v++) {
        const double p = post.at(v);
        const double freq = static_cast<double>(hist.count(v) ? hist[v] : 0) / static_cast<double>(kept);
        const double sigma3 = 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(kept));
        CHECK(std::abs(freq - p) <= sigma3 + 3.0 / static_cast<double>(kept));
    }
    for (const auto& [v, c] : hist) CHECK(post.at(v) > 0.0);
}
