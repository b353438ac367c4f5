#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "sigma/orders.hpp"
#include "sigma/rng.hpp"

using namespace sigma;

TEST_CASE("identity order") {
    CHECK(identity_order(3).perm == std::vector<uint32_t>{0, 1, 2});
    CHECK(identity_order(1).perm == std::vector<uint32_t>{0});
    CHECK_THROWS_AS(identity_order(0), std::invalid_argument);
}

TEST_CASE("fractal order emits midpoints breadth-first") {
    CHECK(fractal_order(7).perm == std::vector<uint32_t>{3, 1, 5, 0, 2, 4, 6});
    CHECK(fractal_order(1).perm == std::vector<uint32_t>{0});
    CHECK(fractal_order(2).perm == std::vector<uint32_t>{1, 0});
    CHECK_THROWS_AS(fractal_order(0), std::invalid_argument);
    for (uint32_t n = 1; n <= 64; n++) CHECK(is_permutation(fractal_order(n).perm));
}

TEST_CASE("uniform random order is deterministic in the seed and always a permutation") {
    CHECK(uniform_random_order(17, 42u) == uniform_random_order(17, 42u));
    CHECK(uniform_random_order(17, 42u) != uniform_random_order(17, 43u));
    CHECK(uniform_random_order(1, 7u).perm == std::vector<uint32_t>{0});
    Rng rng(9);
    for (int i = 0; i < 200; i++) CHECK(is_permutation(uniform_random_order(1 + rng.uniform_int(64), rng).perm));
}

TEST_CASE("uniform random order hits all 24 permutations of length 4 uniformly") {
    std::map<std::vector<uint32_t>, int> counts;
    std::vector<uint32_t> base{0, 1, 2, 3};
    do counts[base] = 0; while (std::next_permutation(base.begin(), base.end()));
    REQUIRE(counts.size() == 24);

    const int draws = 120000;
    Rng rng(123);
    for (int i = 0; i < draws; i++) counts.at(uniform_random_order(4, rng).perm)++;
    for (const auto& [perm, count] : counts) {
        const double freq = static_cast<double>(count) / draws;
        CHECK(std::abs(freq - 1.0 / 24.0) < 0.005);
    }
}

TEST_CASE("first entry of a random order is uniform over positions") {
    const uint32_t n = 7;
    const int draws = 100000;
    std::array<int, n> counts{};
    Rng rng(77);
    for (int i = 0; i < draws; i++) counts[uniform_random_order(n, rng).perm[0]]++;
    const double p = 1.0 / n;
    const double sigma3 = 3.0 * std::sqrt(p * (1.0 - p) / draws);
    for (int c : counts) CHECK(std::abs(static_cast<double>(c) / draws - p) < sigma3 + 1e-12);
}

TEST_CASE("permute and inverse") {
    Order o{{2, 0, 1}};
    const std::vector<uint32_t> seq{5, 7, 9};
    CHECK(permute<uint32_t>(o, seq) == std::vector<uint32_t>{9, 5, 7});
    CHECK(inverse(o).perm == std::vector<uint32_t>{1, 2, 0});
    CHECK_THROWS_AS(permute<uint32_t>(o, std::vector<uint32_t>{1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(inverse(Order{{0, 0, 1}}), std::invalid_argument);

    Rng rng(5);
    for (int i = 0; i < 1000; i++) {
        const uint32_t n = 1 + rng.uniform_int(256);
        const Order order = uniform_random_order(n, rng);
        std::vector<uint32_t> data(n);
        for (auto& d : data) d = rng.uniform_int(1000);
        const auto shuffled = permute<uint32_t>(order, data);
        CHECK(permute<uint32_t>(inverse(order), shuffled) == data);
    }
}

TEST_CASE("order byte serialization round-trips and rejects malformed input") {
    Rng rng(11);
    for (int i = 0; i < 100; i++) {
        const Order order = uniform_random_order(1 + rng.uniform_int(300), rng);
        const auto bytes = order_to_bytes(order);
        CHECK(order_from_bytes(bytes) == order);
    }
    CHECK_THROWS_AS(order_from_bytes(std::vector<uint8_t>{1, 2}), std::invalid_argument);
    auto bytes = order_to_bytes(uniform_random_order(5, 3u));
    bytes.pop_back();
    CHECK_THROWS_AS(order_from_bytes(bytes), std::invalid_argument);
    // duplicate entry
    std::vector<uint8_t> dup{2, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0};
    CHECK_THROWS_AS(order_from_bytes(dup), std::invalid_argument);
}
