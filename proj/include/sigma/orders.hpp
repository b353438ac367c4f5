#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "sigma/rng.hpp"

namespace sigma {

// A generation order over a sequence of length n: perm[t] is the sequence
// position handled at step t. Always a bijection on [0, n).
struct Order {
    std::vector<uint32_t> perm;

    uint32_t size() const { return static_cast<uint32_t>(perm.size()); }
    bool operator==(const Order&) const = default;
};

bool is_permutation(std::span<const uint32_t> perm);

// perm[t] = t.
Order identity_order(uint32_t n);

// Fisher-Yates shuffle driven by the given stream.
Order uniform_random_order(uint32_t n, Rng& rng);
Order uniform_random_order(uint32_t n, uint64_t seed);

// Midpoint refinement: emit the midpoint of [0, n), then recurse on the two
// halves breadth-first, so coarse positions come before fine ones.
// n = 7 gives [3, 1, 5, 0, 2, 4, 6].
Order fractal_order(uint32_t n);

// out[t] = seq[perm[t]].
template <typename T>
std::vector<T> permute(const Order& order, std::span<const T> seq) {
    if (seq.size() != order.perm.size())
        throw std::invalid_argument("permute: sequence length does not match order length");
    std::vector<T> out(seq.size());
    for (size_t t = 0; t < seq.size(); t++) out[t] = seq[order.perm[t]];
    return out;
}

// inv.perm[order.perm[t]] = t.
Order inverse(const Order& order);

// Length-prefixed little-endian u32 array; validated on read.
std::vector<uint8_t> order_to_bytes(const Order& order);
Order order_from_bytes(std::span<const uint8_t> bytes);

}  // namespace sigma
