#include "sigma/orders.hpp"

#include <deque>
#include <numeric>
#include <utility>

namespace sigma {

bool is_permutation(std::span<const uint32_t> perm) {
    std::vector<bool> seen(perm.size(), false);
    for (uint32_t p : perm) {
        if (p >= perm.size() || seen[p]) return false;
        seen[p] = true;
    }
    return true;
}

Order identity_order(uint32_t n) {
    if (n == 0) throw std::invalid_argument("identity_order: length must be positive");
    Order o;
    o.perm.resize(n);
    std::iota(o.perm.begin(), o.perm.end(), 0u);
    return o;
}

Order uniform_random_order(uint32_t n, Rng& rng) {
    Order o = identity_order(n);
    for (uint32_t i = n - 1; i > 0; i--) {
        const uint32_t j = rng.uniform_int(i + 1);
        std::swap(o.perm[i], o.perm[j]);
    }
    return o;
}

Order uniform_random_order(uint32_t n, uint64_t seed) {
    Rng rng(seed);
    return uniform_random_order(n, rng);
}

Order fractal_order(uint32_t n) {
    if (n == 0) throw std::invalid_argument("fractal_order: length must be positive");
    Order o;
    o.perm.reserve(n);
    std::deque<std::pair<uint32_t, uint32_t>> queue;
    queue.emplace_back(0u, n);
    while (!queue.empty()) {
        const auto [lo, hi] = queue.front();
        queue.pop_front();
        const uint32_t mid = (lo + hi) / 2;
        o.perm.push_back(mid);
        if (lo < mid) queue.emplace_back(lo, mid);
        if (mid + 1 < hi) queue.emplace_back(mid + 1, hi);
    }
    return o;
}

Order inverse(const Order& order) {
    if (!is_permutation(order.perm)) throw std::invalid_argument("inverse: not a permutation");
    Order inv;
    inv.perm.resize(order.perm.size());
    for (uint32_t t = 0; t < order.size(); t++) inv.perm[order.perm[t]] = t;
    return inv;
}

std::vector<uint8_t> order_to_bytes(const Order& order) {
    std::vector<uint8_t> out;
    out.reserve(4 + 4 * order.perm.size());
    auto put_u32 = [&out](uint32_t v) {
        out.push_back(static_cast<uint8_t>(v));
        out.push_back(static_cast<uint8_t>(v >> 8));
        out.push_back(static_cast<uint8_t>(v >> 16));
        out.push_back(static_cast<uint8_t>(v >> 24));
    };
    put_u32(order.size());
    for (uint32_t p : order.perm) put_u32(p);
    return out;
}

Order order_from_bytes(std::span<const uint8_t> bytes) {
    auto get_u32 = [&bytes](size_t at) -> uint32_t {
        return static_cast<uint32_t>(bytes[at]) | (static_cast<uint32_t>(bytes[at + 1]) << 8) |
               (static_cast<uint32_t>(bytes[at + 2]) << 16) | (static_cast<uint32_t>(bytes[at + 3]) << 24);
    };
    if (bytes.size() < 4) throw std::invalid_argument("order_from_bytes: truncated header");
    const uint32_t n = get_u32(0);
    if (bytes.size() != 4 + 4 * static_cast<size_t>(n))
        throw std::invalid_argument("order_from_bytes: length prefix does not match payload");
    Order o;
    o.perm.resize(n);
    for (uint32_t t = 0; t < n; t++) o.perm[t] = get_u32(4 + 4 * static_cast<size_t>(t));
    if (!is_permutation(o.perm)) throw std::invalid_argument("order_from_bytes: payload is not a permutation");
    return o;
}

}  // namespace sigma
