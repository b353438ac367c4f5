#include "sigma/walk.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sigma {

double WalkPmf::at(int32_t value) const {
    if (value < min_value || value > max_value()) return 0.0;
    return p[static_cast<size_t>(value - min_value)];
}

namespace {

void check_steps(uint32_t n) {
    if (n > WALK_MAX_STEPS) throw std::invalid_argument("walk pmf: step count exceeds table bounds");
}

}  // namespace

WalkPmf walk_forward_pmf_dp(const WalkParams& params, int32_t x0, uint32_t n) {
    check_steps(n);
    walk_vocab(params);  // parameter validation
    WalkPmf pmf;
    pmf.min_value = x0 - static_cast<int32_t>(n);
    pmf.p.assign(2 * static_cast<size_t>(n) + 1, 0.0);
    std::vector<double> cur(pmf.p.size(), 0.0), next(pmf.p.size(), 0.0);
    cur[n] = 1.0;  // offset so that index n is altitude x0
    for (uint32_t step = 0; step < n; step++) {
        std::fill(next.begin(), next.end(), 0.0);
        for (size_t i = 0; i < cur.size(); i++) {
            const double mass = cur[i];
            if (mass == 0.0) continue;
            if (i > 0) next[i - 1] += mass * params.p_move;
            next[i] += mass * params.p_stay;
            if (i + 1 < next.size()) next[i + 1] += mass * params.p_move;
        }
        std::swap(cur, next);
    }
    pmf.p = cur;
    return pmf;
}

WalkPmf walk_forward_pmf_closed(const WalkParams& params, int32_t x0, uint32_t n) {
    check_steps(n);
    walk_vocab(params);
    // Pascal's triangle up to n; binomials here stay well inside double range
    // for the supported step counts.
    std::vector<std::vector<double>> binom(n + 1);
    for (uint32_t i = 0; i <= n; i++) {
        binom[i].assign(i + 1, 1.0);
        for (uint32_t j = 1; j < i; j++) binom[i][j] = binom[i - 1][j - 1] + binom[i - 1][j];
    }

    WalkPmf pmf;
    pmf.min_value = x0 - static_cast<int32_t>(n);
    pmf.p.assign(2 * static_cast<size_t>(n) + 1, 0.0);
    for (int32_t delta = -static_cast<int32_t>(n); delta <= static_cast<int32_t>(n); delta++) {
        double total = 0.0;
        for (uint32_t stays = 0; stays <= n; stays++) {
            const int32_t moves = static_cast<int32_t>(n - stays);
            const int32_t twice_up = moves + delta;
            if (twice_up < 0 || twice_up % 2 != 0) continue;
            const int32_t ups = twice_up / 2;
            if (ups > moves) continue;
            total += binom[n][stays] * binom[moves][ups] *
                     std::pow(params.p_move, static_cast<double>(moves)) *
                     std::pow(params.p_stay, static_cast<double>(stays));
        }
        pmf.p[static_cast<size_t>(delta + static_cast<int32_t>(n))] = total;
    }
    return pmf;
}

WalkPmf walk_forward_pmf(const WalkParams& params, int32_t x0, uint32_t n) {
    WalkPmf dp = walk_forward_pmf_dp(params, x0, n);
    const WalkPmf closed = walk_forward_pmf_closed(params, x0, n);
    for (size_t i = 0; i < dp.p.size(); i++) {
        if (std::abs(dp.p[i] - closed.p[i]) > 1e-12)
            throw std::runtime_error("walk_forward_pmf: closed form and convolution disagree");
    }
    return dp;
}

WalkPmf walk_backward_pmf(const WalkParams& params, uint32_t t1, uint32_t t2, int32_t x_t2) {
    if (t1 > t2) throw std::invalid_argument("walk_backward_pmf: need t1 <= t2");
    check_steps(t2);
    walk_vocab(params);

    // Prior over X_t1: equal-weight mixture of the forward laws of each start.
    const int32_t lo = *std::min_element(params.starts.begin(), params.starts.end()) -
                       static_cast<int32_t>(t1);
    const int32_t hi = *std::max_element(params.starts.begin(), params.starts.end()) +
                       static_cast<int32_t>(t1);
    WalkPmf posterior;
    posterior.min_value = lo;
    posterior.p.assign(static_cast<size_t>(hi - lo) + 1, 0.0);

    const double start_weight = 1.0 / static_cast<double>(params.starts.size());
    std::vector<double> prior(posterior.p.size(), 0.0);
    for (const int32_t start : params.starts) {
        const WalkPmf fwd = walk_forward_pmf_dp(params, start, t1);
        for (int32_t x = fwd.min_value; x <= fwd.max_value(); x++)
            prior[static_cast<size_t>(x - lo)] += start_weight * fwd.at(x);
    }

    double norm = 0.0;
    for (int32_t x = lo; x <= hi; x++) {
        const double pr = prior[static_cast<size_t>(x - lo)];
        if (pr == 0.0) continue;
        const double lik = walk_forward_pmf_dp(params, x, t2 - t1).at(x_t2);
        const double w = pr * lik;
        posterior.p[static_cast<size_t>(x - lo)] = w;
        norm += w;
    }
    if (norm <= 0.0)
        throw std::invalid_argument("walk_backward_pmf: observation is unreachable from every start");
    for (double& w : posterior.p) w /= norm;
    return posterior;
}

unsigned __int128 walk_path_count(int64_t a, int64_t b, uint32_t n) {
    if (n > WALK_PATH_COUNT_MAX_STEPS)
        throw std::invalid_argument("walk_path_count: step count exceeds the exact 128-bit range");
    const int64_t delta = b - a;
    if (delta > static_cast<int64_t>(n) || delta < -static_cast<int64_t>(n)) return 0;

    std::vector<std::vector<unsigned __int128>> binom(n + 1);
    for (uint32_t i = 0; i <= n; i++) {
        binom[i].assign(i + 1, 1);
        for (uint32_t j = 1; j < i; j++) binom[i][j] = binom[i - 1][j - 1] + binom[i - 1][j];
    }
    unsigned __int128 total = 0;
    for (uint32_t stays = 0; stays <= n; stays++) {
        const int64_t moves = static_cast<int64_t>(n - stays);
        const int64_t twice_up = moves + delta;
        if (twice_up < 0 || twice_up % 2 != 0) continue;
        const int64_t ups = twice_up / 2;
        if (ups > moves) continue;
        total += binom[n][stays] * binom[static_cast<uint32_t>(moves)][static_cast<uint32_t>(ups)];
    }
    return total;
}

std::string u128_to_string(unsigned __int128 value) {
    if (value == 0) return "0";
    std::string out;
    while (value > 0) {
        out.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
        value /= 10;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

}  // namespace sigma
