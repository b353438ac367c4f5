#include "sigma/stats.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace sigma {

namespace {

// Series representation of P(a, x), valid and fast for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double term = sum;
    for (int n = 0; n < 500; n++) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q(a, x), valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; i++) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw std::invalid_argument("gamma_p: requires a > 0 and x >= 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw std::invalid_argument("gamma_q: requires a > 0 and x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

double chi_square_sf(double stat, double df) {
    if (!(df > 0.0)) throw std::invalid_argument("chi_square_sf: df must be positive");
    if (stat <= 0.0) return 1.0;
    return gamma_q(df / 2.0, stat / 2.0);
}

ChiSquareResult chi_square_test(std::span<const int64_t> observed, std::span<const double> expected_probs) {
    if (observed.size() != expected_probs.size() || observed.empty())
        throw std::invalid_argument("chi_square_test: size mismatch or empty input");
    int64_t total = 0;
    for (int64_t o : observed) {
        if (o < 0) throw std::invalid_argument("chi_square_test: negative count");
        total += o;
    }
    if (total == 0) throw std::invalid_argument("chi_square_test: no observations");

    ChiSquareResult r;
    size_t live_cells = 0;
    for (size_t i = 0; i < observed.size(); i++) {
        const double e = expected_probs[i] * static_cast<double>(total);
        if (expected_probs[i] <= 0.0) {
            if (observed[i] != 0)
                throw std::invalid_argument("chi_square_test: observation in zero-probability cell");
            continue;
        }
        live_cells++;
        const double diff = static_cast<double>(observed[i]) - e;
        r.stat += diff * diff / e;
    }
    if (live_cells < 2) throw std::invalid_argument("chi_square_test: fewer than two live cells");
    r.df = static_cast<double>(live_cells - 1);
    r.p_value = chi_square_sf(r.stat, r.df);
    return r;
}

std::string fnv1a_hex(std::string_view data) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace sigma
