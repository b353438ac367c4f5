#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace sigma {

// Regularized lower incomplete gamma P(a, x); series expansion for x < a + 1,
// continued fraction otherwise.
double gamma_p(double a, double x);

// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

// P(X > stat) for X chi-square distributed with df degrees of freedom.
double chi_square_sf(double stat, double df);

struct ChiSquareResult {
    double stat = 0.0;
    double df = 0.0;
    double p_value = 1.0;
};

// Goodness-of-fit test of observed counts against expected cell probabilities.
// Cells with expected probability 0 must have 0 observed count.
ChiSquareResult chi_square_test(std::span<const int64_t> observed, std::span<const double> expected_probs);

// FNV-1a 64-bit hash of a byte string, as 16 hex digits. Used to fingerprint
// configuration payloads in run manifests.
std::string fnv1a_hex(std::string_view data);

}  // namespace sigma
