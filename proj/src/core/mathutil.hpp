#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace scldgm {

// ln cosh(x), safe for large |x|.
inline double log_cosh(double x) {
    double ax = std::fabs(x);
    return ax + std::log1p(std::exp(-2.0 * ax)) - M_LN2;
}

// ln(1 + tanh(x)); equals x - ln cosh(x), stays finite for x -> -inf.
inline double log1p_tanh(double x) { return x - log_cosh(x); }

// ln(1 + tanh(a) tanh(b)) = ln cosh(a+b) - ln cosh(a) - ln cosh(b).
inline double log1p_tanh_prod(double a, double b) {
    return log_cosh(a + b) - log_cosh(a) - log_cosh(b);
}

inline double binary_entropy_nats(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
}

inline double binary_entropy_bits(double p) {
    return binary_entropy_nats(p) / M_LN2;
}

// Inverse of the binary entropy (bits) restricted to [0, 1/2].
double binary_entropy_inv_bits(double y);

// Running mean / standard error accumulator.
struct Welford {
    long long n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }

    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double stddev() const { return std::sqrt(variance()); }
    double std_error() const { return n > 0 ? stddev() / std::sqrt(static_cast<double>(n)) : 0.0; }
};

// Jackknife mean and standard error over pre-aggregated block sums.
// block_sums[i] holds the sum of block i, block_counts[i] its sample count.
struct JackknifeResult {
    double mean = 0.0;
    double std_error = 0.0;
};
JackknifeResult jackknife_blocks(const std::vector<double>& block_sums,
                                 const std::vector<double>& block_counts);

} // namespace scldgm
