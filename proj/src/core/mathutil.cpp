#include "core/mathutil.hpp"

#include <stdexcept>

namespace scldgm {

double binary_entropy_inv_bits(double y) {
    if (y < 0.0 || y > 1.0) throw std::invalid_argument("binary_entropy_inv_bits: y outside [0,1]");
    if (y == 0.0) return 0.0;
    if (y == 1.0) return 0.5;
    double lo = 0.0, hi = 0.5;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (binary_entropy_bits(mid) < y)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

JackknifeResult jackknife_blocks(const std::vector<double>& block_sums,
                                 const std::vector<double>& block_counts) {
    size_t B = block_sums.size();
    JackknifeResult r;
    double total = 0.0, count = 0.0;
    for (size_t i = 0; i < B; ++i) {
        total += block_sums[i];
        count += block_counts[i];
    }
    if (count <= 0.0) return r;
    r.mean = total / count;
    if (B < 2) return r;
    // leave-one-out means
    std::vector<double> loo(B);
    double loo_mean = 0.0;
    for (size_t i = 0; i < B; ++i) {
        double c = count - block_counts[i];
        loo[i] = c > 0.0 ? (total - block_sums[i]) / c : r.mean;
        loo_mean += loo[i];
    }
    loo_mean /= static_cast<double>(B);
    double ss = 0.0;
    for (size_t i = 0; i < B; ++i) {
        double d = loo[i] - loo_mean;
        ss += d * d;
    }
    double nb = static_cast<double>(B);
    r.std_error = std::sqrt((nb - 1.0) / nb * ss);
    return r;
}

} // namespace scldgm
