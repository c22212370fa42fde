#pragma once

#include <cstdint>
#include <random>

namespace scldgm {

// splitmix64 finalizer; maps correlated inputs onto well-spread 64-bit values.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Collapses (seed, stream, substream) into one engine seed. Streams of the
// same master seed are independent for all practical purposes; every sampled
// object records the pair it was drawn from so runs replay exactly.
inline uint64_t derive_seed(uint64_t seed, uint64_t stream, uint64_t substream = 0) {
    uint64_t h = mix64(seed);
    h = mix64(h ^ mix64(stream ^ 0x7f4a7c15ULL));
    h = mix64(h ^ mix64(substream ^ 0x1ce4e5b9ULL));
    return h;
}

class Rng {
public:
    explicit Rng(uint64_t raw_seed) : eng_(raw_seed) {}

    static Rng stream(uint64_t seed, uint64_t stream_id, uint64_t substream = 0) {
        return Rng(derive_seed(seed, stream_id, substream));
    }

    std::mt19937_64& engine() { return eng_; }

    uint64_t next_u64() { return eng_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // [0, n) by 128-bit multiply-shift; the residual bias of < n/2^64 is far
    // below any Monte-Carlo resolution used here.
    uint32_t uniform_index(uint32_t n) {
        return static_cast<uint32_t>(
            (static_cast<unsigned __int128>(eng_()) * n) >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

    int fair_bit() { return static_cast<int>(eng_() & 1u); }

    // +1 or -1 with equal probability
    int sign() { return fair_bit() ? -1 : 1; }

    int poisson(double mean) {
        return std::poisson_distribution<int>(mean)(eng_);
    }

private:
    std::mt19937_64 eng_;
};

} // namespace scldgm
