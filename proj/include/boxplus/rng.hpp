#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace boxplus {

// Scrambler used to expand a seed into generator state (Steele, Lea &
// Flood's SplitMix64). Consecutive or bit-sparse seeds come out unrelated.
inline std::uint64_t splitmix64_next(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/**
 * xoshiro256++ (Blackman & Vigna) with an explicit seeding and stream
 * discipline, so every random quantity in the library is reproducible
 * bit for bit from a master seed.
 *
 * Streams: the stream for the k-th sample of a run is
 * Rng::stream(master_seed, k), which seeds from master_seed XOR k and
 * then scrambles through SplitMix64. Consumers must never share one Rng
 * across logically independent samples; taking a fresh stream per index
 * is what makes sample k identical whether 10 or 10000 samples are drawn.
 *
 * Gaussians use our own Box-Muller rather than std::normal_distribution,
 * whose algorithm is implementation defined and would break bit-level
 * reproducibility of dumps across standard libraries.
 */
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        for (auto& word : s_) word = splitmix64_next(seed);
    }

    static Rng stream(std::uint64_t master_seed, std::uint64_t index) {
        return Rng(master_seed ^ index);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0,1) with 53 random bits.
    double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n), n > 0. Modulo bias is < n / 2^64,
    // irrelevant for the subsampling this library does.
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller; the second variate of each pair is
    // cached, so draws come in deterministic order.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * uniform01();
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Standard complex normal, E z = 0, E|z|^2 = 1.
    std::complex<double> normal_complex() {
        const double c = 0.70710678118654752440;  // 1/sqrt(2)
        const double re = normal();
        const double im = normal();
        return {c * re, c * im};
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace boxplus
