// Seedable, splittable PRNG. splitmix64 core with Box-Muller normals;
// fully deterministic for a given seed, independent of platform libc.
#pragma once

#include <cmath>
#include <cstdint>

namespace antgan {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n) {
        // 128-bit multiply-shift; slight modulo bias is irrelevant here
        // (n is always tiny compared to 2^64) and the mapping is deterministic.
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller. Two uniforms per draw, no cached spare,
    // so the stream position depends only on the number of calls.
    double normal() {
        const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    // Child generator with an independent-looking stream.
    Rng split() {
        return Rng(next_u64() ^ 0xd1b54a32d192ed03ULL);
    }

    // Stream derived from (seed, tag) without consuming any state. Used where
    // two processes must agree on a stream (e.g. the train/test split).
    static Rng derive(std::uint64_t seed, std::uint64_t tag) {
        Rng r(seed ^ (tag * 0x9e3779b97f4a7c15ULL));
        r.next_u64();
        return r;
    }

private:
    std::uint64_t state_;
};

}  // namespace antgan
