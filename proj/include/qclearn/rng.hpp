#pragma once

#include <cstdint>

namespace qclearn {

// Counter-based SplitMix64 stream. A stream is a pure function of
// (seed, index): the initial state is fmix64(seed) advanced by
// index + 1 golden-ratio increments, so distinct (seed, index) pairs give
// statistically independent substreams. The generator is fixed by this
// header and does not depend on the standard library, so byte streams are
// stable across platforms and compiler versions.
class Rng {
  public:
    explicit Rng(std::uint64_t state) : state_(state) {}

    static std::uint64_t fmix64(std::uint64_t x) {
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ull;
        x ^= x >> 27;
        x *= 0x94d049bb133111ebull;
        x ^= x >> 31;
        return x;
    }

    static Rng for_stream(std::uint64_t seed, std::uint64_t index) {
        return Rng(fmix64(seed) + kGamma * (index + 1));
    }

    std::uint64_t next_u64() {
        state_ += kGamma;
        return fmix64(state_);
    }

    // Unbiased integer in [0, bound). Lemire's multiply-shift with rejection.
    std::uint64_t next_below(std::uint64_t bound) {
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < bound) {
            std::uint64_t threshold = (0 - bound) % bound;
            while (lo < threshold) {
                m = static_cast<unsigned __int128>(next_u64()) * bound;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Unbiased integer in [0, bound) for bounds up to 2^127. Plain
    // mask-and-reject; needed for layer-configuration indices at large N.
    unsigned __int128 next_below_u128(unsigned __int128 bound) {
        int bits = 0;
        for (unsigned __int128 b = bound - 1; b != 0; b >>= 1) ++bits;
        const unsigned __int128 mask =
            bits >= 128 ? ~static_cast<unsigned __int128>(0)
                        : (static_cast<unsigned __int128>(1) << bits) - 1;
        for (;;) {
            unsigned __int128 v = static_cast<unsigned __int128>(next_u64());
            if (bits > 64) v = (v << 64) | next_u64();
            v &= mask;
            if (v < bound) return v;
        }
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller (uses two uniforms per call, no caching,
    // so the draw sequence stays easy to reason about).
    double next_normal();

  private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;
    std::uint64_t state_;
};

}  // namespace qclearn
