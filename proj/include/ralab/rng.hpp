#pragma once

#include <cstdint>
#include <random>

namespace ralab {

// All stochastic entry points take an explicit engine so that every experiment
// is a pure function of its seed.  Sub-streams (per trial, per detector) are
// derived with a splitmix64 hash of (seed, index...) rather than by drawing
// from the parent stream, so inserting a new consumer never shifts existing
// streams.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
    std::uint64_t s = splitmix64(base ^ 0x243f6a8885a308d3ULL);
    s = splitmix64(s ^ a);
    s = splitmix64(s ^ b);
    return splitmix64(s ^ c);
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

} // namespace ralab
