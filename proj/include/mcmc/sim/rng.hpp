#pragma once
//
// Per-realization random streams. Stream k of a run with seed s is an
// mt19937_64 seeded from SplitMix64(s, k), so a realization draws the same
// numbers no matter which thread runs it or in what order.

#include <cstdint>
#include <random>

namespace mcmc::sim {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

using Engine = std::mt19937_64;

inline Engine stream(std::uint64_t seed, std::uint64_t index) {
    return Engine(splitmix64(splitmix64(seed) ^ (index * 0xd1b54a32d192ed03ULL + 1)));
}

}  // namespace mcmc::sim
