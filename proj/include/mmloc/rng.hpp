#pragma once

#include <cstdint>
#include <random>

namespace mmloc {

// splitmix64 finalizer; decorrelates child seeds derived from (master, index).
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Child generator for a given stream index. Parallel loops draw from
// per-index children so the schedule cannot change the results.
inline std::mt19937_64 child_rng(std::uint64_t master, std::uint64_t index) {
    return std::mt19937_64(mix64(master ^ mix64(index)));
}

}  // namespace mmloc
