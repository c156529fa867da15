#pragma once

#include <cstdint>
#include <random>

namespace obstacle_ldp {

/// SplitMix64 finalizer; maps (master, stream) pairs to well-separated seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of stream `index` under `master`. Independent of evaluation order, so
/// parallel workers can draw their streams in any order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0xD1B54A32D192ED03ULL));
}

using Rng = std::mt19937_64;

}  // namespace obstacle_ldp
