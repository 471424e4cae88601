#pragma once

#include <cstdint>

namespace imgk {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based stream split: the seed of child `index` of `parent`.
///
/// Children of one parent are a pure function of (parent, index), so a
/// run's seed never depends on which other runs executed or in what order.
/// Nested splits (e.g. per-k then per-restart) compose by calling this twice.
constexpr std::uint64_t split_seed(std::uint64_t parent, std::uint64_t index) noexcept {
    return mix64(mix64(parent) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

}  // namespace imgk
