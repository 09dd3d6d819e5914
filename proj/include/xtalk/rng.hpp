// rng.hpp — Counter-based deterministic random streams.
//
// Every draw is a pure function of (key, counter), so trajectories can be
// generated in any order (or concurrently) and still reproduce bit-for-bit.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace xtalk {

// SplitMix64 finalizer; full 64-bit avalanche.
inline std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

    // Derive a sub-stream key; chain calls to key by (qubit, axis, trajectory, ...).
    static std::uint64_t derive(std::uint64_t key, std::uint64_t id) noexcept {
        return mix64(key ^ (0xd1b54a32d192ed03ULL + mix64(id)));
    }

    std::uint64_t bits(std::uint64_t counter) const noexcept {
        return mix64(key_ ^ mix64(counter ^ 0x2545f4914f6cdd1dULL));
    }

    // Uniform in (0, 1), never exactly 0 or 1.
    double uniform(std::uint64_t counter) const noexcept {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    // Standard normal via Box-Muller on counter pairs; random access by counter.
    double normal(std::uint64_t counter) const noexcept {
        const std::uint64_t pair = counter >> 1;
        const double u1 = uniform(2 * pair);
        const double u2 = uniform(2 * pair + 1);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        return (counter & 1) ? r * std::sin(a) : r * std::cos(a);
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t counter, std::uint64_t n) const noexcept {
        // 128-bit multiply keeps the modulo bias below 2^-64
        const unsigned __int128 wide =
            static_cast<unsigned __int128>(bits(counter)) * static_cast<unsigned __int128>(n);
        return static_cast<std::uint64_t>(wide >> 64);
    }

    std::uint64_t key() const noexcept { return key_; }

private:
    std::uint64_t key_;
};

}  // namespace xtalk
