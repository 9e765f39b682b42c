#pragma once

#include <cstdint>
#include <limits>

namespace dds {

inline constexpr std::uint64_t kDefaultSeed = 0xD1617;

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ with substreams keyed by (seed, stream).
///
/// Every trial/point/level draws from its own (seed, index) stream, so
/// results do not depend on the order in which trials run.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = kDefaultSeed, std::uint64_t stream = 0) noexcept {
        std::uint64_t sm = seed;
        const std::uint64_t key = splitmix64(sm);
        std::uint64_t st = key ^ (stream * 0xD2B74407B1CE6E93ULL + 0x8BB84B93962EACC9ULL);
        for (auto& w : s_) w = splitmix64(st);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
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

    /// Uniform double strictly inside (0, 1).
    double uniform_open() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n), n >= 1 (Lemire's nearly-divisionless method).
    std::uint64_t below(std::uint64_t n) noexcept {
        using u128 = unsigned __int128;
        std::uint64_t x = (*this)();
        u128 m = u128(x) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                x = (*this)();
                m = u128(x) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4]{};
};

}  // namespace dds
