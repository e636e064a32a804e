#pragma once

// Counter-keyed random streams.
//
// Every random draw in the library comes from a stream identified by a
// (seed, particle, step, tag) tuple. The tuple is hashed into the state of a
// small xoshiro256++ generator, so the numbers a particle sees at a given step
// do not depend on how the particles are scheduled across threads.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace levymv {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Mixes an arbitrary list of words into a single 64-bit key.
inline constexpr std::uint64_t mix_key(std::initializer_list<std::uint64_t> words) noexcept {
    std::uint64_t state = 0x6A09E667F3BCC909ULL;
    std::uint64_t h = 0;
    for (auto w : words) {
        state ^= w + 0x9E3779B97F4A7C15ULL + (state << 6) + (state >> 2);
        h = splitmix64(state);
        state = h;
    }
    return h;
}

/// xoshiro256++ satisfying UniformRandomBitGenerator.
class Xoshiro256pp {
public:
    using result_type = std::uint64_t;

    explicit constexpr Xoshiro256pp(std::uint64_t key) noexcept {
        std::uint64_t sm = key;
        for (auto& w : s_) w = splitmix64(sm);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
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

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }
    std::array<std::uint64_t, 4> s_{};
};

using Rng = Xoshiro256pp;

/// Stream purposes. Distinct tags keep e.g. initial positions and driver
/// increments of the same particle statistically independent.
enum class StreamTag : std::uint64_t {
    initial_position = 1,
    driver_increment = 2,
    reference = 3,
    experiment = 4,
    probe = 5,
};

inline Rng substream(std::uint64_t seed, std::uint64_t particle, std::uint64_t step, StreamTag tag) noexcept {
    return Rng(mix_key({seed, static_cast<std::uint64_t>(tag), particle, step}));
}

/// Uniform on the open interval (0, 1).
template <class G>
inline double uniform_open01(G& g) {
    return (static_cast<double>(g() >> 11) + 0.5) * 0x1.0p-53;
}

template <class G>
inline double uniform_real(G& g, double lo, double hi) {
    return lo + (hi - lo) * uniform_open01(g);
}

template <class G>
inline double standard_exponential(G& g) {
    return -std::log(uniform_open01(g));
}

template <class G>
inline double standard_normal(G& g) {
    std::normal_distribution<double> nd(0.0, 1.0);
    return nd(g);
}

template <class G>
inline std::uint64_t poisson_count(G& g, double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<std::uint64_t> pd(mean);
    return pd(g);
}

} // namespace levymv
