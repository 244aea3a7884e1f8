#pragma once

// Deterministic random streams.
//
// Every stochastic step draws from SplitMix64: state += 0x9E3779B97F4A7C15,
// output = mix64(state) (Stafford variant 13 finalizer). No std:: engines or
// distributions are used.
//
// Independent streams are keyed by (seed, label, index) through stream_seed(),
// so a result never depends on the order in which streams are consumed.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>
#include <utility>

namespace entrain::rng {

inline constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// 64-bit FNV-1a over the UTF-8 bytes of a label.
constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : text) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Seed for the stream identified by (seed, label, index):
//   mix64(mix64(seed) ^ mix64(fnv1a64(label) + golden_gamma * (index + 1)))
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::string_view label,
                                    std::uint64_t index) noexcept {
    return mix64(mix64(seed) ^ mix64(fnv1a64(label) + golden_gamma * (index + 1)));
}

class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    constexpr result_type operator()() noexcept {
        state_ += golden_gamma;
        return mix64(state_);
    }

    // Uniform integer in [0, bound), bound > 0. Rejection sampling on the low
    // end removes modulo bias: draws below 2^64 mod bound are discarded.
    constexpr std::uint64_t uniform_below(std::uint64_t bound) noexcept {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = (*this)();
            if (r >= threshold) {
                return r % bound;
            }
        }
    }

    // Uniform double in [0, 1) with 53 random bits.
    constexpr double uniform01() noexcept {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    // Standard normal deviate, Box-Muller (one value per call, two uniforms).
    double normal() noexcept {
        double u1 = uniform01();
        while (u1 <= 0.0) {
            u1 = uniform01();
        }
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Normal deviate redrawn until |z| <= limit.
    double truncated_normal(double limit) noexcept {
        for (;;) {
            const double z = normal();
            if (std::abs(z) <= limit) {
                return z;
            }
        }
    }

private:
    std::uint64_t state_;
};

// Partial Fisher-Yates: moves a uniform sample of min(k, n) elements, drawn
// without replacement, to the front of `items` and returns how many were
// taken. For i = 0..k-1: j = i + uniform_below(n - i); swap(items[i], items[j]).
// When k >= n nothing is drawn and the whole range is returned in its
// original order.
template <typename T>
std::size_t sample_front(std::span<T> items, std::size_t k, SplitMix64& gen) {
    const std::size_t n = items.size();
    if (k >= n) {
        return n;
    }
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(gen.uniform_below(n - i));
        using std::swap;
        swap(items[i], items[j]);
    }
    return k;
}

} // namespace entrain::rng
