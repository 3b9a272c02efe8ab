#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace synapse {

/// All randomness flows through explicitly seeded mt19937_64 streams.
/// Distribution sampling is implemented here rather than with the
/// <random> distribution classes, whose output is implementation
/// defined; these samplers are bit-exact across standard libraries.
using Rng = std::mt19937_64;

/// splitmix64 finalizer, used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives a child seed from (master seed, purpose label, index).
/// The label is hashed with FNV-1a; the triple is folded through
/// mix64 so that distinct purposes give independent streams.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t index = 0);

inline Rng make_stream(std::uint64_t master, std::string_view label,
                       std::uint64_t index = 0) {
    return Rng(derive_seed(master, label, index));
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(double p, Rng& rng) { return uniform01(rng) < p; }

/// Unbiased integer in [0, n) via rejection.
std::uint64_t uniform_below(std::uint64_t n, Rng& rng);

/// Standard normal deviate (Box-Muller, one value per call).
double gaussian(Rng& rng);

/// Exact Binomial(n, p) count. Uses CDF inversion on chunks of at
/// most 64 trials so (1-p)^n never underflows; the sum of chunk
/// counts has exactly the Binomial(n, p) law.
std::uint32_t binomial_count(std::uint32_t n, double p, Rng& rng);

/// Deterministic Fisher-Yates shuffle.
template <typename T>
void shuffle_indices(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(uniform_below(i, rng));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace synapse
