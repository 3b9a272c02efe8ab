#include "synapse/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace synapse {

std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t index) {
    // FNV-1a over the label bytes.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return mix64(mix64(master ^ h) ^ index);
}

std::uint64_t uniform_below(std::uint64_t n, Rng& rng) {
    if (n == 0) throw std::invalid_argument("uniform_below: n must be > 0");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

double gaussian(Rng& rng) {
    double u1;
    do {
        u1 = uniform01(rng);
    } while (u1 <= 0.0);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

// CDF inversion for n <= 64. p <= 0.5 is enforced by reflection so
// the starting pmf (1-p)^n stays far from the double underflow range.
std::uint32_t binomial_small(std::uint32_t n, double p, Rng& rng) {
    if (p > 0.5) return n - binomial_small(n, 1.0 - p, rng);
    if (p <= 0.0) return 0;
    const double u = uniform01(rng);
    const double ratio = p / (1.0 - p);
    double pmf = std::pow(1.0 - p, static_cast<double>(n));
    double cdf = pmf;
    std::uint32_t k = 0;
    while (u > cdf && k < n) {
        pmf *= ratio * static_cast<double>(n - k) / static_cast<double>(k + 1);
        ++k;
        cdf += pmf;
    }
    return k;
}

}  // namespace

std::uint32_t binomial_count(std::uint32_t n, double p, Rng& rng) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("binomial_count: p outside [0, 1]");
    if (p == 0.0 || n == 0) return 0;
    if (p == 1.0) return n;
    std::uint32_t total = 0;
    while (n > 64) {
        total += binomial_small(64, p, rng);
        n -= 64;
    }
    return total + binomial_small(n, p, rng);
}

}  // namespace synapse
