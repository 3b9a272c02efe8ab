#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "synapse/random.hpp"

namespace synapse {

/// Calibrated passing-probability curve of a single domain-wall
/// synapse: f(h) = d + (1-d) / (1 + exp(-delta * (h - h0))).
/// Defaults are the measured device fit.
struct PassingProbabilityModel {
    double d = 0.0219;          ///< low-field floor probability
    double h0_mT = 4.63;        ///< field centre [mT]
    double delta_per_mT = 2.73; ///< sigmoid steepness [1/mT]

    /// Throws std::invalid_argument unless 0 <= d < 0.5 and delta > 0.
    void validate() const;
};

/// Fields below/above this window are physically suspect (the wire
/// nucleates free domain walls above ~10.7 mT); callers may warn but
/// nothing in the library ever clamps.
inline constexpr double kPhysicalFieldMinMT = 0.0;
inline constexpr double kPhysicalFieldMaxMT = 10.0;

/// f(h). Monotone increasing, range [d, 1). Throws std::domain_error
/// for non-finite h.
double passing_probability(const PassingProbabilityModel& model, double h_mT);

/// df/dh = (1-d) * delta * s * (1-s) with s the plain logistic.
double passing_probability_derivative(const PassingProbabilityModel& model,
                                      double h_mT);

/// Inverse of passing_probability. Requires d < p < 1; throws
/// std::out_of_range otherwise (the floor d makes lower p unreachable).
double field_for_probability(const PassingProbabilityModel& model, double p);

/// One synapse draw: 0 deterministically when x = 0 (no randomness
/// consumed), otherwise Bernoulli(f(h)).
int sample_synapse(const PassingProbabilityModel& model, double h_mT, int x,
                   Rng& rng);

/// Mean of K draws, on the grid {0, 1/K, ..., 1}. Uses a single exact
/// binomial count per call; distributionally identical to K explicit
/// draws of sample_synapse.
double sample_mean_weight(const PassingProbabilityModel& model, double h_mT,
                          int x, std::uint32_t k, Rng& rng);

/// The literal per-sample path (used by the device emulator, which
/// must produce individual bits).
std::vector<std::uint8_t> sample_synapse_bits(
    const PassingProbabilityModel& model, double h_mT, int x, std::uint32_t k,
    Rng& rng);

/// Calibration file I/O: JSON {"d":..., "h0_mT":..., "delta_per_mT":...}.
void save_calibration(const std::filesystem::path& path,
                      const PassingProbabilityModel& model);
PassingProbabilityModel load_calibration(const std::filesystem::path& path);

}  // namespace synapse
