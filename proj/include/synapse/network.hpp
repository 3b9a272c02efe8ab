#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "synapse/backend.hpp"
#include "synapse/device_model.hpp"

namespace synapse {

/// Trainable parameters of the single-layer stochastic perceptron:
/// one propagation field per (class, input) synapse plus a real
/// valued, noiseless bias per class.
struct SynapseFieldNetwork {
    std::size_t classes = 0;
    std::size_t inputs = 0;
    std::vector<double> fields_mT;  ///< classes x inputs, row-major
    std::vector<double> biases;     ///< length classes

    double& field(std::size_t i, std::size_t j) {
        return fields_mT[i * inputs + j];
    }
    double field(std::size_t i, std::size_t j) const {
        return fields_mT[i * inputs + j];
    }

    /// All fields set so the passing probability equals p0 (default
    /// 0.5, the maximal single-sample variance point); biases zero.
    static SynapseFieldNetwork initialized(std::size_t classes,
                                           std::size_t inputs,
                                           const PassingProbabilityModel& model,
                                           double p0 = 0.5);

    void validate() const;
};

/// Per-neuron forward moments; xi is only meaningful after a sampled
/// forward (zero otherwise).
struct OutputStats {
    std::vector<double> mu;      ///< includes bias
    std::vector<double> sigma2;  ///< bias-free (bias is noiseless)
    std::vector<double> xi;      ///< (y - mu) / sigma, 0 where sigma ~ 0
};

struct ForwardResult {
    std::vector<double> y;
    OutputStats stats;
    std::uint32_t samples = 0;
};

/// Below this, sigma is treated as exactly zero: xi = 0 and the
/// variance factor drops out of the update rule.
inline constexpr double kSigmaFloor = 1e-12;

/// Stochastic forward: y_i = sum_j wbar_ij x_j + b_i with mean weights
/// from the backend (K draws each). Queries are issued class-major
/// over the active inputs only.
ForwardResult forward_sampled(const SynapseFieldNetwork& net,
                              const PassingProbabilityModel& model,
                              std::span<const std::uint8_t> x, std::uint32_t k,
                              SynapseBackend& backend, Rng& rng);

/// Closed-form moments; consumes no randomness.
OutputStats forward_stats(const SynapseFieldNetwork& net,
                          const PassingProbabilityModel& model,
                          std::span<const std::uint8_t> x, std::uint32_t k);

/// Deterministic continuous-weight forward (the K -> infinity limit).
std::vector<double> forward_mean_field(const SynapseFieldNetwork& net,
                                       const PassingProbabilityModel& model,
                                       std::span<const std::uint8_t> x);

struct LossGrad {
    double loss;
    std::vector<double> grad;  ///< dE/dy = softmax(y) - onehot(label)
};

/// Cross-entropy of softmax(y) against the label, max-subtracted.
LossGrad softmax_cross_entropy(std::span<const double> y, std::size_t label);

/// Argmax with lowest-index tie break.
std::size_t argmax_class(std::span<const double> y);

/// Number of fields outside [kPhysicalFieldMinMT, kPhysicalFieldMaxMT].
std::size_t fields_outside_physical_range(const SynapseFieldNetwork& net);

}  // namespace synapse
