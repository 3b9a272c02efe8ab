#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "synapse/device_model.hpp"
#include "synapse/random.hpp"

namespace synapse {

/// One synapse interrogation: `samples` draws of the synapse at
/// `field_mT` with the given binary input.
struct SynapseQuery {
    double field_mT;
    std::uint8_t input;
    std::uint32_t samples;
};

/// Where synapse bits come from. The forward pass only needs the
/// number of 1-bits per query; the remote implementation receives the
/// individual bits over the wire and sums them client-side.
class SynapseBackend {
  public:
    virtual ~SynapseBackend() = default;

    /// Fills counts[i] with the number of 1-bits over queries[i].samples
    /// draws. Implementations either consume `rng` sequentially or
    /// derive their own per-query streams (seed plumbing).
    virtual void sample_counts(std::span<const SynapseQuery> queries,
                               std::span<std::uint32_t> counts, Rng& rng) = 0;
};

/// Simulated device: exact binomial sampling in-process.
class InProcessBackend final : public SynapseBackend {
  public:
    explicit InProcessBackend(PassingProbabilityModel model)
        : model_(model) {}

    /// Seed-plumbed mode: every query gets its own stream derived from
    /// (base_seed, running query counter), ignoring the forward rng.
    /// A remote backend plumbed with the same base seed produces
    /// bit-identical counts.
    static InProcessBackend seed_plumbed(PassingProbabilityModel model,
                                         std::uint64_t base_seed) {
        InProcessBackend b(model);
        b.plumb_seed_ = base_seed;
        return b;
    }

    void sample_counts(std::span<const SynapseQuery> queries,
                       std::span<std::uint32_t> counts, Rng& rng) override;

  private:
    PassingProbabilityModel model_;
    std::optional<std::uint64_t> plumb_seed_;
    std::uint64_t query_counter_ = 0;
};

/// Derivation used by both ends of the seed-plumbed path.
inline std::uint64_t plumbed_query_seed(std::uint64_t base_seed,
                                        std::uint64_t counter) {
    return derive_seed(base_seed, "synapse-query", counter);
}

/// The count algorithm shared by the in-process backend and the
/// seed-plumbed server path.
std::uint32_t plumbed_sample_count(const PassingProbabilityModel& model,
                                   const SynapseQuery& q,
                                   std::uint64_t query_seed);

}  // namespace synapse
