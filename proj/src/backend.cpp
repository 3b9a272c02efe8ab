#include "synapse/backend.hpp"

#include <stdexcept>

namespace synapse {

std::uint32_t plumbed_sample_count(const PassingProbabilityModel& model,
                                   const SynapseQuery& q,
                                   std::uint64_t query_seed) {
    if (q.input == 0) return 0;
    Rng rng(query_seed);
    return binomial_count(q.samples, passing_probability(model, q.field_mT),
                          rng);
}

void InProcessBackend::sample_counts(std::span<const SynapseQuery> queries,
                                     std::span<std::uint32_t> counts,
                                     Rng& rng) {
    if (queries.size() != counts.size())
        throw std::invalid_argument("sample_counts: size mismatch");
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const SynapseQuery& q = queries[i];
        if (q.samples < 1)
            throw std::invalid_argument("sample_counts: samples must be >= 1");
        if (plumb_seed_) {
            counts[i] = plumbed_sample_count(
                model_, q, plumbed_query_seed(*plumb_seed_, query_counter_++));
        } else if (q.input == 0) {
            counts[i] = 0;  // no randomness consumed
        } else {
            counts[i] = binomial_count(
                q.samples, passing_probability(model_, q.field_mT), rng);
        }
    }
}

}  // namespace synapse
