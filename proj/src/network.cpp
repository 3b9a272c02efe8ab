#include "synapse/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace synapse {

SynapseFieldNetwork SynapseFieldNetwork::initialized(
    std::size_t classes, std::size_t inputs,
    const PassingProbabilityModel& model, double p0) {
    if (classes < 1 || inputs < 1)
        throw std::invalid_argument("network shape must be at least 1x1");
    SynapseFieldNetwork net;
    net.classes = classes;
    net.inputs = inputs;
    net.fields_mT.assign(classes * inputs, field_for_probability(model, p0));
    net.biases.assign(classes, 0.0);
    return net;
}

void SynapseFieldNetwork::validate() const {
    if (classes < 1 || inputs < 1 || fields_mT.size() != classes * inputs ||
        biases.size() != classes)
        throw std::invalid_argument("network shape mismatch");
    for (double h : fields_mT)
        if (!std::isfinite(h))
            throw std::invalid_argument("network contains non-finite field");
    for (double b : biases)
        if (!std::isfinite(b))
            throw std::invalid_argument("network contains non-finite bias");
}

namespace {
void check_input(const SynapseFieldNetwork& net,
                 std::span<const std::uint8_t> x) {
    if (x.size() != net.inputs)
        throw std::invalid_argument("input length does not match network");
}
}  // namespace

ForwardResult forward_sampled(const SynapseFieldNetwork& net,
                              const PassingProbabilityModel& model,
                              std::span<const std::uint8_t> x, std::uint32_t k,
                              SynapseBackend& backend, Rng& rng) {
    check_input(net, x);
    if (k < 1) throw std::invalid_argument("K must be >= 1");

    std::vector<std::size_t> active;
    active.reserve(x.size());
    for (std::size_t j = 0; j < x.size(); ++j)
        if (x[j]) active.push_back(j);

    std::vector<SynapseQuery> queries;
    queries.reserve(active.size() * net.classes);
    for (std::size_t i = 0; i < net.classes; ++i)
        for (std::size_t j : active)
            queries.push_back({net.field(i, j), 1, k});

    std::vector<std::uint32_t> counts(queries.size());
    backend.sample_counts(queries, counts, rng);

    ForwardResult result;
    result.samples = k;
    result.stats = forward_stats(net, model, x, k);
    result.y.resize(net.classes);
    result.stats.xi.assign(net.classes, 0.0);
    std::size_t q = 0;
    for (std::size_t i = 0; i < net.classes; ++i) {
        double sum = 0.0;
        for (std::size_t a = 0; a < active.size(); ++a)
            sum += static_cast<double>(counts[q++]);
        result.y[i] = sum / static_cast<double>(k) + net.biases[i];
        const double sigma = std::sqrt(result.stats.sigma2[i]);
        result.stats.xi[i] =
            sigma < kSigmaFloor ? 0.0
                                : (result.y[i] - result.stats.mu[i]) / sigma;
    }
    return result;
}

OutputStats forward_stats(const SynapseFieldNetwork& net,
                          const PassingProbabilityModel& model,
                          std::span<const std::uint8_t> x, std::uint32_t k) {
    check_input(net, x);
    if (k < 1) throw std::invalid_argument("K must be >= 1");
    OutputStats stats;
    stats.mu.resize(net.classes);
    stats.sigma2.resize(net.classes);
    stats.xi.assign(net.classes, 0.0);
    for (std::size_t i = 0; i < net.classes; ++i) {
        double mu = 0.0, var = 0.0;
        for (std::size_t j = 0; j < net.inputs; ++j) {
            if (!x[j]) continue;
            const double f = passing_probability(model, net.field(i, j));
            mu += f;
            var += f * (1.0 - f);
        }
        stats.mu[i] = mu + net.biases[i];
        stats.sigma2[i] = var / static_cast<double>(k);
    }
    return stats;
}

std::vector<double> forward_mean_field(const SynapseFieldNetwork& net,
                                       const PassingProbabilityModel& model,
                                       std::span<const std::uint8_t> x) {
    return forward_stats(net, model, x, 1).mu;
}

LossGrad softmax_cross_entropy(std::span<const double> y, std::size_t label) {
    if (label >= y.size()) throw std::invalid_argument("label out of range");
    const double ymax = *std::max_element(y.begin(), y.end());
    double z = 0.0;
    LossGrad out;
    out.grad.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        out.grad[i] = std::exp(y[i] - ymax);
        z += out.grad[i];
    }
    for (auto& g : out.grad) g /= z;
    out.loss = -std::log(out.grad[label]);
    out.grad[label] -= 1.0;
    return out;
}

std::size_t argmax_class(std::span<const double> y) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < y.size(); ++i)
        if (y[i] > y[best]) best = i;
    return best;
}

std::size_t fields_outside_physical_range(const SynapseFieldNetwork& net) {
    std::size_t n = 0;
    for (double h : net.fields_mT)
        if (h < kPhysicalFieldMinMT || h > kPhysicalFieldMaxMT) ++n;
    return n;
}

}  // namespace synapse
