#include <doctest.h>

#include <cmath>

#include "oracle.hpp"
#include "synapse/network.hpp"

using namespace synapse;

namespace {
const PassingProbabilityModel kModel{};

SynapseFieldNetwork two_input_net(double f0, double f1, double bias = 0.0) {
    SynapseFieldNetwork net;
    net.classes = 1;
    net.inputs = 2;
    net.fields_mT = {field_for_probability(kModel, f0),
                     field_for_probability(kModel, f1)};
    net.biases = {bias};
    return net;
}
}  // namespace

TEST_CASE("initialized network sits at the requested probability") {
    const auto net = SynapseFieldNetwork::initialized(10, 196, kModel);
    CHECK(net.fields_mT.size() == 1960);
    for (double h : net.fields_mT)
        CHECK(passing_probability(kModel, h) == doctest::Approx(0.5));
    for (double b : net.biases) CHECK(b == 0.0);
    CHECK_THROWS_AS(SynapseFieldNetwork::initialized(0, 5, kModel),
                    std::invalid_argument);
}

TEST_CASE("all-zero input returns the biases exactly") {
    auto net = SynapseFieldNetwork::initialized(3, 6, kModel);
    net.biases = {0.5, -1.25, 2.0};
    const std::vector<std::uint8_t> x(6, 0);
    InProcessBackend backend(kModel);
    Rng rng(1);
    const ForwardResult fwd = forward_sampled(net, kModel, x, 4, backend, rng);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(fwd.y[i] == net.biases[i]);
        CHECK(fwd.stats.sigma2[i] == 0.0);
        CHECK(fwd.stats.xi[i] == 0.0);
        CHECK(fwd.stats.mu[i] == net.biases[i]);
    }
}

TEST_CASE("sampled forward is bit-identical for a fixed seed") {
    const auto net = SynapseFieldNetwork::initialized(4, 12, kModel);
    std::vector<std::uint8_t> x(12, 0);
    x[1] = x[5] = x[9] = 1;
    InProcessBackend backend(kModel);
    Rng rng_a(77), rng_b(77);
    const ForwardResult a = forward_sampled(net, kModel, x, 8, backend, rng_a);
    const ForwardResult b = forward_sampled(net, kModel, x, 8, backend, rng_b);
    CHECK(a.y == b.y);
    CHECK(a.stats.xi == b.stats.xi);
}

TEST_CASE("forward output respects the hard bounds") {
    const auto net = SynapseFieldNetwork::initialized(2, 8, kModel);
    std::vector<std::uint8_t> x(8, 1);
    InProcessBackend backend(kModel);
    Rng rng(3);
    for (int rep = 0; rep < 100; ++rep) {
        const ForwardResult fwd =
            forward_sampled(net, kModel, x, 2, backend, rng);
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(fwd.y[i] >= net.biases[i]);
            CHECK(fwd.y[i] <= net.biases[i] + 8.0);
        }
    }
}

TEST_CASE("forward_stats closed form, f = (0.2, 0.7), K = 4") {
    const auto net = two_input_net(0.2, 0.7);
    const std::vector<std::uint8_t> x{1, 1};
    const OutputStats stats = forward_stats(net, kModel, x, 4);
    CHECK(stats.mu[0] == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(stats.sigma2[0] == doctest::Approx(0.0925).epsilon(1e-12));

    const auto dist = oracle::exact_neuron_distribution(
        kModel, net.fields_mT, x, 4, 0.0);
    CHECK(dist.mean() == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(dist.variance() == doctest::Approx(0.0925).epsilon(1e-9));
}

TEST_CASE("doubling K halves the variance exactly") {
    const auto net = two_input_net(0.3, 0.6);
    const std::vector<std::uint8_t> x{1, 1};
    const OutputStats s4 = forward_stats(net, kModel, x, 4);
    const OutputStats s8 = forward_stats(net, kModel, x, 8);
    CHECK(s8.sigma2[0] == doctest::Approx(s4.sigma2[0] / 2.0).epsilon(1e-15));
    CHECK(s8.mu[0] == s4.mu[0]);
}

TEST_CASE("stats consume no randomness; zero input gives mu = bias") {
    auto net = two_input_net(0.4, 0.4, 1.5);
    const std::vector<std::uint8_t> x{0, 0};
    const OutputStats stats = forward_stats(net, kModel, x, 3);
    CHECK(stats.mu[0] == 1.5);
    CHECK(stats.sigma2[0] == 0.0);
}

TEST_CASE("sampled mean over many forwards matches the exact mean") {
    // N = 2 active inputs, f = (0.2, 0.7), K = 4: exact mean 0.9
    const auto net = two_input_net(0.2, 0.7);
    const std::vector<std::uint8_t> x{1, 1};
    InProcessBackend backend(kModel);
    Rng rng(41);
    const int n = 100000;
    double total = 0.0;
    for (int i = 0; i < n; ++i)
        total += forward_sampled(net, kModel, x, 4, backend, rng).y[0];
    // exact distribution std is sqrt(0.0925); 4 standard errors
    const double tol = 4.0 * std::sqrt(0.0925 / n);
    CHECK(std::abs(total / n - 0.9) < tol);
}

TEST_CASE("sampled forward variance is unbiased") {
    const auto net = two_input_net(0.35, 0.8, 0.2);
    const std::vector<std::uint8_t> x{1, 1};
    InProcessBackend backend(kModel);
    Rng rng(4242);
    const int n = 100000;
    const std::uint32_t k = 3;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double y = forward_sampled(net, kModel, x, k, backend, rng).y[0];
        sum += y;
        sumsq += y * y;
    }
    const OutputStats stats = forward_stats(net, kModel, x, k);
    const double mean = sum / n;
    const double var = (sumsq - n * mean * mean) / (n - 1);
    CHECK(std::abs(mean - stats.mu[0]) <
          4.0 * std::sqrt(stats.sigma2[0] / n));
    // variance-of-variance tolerance: generous 10% band for 1e5 draws
    CHECK(var == doctest::Approx(stats.sigma2[0]).epsilon(0.1));
}

TEST_CASE("mean-field forward equals stats.mu and the large-K limit") {
    const auto net = two_input_net(0.25, 0.65, -0.4);
    const std::vector<std::uint8_t> x{1, 1};
    const std::vector<double> y = forward_mean_field(net, kModel, x);
    const OutputStats stats = forward_stats(net, kModel, x, 7);
    CHECK(y[0] == doctest::Approx(stats.mu[0]).epsilon(1e-15));

    InProcessBackend backend(kModel);
    Rng rng(8);
    const std::uint32_t k = 4096;
    const ForwardResult fwd = forward_sampled(net, kModel, x, k, backend, rng);
    const double sigma = std::sqrt(forward_stats(net, kModel, x, k).sigma2[0]);
    CHECK(std::abs(fwd.y[0] - y[0]) < 3.0 * sigma + 1e-9);
}

TEST_CASE("single active input with f = 1 gives y = 1 + b") {
    SynapseFieldNetwork net;
    net.classes = 1;
    net.inputs = 1;
    net.fields_mT = {1e3};
    net.biases = {0.75};
    const std::vector<std::uint8_t> x{1};
    CHECK(forward_mean_field(net, kModel, x)[0] ==
          doctest::Approx(1.75).epsilon(1e-12));
}

TEST_CASE("moments match the Poisson-Binomial oracle on random instances") {
    Rng rng(55);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 1 + uniform_below(8, rng);
        const std::uint32_t k =
            static_cast<std::uint32_t>(1 + uniform_below(4, rng));
        SynapseFieldNetwork net;
        net.classes = 1;
        net.inputs = n;
        net.fields_mT.resize(n);
        for (auto& h : net.fields_mT) h = 10.0 * uniform01(rng);
        net.biases = {uniform01(rng)};
        std::vector<std::uint8_t> x(n);
        for (auto& b : x) b = uniform01(rng) < 0.5 ? 1 : 0;
        const OutputStats stats = forward_stats(net, kModel, x, k);
        const auto dist = oracle::exact_neuron_distribution(
            kModel, net.fields_mT, x, k, net.biases[0]);
        CHECK(stats.mu[0] == doctest::Approx(dist.mean()).epsilon(1e-12));
        CHECK(stats.sigma2[0] ==
              doctest::Approx(dist.variance()).epsilon(1e-9));
    }
}

TEST_CASE("xi is standardized over many forwards") {
    const auto net = SynapseFieldNetwork::initialized(1, 50, kModel);
    std::vector<std::uint8_t> x(50, 1);
    InProcessBackend backend(kModel);
    Rng rng(66);
    const int n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double xi =
            forward_sampled(net, kModel, x, 1, backend, rng).stats.xi[0];
        sum += xi;
        sumsq += xi * xi;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("softmax cross-entropy: uniform outputs and simplex identity") {
    const std::vector<double> y(10, 0.3);
    const LossGrad lg = softmax_cross_entropy(y, 4);
    CHECK(lg.loss == doctest::Approx(std::log(10.0)).epsilon(1e-12));
    double total = 0.0;
    for (double g : lg.grad) total += g;
    CHECK(total == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS(softmax_cross_entropy(y, 10), std::invalid_argument);
}

TEST_CASE("softmax gradient matches finite differences") {
    std::vector<double> y{1.2, -0.3, 0.8, 2.5, -1.0};
    const std::size_t label = 2;
    const LossGrad lg = softmax_cross_entropy(y, label);
    const auto fd = oracle::finite_difference(
        [&](std::span<const double> v) {
            return softmax_cross_entropy(v, label).loss;
        },
        y, 1e-6);
    for (std::size_t i = 0; i < y.size(); ++i)
        CHECK(lg.grad[i] == doctest::Approx(fd[i]).epsilon(1e-5));
}

TEST_CASE("softmax is stable for large outputs") {
    const std::vector<double> y{1000.0, 999.0, 998.0};
    const LossGrad lg = softmax_cross_entropy(y, 0);
    CHECK(std::isfinite(lg.loss));
    CHECK(lg.loss < 1.0);
}

TEST_CASE("argmax ties break to the lowest class index") {
    const std::vector<double> y{0.5, 0.9, 0.9, 0.1};
    CHECK(argmax_class(y) == 1);
}

TEST_CASE("shape mismatches are invalid arguments") {
    const auto net = SynapseFieldNetwork::initialized(2, 4, kModel);
    const std::vector<std::uint8_t> x(3, 1);
    InProcessBackend backend(kModel);
    Rng rng(1);
    CHECK_THROWS_AS(forward_sampled(net, kModel, x, 1, backend, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(forward_stats(net, kModel, x, 1), std::invalid_argument);
}

TEST_CASE("physical range audit counts out-of-window fields") {
    auto net = SynapseFieldNetwork::initialized(1, 4, kModel);
    CHECK(fields_outside_physical_range(net) == 0);
    net.fields_mT[0] = -2.0;
    net.fields_mT[3] = 12.0;
    CHECK(fields_outside_physical_range(net) == 2);
}
