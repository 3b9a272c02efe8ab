#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "synapse/data.hpp"
#include "synapse/network.hpp"

namespace synapse {

enum class Rule { Stochastic, MeanField };

const char* rule_name(Rule r);
Rule rule_from_name(std::string_view name);

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// One Adam instance covers fields and biases (biases occupy the tail
/// slots of the moment vectors).
struct AdamState {
    AdamParams params;
    std::vector<double> m, v;
    std::uint64_t step = 0;

    explicit AdamState(std::size_t size, AdamParams p = {})
        : params(p), m(size, 0.0), v(size, 0.0) {}
};

/// Bias-corrected Adam update: params -= lr * mhat / (sqrt(vhat) + eps).
void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grad, double learning_rate);

/// Raw gradient buffers matching the network shape.
struct Gradients {
    std::vector<double> fields;
    std::vector<double> biases;

    explicit Gradients(const SynapseFieldNetwork& net)
        : fields(net.fields_mT.size(), 0.0), biases(net.biases.size(), 0.0) {}
    void scale(double s);
};

/// Adds the reparameterized per-element gradient:
///   g_ij = dE/dy_i * f'(h_ij) * x_j
///          * (1 + (1 - 2 f(h_ij) x_j) / (2 K sigma_i) * xi_i)
/// i.e. the exact derivative of mu_i + sigma_i * xi_i at fixed xi
/// (d(sigma^2)/dh carries the 1/K of the variance). The variance
/// factor is dropped where sigma_i < kSigmaFloor; at large K it
/// vanishes and the rule tends to the mean-field rule. Bias gradient
/// is dE/dy_i.
void accumulate_stochastic_gradient(const ForwardResult& forward,
                                    std::span<const double> grad_y,
                                    std::span<const std::uint8_t> x,
                                    const SynapseFieldNetwork& net,
                                    const PassingProbabilityModel& model,
                                    Gradients& out);

/// Mean-only rule: g_ij = dE/dy_i * f'(h_ij) * x_j.
void accumulate_mean_field_gradient(std::span<const double> grad_y,
                                    std::span<const std::uint8_t> x,
                                    const SynapseFieldNetwork& net,
                                    const PassingProbabilityModel& model,
                                    Gradients& out);

struct TrainConfig {
    std::uint32_t k_train = 1;
    double learning_rate = 0.0;  ///< 0 = default for k_train
    std::size_t batch_size = 50;
    std::size_t patience = 20;
    std::size_t max_epochs = 200;
    std::uint64_t seed = 0;
    Rule rule = Rule::Stochastic;
    AdamParams adam;

    double effective_learning_rate() const {
        if (learning_rate > 0.0) return learning_rate;
        return k_train >= 2 ? 1e-3 : 1e-2;
    }
};

struct EpochRecord {
    std::size_t epoch;
    double train_loss;
    double val_loss;
    double val_accuracy;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
};

struct TrainResult {
    SynapseFieldNetwork net;  ///< best-validation snapshot
    TrainHistory history;
};

/// Full training protocol: f = 0.5 initialization, shuffled
/// mini-batches, per-element forwards, mean-reduced batch gradient,
/// Adam, early stopping on validation loss. Aborts with a
/// std::runtime_error on non-finite loss.
TrainResult train(const TrainConfig& config, const BinarizedDataset& data,
                  const PassingProbabilityModel& model,
                  std::ostream* log = nullptr);

struct EvalReport {
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;   ///< across repeats
    double batch_stderr = 0.0;   ///< per-mini-batch, mean over repeats
    std::vector<double> per_repeat_accuracy;
};

/// Argmax classification over `indices`, `repeats` independent
/// stochastic passes. backend = nullptr uses a fresh in-process
/// backend; each repeat draws from make_stream(seed, "eval", repeat).
EvalReport evaluate(const SynapseFieldNetwork& net,
                    const PassingProbabilityModel& model,
                    const BinarizedDataset& data,
                    std::span<const std::uint32_t> indices,
                    std::uint32_t k_test, std::size_t repeats,
                    std::uint64_t seed, SynapseBackend* backend = nullptr,
                    std::size_t batch_size = 50);

/// Deterministic mean-field-forward accuracy over `indices`.
double mean_field_accuracy(const SynapseFieldNetwork& net,
                           const PassingProbabilityModel& model,
                           const BinarizedDataset& data,
                           std::span<const std::uint32_t> indices);

/// Empirical per-neuron output standard deviation at k_test, averaged
/// over neurons and images (`draws` forwards per image).
double mean_output_std(const SynapseFieldNetwork& net,
                       const PassingProbabilityModel& model,
                       const BinarizedDataset& data,
                       std::span<const std::uint32_t> indices,
                       std::uint32_t k_test, std::size_t draws,
                       std::uint64_t seed);

struct SweepCell {
    std::uint32_t k_train;
    std::uint32_t k_test;
    std::uint64_t seed;
    double accuracy;
    double std_dev;
    double batch_stderr;
};

/// K_train x K_test x seed grid. Models are trained once per
/// (k_train, seed) and evaluated at every k_test with `repeats`
/// passes; the reported accuracy is the mean over repeats.
std::vector<SweepCell> sweep(const std::vector<std::uint32_t>& k_train_list,
                             const std::vector<std::uint32_t>& k_test_list,
                             const std::vector<std::uint64_t>& seeds,
                             const BinarizedDataset& data,
                             const PassingProbabilityModel& model,
                             const TrainConfig& base_config,
                             std::size_t repeats = 5,
                             std::ostream* log = nullptr);

}  // namespace synapse
