#include "synapse/learning.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace synapse {

const char* rule_name(Rule r) {
    return r == Rule::Stochastic ? "stochastic" : "mean_field";
}

Rule rule_from_name(std::string_view name) {
    if (name == "stochastic") return Rule::Stochastic;
    if (name == "mean_field") return Rule::MeanField;
    throw std::invalid_argument("unknown rule: " + std::string(name));
}

namespace {

void adam_apply(AdamState& state, std::span<double> params,
                std::span<const double> grad, double lr, std::size_t offset) {
    const AdamParams& ap = state.params;
    const double bc1 = 1.0 - std::pow(ap.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(ap.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        double& m = state.m[offset + i];
        double& v = state.v[offset + i];
        m = ap.beta1 * m + (1.0 - ap.beta1) * grad[i];
        v = ap.beta2 * v + (1.0 - ap.beta2) * grad[i] * grad[i];
        params[i] -= lr * (m / bc1) / (std::sqrt(v / bc2) + ap.epsilon);
    }
}

}  // namespace

void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grad, double learning_rate) {
    if (params.size() != grad.size() || params.size() > state.m.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    ++state.step;
    adam_apply(state, params, grad, learning_rate, 0);
}

void Gradients::scale(double s) {
    for (auto& g : fields) g *= s;
    for (auto& g : biases) g *= s;
}

void accumulate_stochastic_gradient(const ForwardResult& forward,
                                    std::span<const double> grad_y,
                                    std::span<const std::uint8_t> x,
                                    const SynapseFieldNetwork& net,
                                    const PassingProbabilityModel& model,
                                    Gradients& out) {
    if (grad_y.size() != net.classes || x.size() != net.inputs ||
        out.fields.size() != net.fields_mT.size())
        throw std::invalid_argument("stochastic_gradient: shape mismatch");
    for (std::size_t i = 0; i < net.classes; ++i) {
        const double sigma = std::sqrt(forward.stats.sigma2[i]);
        const double c =
            sigma < kSigmaFloor
                ? 0.0
                : forward.stats.xi[i] /
                      (2.0 * sigma * static_cast<double>(forward.samples));
        for (std::size_t j = 0; j < net.inputs; ++j) {
            if (!x[j]) continue;
            const double h = net.field(i, j);
            const double f = passing_probability(model, h);
            const double fp = passing_probability_derivative(model, h);
            out.fields[i * net.inputs + j] +=
                grad_y[i] * fp * (1.0 + (1.0 - 2.0 * f) * c);
        }
        out.biases[i] += grad_y[i];
    }
}

void accumulate_mean_field_gradient(std::span<const double> grad_y,
                                    std::span<const std::uint8_t> x,
                                    const SynapseFieldNetwork& net,
                                    const PassingProbabilityModel& model,
                                    Gradients& out) {
    if (grad_y.size() != net.classes || x.size() != net.inputs ||
        out.fields.size() != net.fields_mT.size())
        throw std::invalid_argument("mean_field_gradient: shape mismatch");
    for (std::size_t i = 0; i < net.classes; ++i) {
        for (std::size_t j = 0; j < net.inputs; ++j) {
            if (!x[j]) continue;
            out.fields[i * net.inputs + j] +=
                grad_y[i] *
                passing_probability_derivative(model, net.field(i, j));
        }
        out.biases[i] += grad_y[i];
    }
}

namespace {

// Training-loop working set. f and f' are tabulated per synapse and
// refreshed after each optimizer step; the sampled forward below
// consumes randomness in exactly the same order as InProcessBackend
// (class-major over active inputs, one binomial count per synapse).
struct ProbTable {
    std::vector<double> f, fp;

    void refresh(const SynapseFieldNetwork& net,
                 const PassingProbabilityModel& model) {
        f.resize(net.fields_mT.size());
        fp.resize(net.fields_mT.size());
        for (std::size_t i = 0; i < net.fields_mT.size(); ++i) {
            f[i] = passing_probability(model, net.fields_mT[i]);
            fp[i] = passing_probability_derivative(model, net.fields_mT[i]);
        }
    }
};

struct ElementForward {
    std::vector<double> y, mu, sigma2, xi;
};

void fast_forward_sampled(const SynapseFieldNetwork& net, const ProbTable& pt,
                          const std::vector<std::uint32_t>& active,
                          std::uint32_t k, Rng& rng, ElementForward& out) {
    const std::size_t c = net.classes;
    out.y.assign(c, 0.0);
    out.mu.assign(c, 0.0);
    out.sigma2.assign(c, 0.0);
    out.xi.assign(c, 0.0);
    for (std::size_t i = 0; i < c; ++i) {
        const double* fi = pt.f.data() + i * net.inputs;
        double count = 0.0, mu = 0.0, var = 0.0;
        for (std::uint32_t j : active) {
            const double f = fi[j];
            count += static_cast<double>(binomial_count(k, f, rng));
            mu += f;
            var += f * (1.0 - f);
        }
        out.y[i] = count / static_cast<double>(k) + net.biases[i];
        out.mu[i] = mu + net.biases[i];
        out.sigma2[i] = var / static_cast<double>(k);
        const double sigma = std::sqrt(out.sigma2[i]);
        out.xi[i] = sigma < kSigmaFloor ? 0.0 : (out.y[i] - out.mu[i]) / sigma;
    }
}

void fast_forward_mean(const SynapseFieldNetwork& net, const ProbTable& pt,
                       const std::vector<std::uint32_t>& active,
                       ElementForward& out) {
    const std::size_t c = net.classes;
    out.y.assign(c, 0.0);
    for (std::size_t i = 0; i < c; ++i) {
        const double* fi = pt.f.data() + i * net.inputs;
        double mu = 0.0;
        for (std::uint32_t j : active) mu += fi[j];
        out.y[i] = mu + net.biases[i];
    }
}

std::vector<std::uint32_t> active_pixels(std::span<const std::uint8_t> x) {
    std::vector<std::uint32_t> active;
    for (std::uint32_t j = 0; j < x.size(); ++j)
        if (x[j]) active.push_back(j);
    return active;
}

}  // namespace

TrainResult train(const TrainConfig& config, const BinarizedDataset& data,
                  const PassingProbabilityModel& model, std::ostream* log) {
    if (data.train_indices.empty() || data.validation_indices.empty())
        throw std::invalid_argument("train: empty dataset split");
    if (config.k_train < 1) throw std::invalid_argument("train: K must be >= 1");
    model.validate();

    std::uint8_t max_label = 0;
    for (std::uint8_t l : data.labels) max_label = std::max(max_label, l);
    const std::size_t classes = max_label + 1;

    SynapseFieldNetwork net =
        SynapseFieldNetwork::initialized(classes, data.input_dim, model);
    const double lr = config.effective_learning_rate();
    const std::uint32_t k = config.k_train;

    AdamState adam(net.fields_mT.size() + net.biases.size(), config.adam);
    ProbTable pt;
    pt.refresh(net, model);

    // active-pixel lists, computed once
    std::vector<std::vector<std::uint32_t>> active(data.image_count());
    for (std::size_t i = 0; i < data.image_count(); ++i)
        active[i] = active_pixels(data.image(i));

    TrainResult result;
    result.net = net;
    result.history.best_val_loss = std::numeric_limits<double>::infinity();

    std::vector<std::uint32_t> order = data.train_indices;
    ElementForward fwd;
    Gradients grad(net);

    for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        Rng shuffle_rng = make_stream(config.seed, "shuffle", epoch);
        shuffle_indices(order, shuffle_rng);
        Rng fwd_rng = make_stream(config.seed, "train-forward", epoch);

        double train_loss = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += config.batch_size) {
            const std::size_t end =
                std::min(start + config.batch_size, order.size());
            std::fill(grad.fields.begin(), grad.fields.end(), 0.0);
            std::fill(grad.biases.begin(), grad.biases.end(), 0.0);

            for (std::size_t n = start; n < end; ++n) {
                const std::uint32_t idx = order[n];
                const auto& act = active[idx];
                if (config.rule == Rule::Stochastic)
                    fast_forward_sampled(net, pt, act, k, fwd_rng, fwd);
                else
                    fast_forward_mean(net, pt, act, fwd);
                LossGrad lg = softmax_cross_entropy(fwd.y, data.labels[idx]);
                train_loss += lg.loss;

                for (std::size_t i = 0; i < classes; ++i) {
                    double c = 0.0;
                    if (config.rule == Rule::Stochastic) {
                        const double sigma = std::sqrt(fwd.sigma2[i]);
                        if (sigma >= kSigmaFloor)
                            c = fwd.xi[i] /
                                (2.0 * sigma * static_cast<double>(k));
                    }
                    const double* fi = pt.f.data() + i * net.inputs;
                    const double* fpi = pt.fp.data() + i * net.inputs;
                    double* gi = grad.fields.data() + i * net.inputs;
                    for (std::uint32_t j : act)
                        gi[j] += lg.grad[i] * fpi[j] *
                                 (1.0 + (1.0 - 2.0 * fi[j]) * c);
                    grad.biases[i] += lg.grad[i];
                }
            }
            grad.scale(1.0 / static_cast<double>(end - start));

            ++adam.step;
            adam_apply(adam, net.fields_mT, grad.fields, lr, 0);
            adam_apply(adam, net.biases, grad.biases, lr,
                       net.fields_mT.size());
            pt.refresh(net, model);
        }
        train_loss /= static_cast<double>(order.size());

        // validation with a sampled forward at K and a fixed per-epoch seed
        Rng val_rng = make_stream(config.seed, "val", epoch);
        double val_loss = 0.0;
        std::size_t correct = 0;
        for (std::uint32_t idx : data.validation_indices) {
            fast_forward_sampled(net, pt, active[idx], k, val_rng, fwd);
            val_loss += softmax_cross_entropy(fwd.y, data.labels[idx]).loss;
            if (argmax_class(fwd.y) == data.labels[idx]) ++correct;
        }
        val_loss /= static_cast<double>(data.validation_indices.size());
        const double val_acc =
            static_cast<double>(correct) /
            static_cast<double>(data.validation_indices.size());

        if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
            throw std::runtime_error(
                "training aborted: non-finite loss at epoch " +
                std::to_string(epoch));

        result.history.epochs.push_back(
            {epoch, train_loss, val_loss, val_acc});
        if (log)
            (*log) << "epoch " << epoch << " train_loss " << train_loss
                   << " val_loss " << val_loss << " val_acc " << val_acc
                   << '\n';

        if (val_loss < result.history.best_val_loss) {
            result.history.best_val_loss = val_loss;
            result.history.best_epoch = epoch;
            result.net = net;
        } else if (epoch - result.history.best_epoch >= config.patience) {
            break;
        }
    }
    return result;
}

EvalReport evaluate(const SynapseFieldNetwork& net,
                    const PassingProbabilityModel& model,
                    const BinarizedDataset& data,
                    std::span<const std::uint32_t> indices,
                    std::uint32_t k_test, std::size_t repeats,
                    std::uint64_t seed, SynapseBackend* backend,
                    std::size_t batch_size) {
    if (k_test < 1) throw std::invalid_argument("evaluate: K must be >= 1");
    if (repeats < 1) throw std::invalid_argument("evaluate: repeats must be >= 1");
    InProcessBackend local(model);
    SynapseBackend& be = backend ? *backend : local;

    EvalReport report;
    double stderr_sum = 0.0;
    for (std::size_t r = 0; r < repeats; ++r) {
        Rng rng = make_stream(seed, "eval", r);
        std::size_t correct = 0;
        std::vector<double> batch_acc;
        std::size_t batch_correct = 0, batch_n = 0;
        for (std::size_t n = 0; n < indices.size(); ++n) {
            ForwardResult fwd = forward_sampled(
                net, model, data.image(indices[n]), k_test, be, rng);
            const bool ok =
                argmax_class(fwd.y) == data.labels[indices[n]];
            correct += ok;
            batch_correct += ok;
            if (++batch_n == batch_size || n + 1 == indices.size()) {
                batch_acc.push_back(static_cast<double>(batch_correct) /
                                    static_cast<double>(batch_n));
                batch_correct = 0;
                batch_n = 0;
            }
        }
        report.per_repeat_accuracy.push_back(
            static_cast<double>(correct) / static_cast<double>(indices.size()));

        double mean = 0.0;
        for (double a : batch_acc) mean += a;
        mean /= static_cast<double>(batch_acc.size());
        double var = 0.0;
        for (double a : batch_acc) var += (a - mean) * (a - mean);
        if (batch_acc.size() > 1)
            var /= static_cast<double>(batch_acc.size() - 1);
        stderr_sum += std::sqrt(var / static_cast<double>(batch_acc.size()));
    }
    report.batch_stderr = stderr_sum / static_cast<double>(repeats);

    double mean = 0.0;
    for (double a : report.per_repeat_accuracy) mean += a;
    mean /= static_cast<double>(repeats);
    report.mean_accuracy = mean;
    double var = 0.0;
    for (double a : report.per_repeat_accuracy)
        var += (a - mean) * (a - mean);
    report.std_accuracy =
        repeats > 1 ? std::sqrt(var / static_cast<double>(repeats - 1)) : 0.0;
    return report;
}

double mean_field_accuracy(const SynapseFieldNetwork& net,
                           const PassingProbabilityModel& model,
                           const BinarizedDataset& data,
                           std::span<const std::uint32_t> indices) {
    std::size_t correct = 0;
    for (std::uint32_t idx : indices) {
        const std::vector<double> y =
            forward_mean_field(net, model, data.image(idx));
        correct += argmax_class(y) == data.labels[idx];
    }
    return static_cast<double>(correct) / static_cast<double>(indices.size());
}

double mean_output_std(const SynapseFieldNetwork& net,
                       const PassingProbabilityModel& model,
                       const BinarizedDataset& data,
                       std::span<const std::uint32_t> indices,
                       std::uint32_t k_test, std::size_t draws,
                       std::uint64_t seed) {
    if (draws < 2) throw std::invalid_argument("mean_output_std: draws >= 2");
    InProcessBackend backend(model);
    Rng rng = make_stream(seed, "output-std");
    double total = 0.0;
    std::vector<double> sum(net.classes), sumsq(net.classes);
    for (std::uint32_t idx : indices) {
        std::fill(sum.begin(), sum.end(), 0.0);
        std::fill(sumsq.begin(), sumsq.end(), 0.0);
        for (std::size_t d = 0; d < draws; ++d) {
            ForwardResult fwd = forward_sampled(net, model, data.image(idx),
                                                k_test, backend, rng);
            for (std::size_t i = 0; i < net.classes; ++i) {
                sum[i] += fwd.y[i];
                sumsq[i] += fwd.y[i] * fwd.y[i];
            }
        }
        double per_image = 0.0;
        for (std::size_t i = 0; i < net.classes; ++i) {
            const double m = sum[i] / static_cast<double>(draws);
            const double v = std::max(
                0.0, (sumsq[i] - static_cast<double>(draws) * m * m) /
                         static_cast<double>(draws - 1));
            per_image += std::sqrt(v);
        }
        total += per_image / static_cast<double>(net.classes);
    }
    return total / static_cast<double>(indices.size());
}

std::vector<SweepCell> sweep(const std::vector<std::uint32_t>& k_train_list,
                             const std::vector<std::uint32_t>& k_test_list,
                             const std::vector<std::uint64_t>& seeds,
                             const BinarizedDataset& data,
                             const PassingProbabilityModel& model,
                             const TrainConfig& base_config,
                             std::size_t repeats, std::ostream* log) {
    if (k_train_list.empty() || k_test_list.empty() || seeds.empty())
        throw std::invalid_argument("sweep: empty axis");
    std::vector<SweepCell> cells;
    for (std::uint64_t seed : seeds) {
        for (std::uint32_t kt : k_train_list) {
            TrainConfig cfg = base_config;
            cfg.k_train = kt;
            cfg.seed = seed;
            cfg.learning_rate = base_config.learning_rate;  // 0 = per-K default
            if (log)
                (*log) << "sweep: training k_train=" << kt << " seed=" << seed
                       << '\n';
            TrainResult tr = train(cfg, data, model);
            for (std::uint32_t ke : k_test_list) {
                EvalReport rep =
                    evaluate(tr.net, model, data, data.test_indices, ke,
                             repeats, derive_seed(seed, "sweep-eval", ke));
                cells.push_back({kt, ke, seed, rep.mean_accuracy,
                                 rep.std_accuracy, rep.batch_stderr});
                if (log)
                    (*log) << "sweep: k_train=" << kt << " k_test=" << ke
                           << " seed=" << seed << " acc=" << rep.mean_accuracy
                           << '\n';
            }
        }
    }
    return cells;
}

}  // namespace synapse
