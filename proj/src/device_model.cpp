#include "synapse/device_model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace synapse {

void PassingProbabilityModel::validate() const {
    if (!(d >= 0.0 && d < 0.5))
        throw std::invalid_argument("calibration: d must satisfy 0 <= d < 0.5");
    if (!(delta_per_mT > 0.0))
        throw std::invalid_argument("calibration: delta must be positive");
    if (!std::isfinite(h0_mT))
        throw std::invalid_argument("calibration: h0 must be finite");
}

namespace {
double logistic(const PassingProbabilityModel& m, double h) {
    return 1.0 / (1.0 + std::exp(-m.delta_per_mT * (h - m.h0_mT)));
}
void require_finite(double h) {
    if (!std::isfinite(h))
        throw std::domain_error("field must be finite");
}
}  // namespace

double passing_probability(const PassingProbabilityModel& model, double h_mT) {
    require_finite(h_mT);
    return model.d + (1.0 - model.d) * logistic(model, h_mT);
}

double passing_probability_derivative(const PassingProbabilityModel& model,
                                      double h_mT) {
    require_finite(h_mT);
    const double s = logistic(model, h_mT);
    return (1.0 - model.d) * model.delta_per_mT * s * (1.0 - s);
}

double field_for_probability(const PassingProbabilityModel& model, double p) {
    if (!(p > model.d && p < 1.0))
        throw std::out_of_range(
            "probability unreachable: require d < p < 1 (floor d = " +
            std::to_string(model.d) + ")");
    return model.h0_mT + std::log((p - model.d) / (1.0 - p)) / model.delta_per_mT;
}

int sample_synapse(const PassingProbabilityModel& model, double h_mT, int x,
                   Rng& rng) {
    if (x != 0 && x != 1) throw std::invalid_argument("input must be 0 or 1");
    if (x == 0) return 0;  // bypass: consumes no randomness
    return bernoulli(passing_probability(model, h_mT), rng) ? 1 : 0;
}

double sample_mean_weight(const PassingProbabilityModel& model, double h_mT,
                          int x, std::uint32_t k, Rng& rng) {
    if (k < 1) throw std::invalid_argument("sample count K must be >= 1");
    if (x != 0 && x != 1) throw std::invalid_argument("input must be 0 or 1");
    if (x == 0) return 0.0;
    const double p = passing_probability(model, h_mT);
    return static_cast<double>(binomial_count(k, p, rng)) /
           static_cast<double>(k);
}

std::vector<std::uint8_t> sample_synapse_bits(
    const PassingProbabilityModel& model, double h_mT, int x, std::uint32_t k,
    Rng& rng) {
    if (k < 1) throw std::invalid_argument("sample count K must be >= 1");
    std::vector<std::uint8_t> bits(k, 0);
    if (x == 0) return bits;
    const double p = passing_probability(model, h_mT);
    for (auto& b : bits) b = bernoulli(p, rng) ? 1 : 0;
    return bits;
}

void save_calibration(const std::filesystem::path& path,
                      const PassingProbabilityModel& model) {
    model.validate();
    nlohmann::json j{{"d", model.d},
                     {"h0_mT", model.h0_mT},
                     {"delta_per_mT", model.delta_per_mT}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

PassingProbabilityModel load_calibration(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    nlohmann::json j;
    in >> j;
    PassingProbabilityModel model;
    model.d = j.at("d").get<double>();
    model.h0_mT = j.at("h0_mT").get<double>();
    model.delta_per_mT = j.at("delta_per_mT").get<double>();
    model.validate();
    return model;
}

}  // namespace synapse
