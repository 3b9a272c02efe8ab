#include "synapse/checkpoint.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace synapse {

std::string checkpoint_to_json(const Checkpoint& cp) {
    cp.net.validate();
    nlohmann::json j;
    j["calibration"] = {{"d", cp.calibration.d},
                        {"h0_mT", cp.calibration.h0_mT},
                        {"delta_per_mT", cp.calibration.delta_per_mT}};
    j["shape"] = {{"classes", cp.net.classes}, {"inputs", cp.net.inputs}};
    j["fields_mT"] = cp.net.fields_mT;  // row-major classes x inputs
    j["biases"] = cp.net.biases;
    j["metadata"] = {{"K_train", cp.meta.k_train},
                     {"seed", cp.meta.seed},
                     {"epoch", cp.meta.epoch},
                     {"rule", cp.meta.rule},
                     {"learning_rate", cp.meta.learning_rate},
                     {"adam_beta1", cp.meta.adam.beta1},
                     {"adam_beta2", cp.meta.adam.beta2},
                     {"adam_epsilon", cp.meta.adam.epsilon}};
    return j.dump(2);
}

Checkpoint checkpoint_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    Checkpoint cp;
    const auto& cal = j.at("calibration");
    cp.calibration.d = cal.at("d").get<double>();
    cp.calibration.h0_mT = cal.at("h0_mT").get<double>();
    cp.calibration.delta_per_mT = cal.at("delta_per_mT").get<double>();
    cp.calibration.validate();
    cp.net.classes = j.at("shape").at("classes").get<std::size_t>();
    cp.net.inputs = j.at("shape").at("inputs").get<std::size_t>();
    cp.net.fields_mT = j.at("fields_mT").get<std::vector<double>>();
    cp.net.biases = j.at("biases").get<std::vector<double>>();
    cp.net.validate();
    const auto& m = j.at("metadata");
    cp.meta.k_train = m.at("K_train").get<std::uint32_t>();
    cp.meta.seed = m.at("seed").get<std::uint64_t>();
    cp.meta.epoch = m.at("epoch").get<std::size_t>();
    cp.meta.rule = m.value("rule", "stochastic");
    cp.meta.learning_rate = m.value("learning_rate", 0.0);
    cp.meta.adam.beta1 = m.value("adam_beta1", 0.9);
    cp.meta.adam.beta2 = m.value("adam_beta2", 0.999);
    cp.meta.adam.epsilon = m.value("adam_epsilon", 1e-8);
    return cp;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& cp) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << checkpoint_to_json(cp) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return checkpoint_from_json(ss.str());
}

void save_history_csv(const std::filesystem::path& path,
                      const TrainHistory& history) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "epoch,train_loss,val_loss,val_acc\n";
    out << std::setprecision(17);
    for (const EpochRecord& e : history.epochs)
        out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ','
            << e.val_accuracy << '\n';
}

void save_sweep_csv(const std::filesystem::path& path,
                    const std::vector<SweepCell>& cells) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "K_train,K_test,seed,accuracy,std,stderr\n";
    out << std::setprecision(17);
    for (const SweepCell& c : cells)
        out << c.k_train << ',' << c.k_test << ',' << c.seed << ','
            << c.accuracy << ',' << c.std_dev << ',' << c.batch_stderr << '\n';
}

}  // namespace synapse
