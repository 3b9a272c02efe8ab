#pragma once

#include <filesystem>
#include <string>

#include "synapse/learning.hpp"
#include "synapse/network.hpp"

namespace synapse {

/// Everything needed to reproduce or transfer a trained network.
struct CheckpointMetadata {
    std::uint32_t k_train = 1;
    std::uint64_t seed = 0;
    std::size_t epoch = 0;  ///< best-validation epoch
    std::string rule = "stochastic";
    double learning_rate = 0.0;
    AdamParams adam;
};

struct Checkpoint {
    PassingProbabilityModel calibration;
    SynapseFieldNetwork net;
    CheckpointMetadata meta;
};

std::string checkpoint_to_json(const Checkpoint& cp);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// History CSV: epoch,train_loss,val_loss,val_acc
void save_history_csv(const std::filesystem::path& path,
                      const TrainHistory& history);

/// Sweep CSV: k_train,k_test,seed,accuracy,std,stderr
void save_sweep_csv(const std::filesystem::path& path,
                    const std::vector<SweepCell>& cells);

}  // namespace synapse
