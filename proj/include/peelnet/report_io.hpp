#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "peelnet/network.hpp"
#include "peelnet/trainer.hpp"

namespace peelnet {

struct CheckpointMeta {
    std::string model;   // "I", "II" or free-form
    int split = 0;       // 0 when not split-bound
    int restart = 0;
    std::uint64_t seed = 0;
};

struct Checkpoint {
    CheckpointMeta meta;
    NetworkParams params;
};

nlohmann::json checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

/// TrainReport as JSON: config echo, per-epoch history, final state and
/// stop reason.
nlohmann::json train_report_to_json(const TrainConfig& config, const TrainReport& report);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace peelnet
