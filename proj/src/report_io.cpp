#include "peelnet/report_io.hpp"

#include <fstream>

#include "peelnet/errors.hpp"

namespace peelnet {

using nlohmann::json;

namespace {

json spec_to_json(const NetworkSpec& spec) {
    json acts = json::array();
    for (Activation a : spec.activations) {
        acts.push_back(to_string(a));
    }
    return json{{"input_dim", spec.input_dim},
                {"layers", spec.layer_sizes},
                {"activations", acts}};
}

NetworkSpec spec_from_json(const json& j) {
    NetworkSpec spec;
    spec.input_dim = j.at("input_dim").get<int>();
    spec.layer_sizes = j.at("layers").get<std::vector<int>>();
    for (const auto& name : j.at("activations")) {
        spec.activations.push_back(activation_from_string(name.get<std::string>()));
    }
    spec.validate();
    return spec;
}

}  // namespace

json checkpoint_to_json(const Checkpoint& checkpoint) {
    const Vector flat = flatten(checkpoint.params);
    return json{{"format", "peelnet-checkpoint-v1"},
                {"model", checkpoint.meta.model},
                {"split", checkpoint.meta.split},
                {"restart", checkpoint.meta.restart},
                {"seed", checkpoint.meta.seed},
                {"spec", spec_to_json(checkpoint.params.spec)},
                {"weights", std::vector<double>(flat.begin(), flat.end())}};
}

Checkpoint checkpoint_from_json(const json& j) {
    if (j.value("format", "") != "peelnet-checkpoint-v1") {
        throw IngestionError("checkpoint: unknown format field");
    }
    Checkpoint c;
    c.meta.model = j.at("model").get<std::string>();
    c.meta.split = j.at("split").get<int>();
    c.meta.restart = j.value("restart", 0);
    c.meta.seed = j.at("seed").get<std::uint64_t>();
    const NetworkSpec spec = spec_from_json(j.at("spec"));
    const auto weights = j.at("weights").get<std::vector<double>>();
    Vector flat(static_cast<int>(weights.size()));
    for (std::size_t i = 0; i < weights.size(); ++i) {
        flat[static_cast<int>(i)] = weights[i];
    }
    c.params = unflatten(spec, flat);
    return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
    write_text_file(path, checkpoint_to_json(checkpoint).dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IngestionError("cannot open checkpoint " + path);
    }
    json j;
    in >> j;
    return checkpoint_from_json(j);
}

json train_report_to_json(const TrainConfig& config, const TrainReport& report) {
    json history = json::array();
    for (const EpochRecord& row : report.history) {
        history.push_back(json{{"epoch", row.epoch},
                               {"mse", row.mse},
                               {"sse", row.sse},
                               {"ssw", row.ssw},
                               {"mu", row.mu},
                               {"nu", row.nu},
                               {"gamma", row.gamma},
                               {"lambda", row.lambda},
                               {"grad_norm", row.grad_norm}});
    }
    const TrainState& f = report.final_state;
    return json{
        {"config",
         {{"max_epochs", config.max_epochs},
          {"lambda_init", config.lambda_init},
          {"lambda_up", config.lambda_up},
          {"lambda_down", config.lambda_down},
          {"lambda_max", config.lambda_max},
          {"min_gradient", config.min_gradient},
          {"mse_goal", config.mse_goal},
          {"gamma_stall_epochs", config.gamma_stall_epochs},
          {"gamma_stall_tol", config.gamma_stall_tol},
          {"seed", config.seed},
          {"bayesian", config.bayesian}}},
        {"stop_reason", to_string(report.stop_reason)},
        {"final",
         {{"epoch", f.epoch},
          {"sse", f.sse},
          {"ssw", f.ssw},
          {"mu", f.mu},
          {"nu", f.nu},
          {"gamma", f.gamma},
          {"lambda", f.lambda},
          {"grad_norm", f.grad_norm},
          {"error_count", f.error_count},
          {"param_count", f.param_count}}},
        {"history", history}};
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IngestionError("cannot write " + path);
    }
    out << content;
    if (!out) {
        throw IngestionError("write failed for " + path);
    }
}

}  // namespace peelnet
