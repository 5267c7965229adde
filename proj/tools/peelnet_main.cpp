#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "peelnet/data.hpp"
#include "peelnet/evaluate.hpp"
#include "peelnet/report_io.hpp"
#include "peelnet/rng.hpp"
#include "peelnet/trainer.hpp"

namespace {

using namespace peelnet;
namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CommonOptions {
    std::string data_path;
    std::string out_dir;
};

Dataset load_records(const CommonOptions& opts) {
    if (opts.data_path.empty()) {
        return canonical_dataset();
    }
    return load_csv_file(opts.data_path, false);
}

fs::path resolve_out_dir(const CommonOptions& opts) {
    if (!opts.out_dir.empty()) return opts.out_dir;
    if (const char* env = std::getenv("PEELNET_OUT")) return env;
    return "peelnet-out";
}

NetworkSpec spec_from_flags(const std::string& structure, const std::string& activation,
                            Model model) {
    const std::vector<int> sizes = parse_structure(structure);
    const int expected = static_cast<int>(model_output_columns(model).size());
    if (!sizes.empty() && sizes.back() != expected) {
        throw ShapeError("--spec: output layer must have " + std::to_string(expected) +
                         " neurons for model " + to_string(model));
    }
    if (activation == "linear") return linear_spec(1, sizes);
    if (activation == "tanh-hidden") return tanh_hidden_spec(1, sizes);
    throw ShapeError("--activation: expected 'tanh-hidden' or 'linear'");
}

int cmd_train(const CommonOptions& common, const std::string& model_name,
              const std::string& structure, const std::string& activation, int split,
              std::uint64_t seed, int epochs) {
    const Model model = model_from_string(model_name);
    const NetworkSpec spec = spec_from_flags(structure, activation, model);
    const Dataset records = load_records(common);
    const Normalizer norm = Normalizer::fit(records);
    const SampleSet training = build_training_pairs(records, norm, model, split);
    const SampleSet testing = build_testing_pairs(records, norm, model, split);

    TrainConfig config;
    config.max_epochs = epochs;
    config.seed = seed;

    const fs::path out = resolve_out_dir(common);
    fs::create_directories(out);

    bool diverged = false;
    NetworkParams params = zero_params(spec);
    TrainReport report;
    try {
        TrainResult result = train(spec, training, config);
        params = std::move(result.params);
        report = std::move(result.report);
    } catch (const DivergedError& e) {
        std::cerr << "train: " << e.what() << "\n";
        diverged = true;
        report = e.partial_report;
    }

    write_text_file((out / "train_report.json").string(),
                    train_report_to_json(config, report).dump(2) + "\n");
    if (!diverged) {
        Checkpoint checkpoint;
        checkpoint.meta.model = to_string(model);
        checkpoint.meta.split = split;
        checkpoint.meta.seed = seed;
        checkpoint.params = params;
        save_checkpoint((out / "checkpoint.json").string(), checkpoint);

        const double test =
            mse(stacked_errors(params, testing.inputs, testing.targets), testing.size());
        const TrainState& s = report.final_state;
        std::cout << "split " << split << ": epochs " << s.epoch << ", stop "
                  << to_string(report.stop_reason) << ", train MSE " << s.sse / training.size()
                  << ", test MSE " << test << ", gamma " << s.gamma << ", grad " << s.grad_norm
                  << "\n";
        try {
            const Matrix jac = error_jacobian(params, training.inputs);
            Matrix hessian = s.nu * (jac.transpose() * jac);
            hessian.diagonal().array() += s.mu;
            std::cout << "log evidence (quadratic approximation): " << log_evidence(s, hessian)
                      << "\n";
        } catch (const SingularMatrixError&) {
            // diagnostics unavailable, non-fatal
        }
        std::cout << "wrote " << (out / "train_report.json").string() << " and "
                  << (out / "checkpoint.json").string() << "\n";
    }
    return diverged ? kExitRuntime : kExitOk;
}

int cmd_sweep(const CommonOptions& common, const std::string& model_name, std::uint64_t seed,
              int restarts, int epochs) {
    const Model model = model_from_string(model_name);
    const Dataset records = load_records(common);

    SweepConfig config;
    config.model = model;
    config.restarts = restarts;
    config.train.max_epochs = epochs;
    config.master_seed = seed;

    const SweepReport report = run_sweep(config, records);

    const fs::path out = resolve_out_dir(common);
    fs::create_directories(out);

    json curve = json::array();
    for (const auto& [h, value] : report.mean_test_mse) {
        curve.push_back(json{{"hidden", h}, {"mean_test_mse", value}});
    }
    std::cout << "model " << to_string(model) << " MSE curve:\n";
    for (const auto& [h, value] : report.mean_test_mse) {
        std::cout << "  hidden " << h << ": " << value << "\n";
    }
    std::cout << "selected hidden size: " << report.selected_hidden_size << " ("
              << report.failed_runs << " failed runs)\n";

    json doc{{"model", to_string(model)},
             {"master_seed", seed},
             {"restarts", restarts},
             {"selected_hidden_size", report.selected_hidden_size},
             {"failed_runs", report.failed_runs},
             {"curve", curve}};
    write_text_file((out / "sweep_summary.json").string(), doc.dump(2) + "\n");
    std::cout << "wrote " << (out / "sweep_summary.json").string() << "\n";
    return kExitOk;
}

int cmd_predict(const CommonOptions& common, const std::string& checkpoint_path,
                const std::string& split_arg) {
    const Dataset records = load_records(common);
    const Checkpoint checkpoint = load_checkpoint(checkpoint_path);
    const Model model = model_from_string(checkpoint.meta.model);

    std::vector<int> splits;
    if (split_arg == "all") {
        for (int s = 1; s <= kNumSplits; ++s) splits.push_back(s);
    } else {
        splits.push_back(std::stoi(split_arg));
    }

    json cases = json::array();
    for (int split : splits) {
        const PredictionReport report = predict_and_report(checkpoint.params, model, split, records);
        for (const CasePrediction& cp : report.cases) {
            json entry{{"case", cp.case_id},
                       {"split", cp.split},
                       {"theta_p_deg", cp.theta_p_deg}};
            const auto& cols = model_output_columns(model);
            for (std::size_t j = 0; j < cols.size(); ++j) {
                entry[column_name(cols[j])] = json{{"desired", cp.desired[j]},
                                                   {"predicted", cp.predicted[j]},
                                                   {"re_percent", cp.re_percent[j]}};
            }
            cases.push_back(std::move(entry));
            std::cout << "case " << cp.case_id << " (split " << cp.split << ", theta "
                      << cp.theta_p_deg << " deg):";
            for (std::size_t j = 0; j < cols.size(); ++j) {
                std::cout << "  " << column_name(cols[j]) << " " << cp.predicted[j] << " (desired "
                          << cp.desired[j] << ", RE " << cp.re_percent[j] << "%)";
            }
            std::cout << "\n";
        }
    }

    const fs::path out = resolve_out_dir(common);
    fs::create_directories(out);
    write_text_file((out / "predictions.json").string(),
                    json{{"model", to_string(model)}, {"cases", cases}}.dump(2) + "\n");
    std::cout << "wrote " << (out / "predictions.json").string() << "\n";
    return kExitOk;
}

int cmd_reproduce(const CommonOptions& common, std::uint64_t seed, int restarts, int epochs) {
    const Dataset records = load_records(common);

    ReproduceConfig config;
    config.master_seed = seed;
    config.restarts = restarts;
    config.max_epochs = epochs;

    std::string stage = "sweep/retrain";
    try {
        const ReproduceResult result = reproduce(config, records);
        stage = "emit";
        const fs::path out = resolve_out_dir(common);
        write_bundle(result, out.string());

        bool all_ok = true;
        std::cout << "structure selection:";
        for (const ModelReproduction& model : result.models) {
            std::cout << "  model " << to_string(model.model) << " -> 1-"
                      << model.selected_hidden_size << "-"
                      << model_output_columns(model.model).size();
        }
        std::cout << "\n";
        std::cout << "output          avg RE%   (limit)   max RE%   (limit)   verdict\n";
        for (const ModelReproduction& model : result.models) {
            for (const ReBand& band : re_bands(model.model)) {
                const auto it = std::find_if(
                    model.stats.begin(), model.stats.end(),
                    [&](const OutputErrorStats& s) { return s.column == band.column; });
                const bool avg_ok = it->avg_re_percent <= band.avg_limit_percent;
                const bool max_ok =
                    !band.max_limit_percent || it->max_re_percent <= *band.max_limit_percent;
                all_ok = all_ok && avg_ok && max_ok;
                char line[160];
                std::snprintf(line, sizeof(line), "%-14s %8.3f  (<=%.1f)  %8.3f  (%s)      %s",
                              column_name(band.column).c_str(), it->avg_re_percent,
                              band.avg_limit_percent, it->max_re_percent,
                              band.max_limit_percent
                                  ? ("<=" + std::to_string(static_cast<int>(*band.max_limit_percent)))
                                        .c_str()
                                  : "--",
                              (avg_ok && max_ok) ? "pass" : "FAIL");
                std::cout << line << "\n";
            }
        }
        std::cout << "bundle written to " << resolve_out_dir(common).string() << "\n";
        return all_ok ? kExitOk : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "reproduce failed at stage '" << stage << "': " << e.what() << "\n";
        return kExitRuntime;
    }
}

int cmd_validate_data(const CommonOptions& common) {
    int checks = 0;
    const auto fail = [&](const std::string& what) {
        std::cerr << "FAIL: " << what << "\n";
        return kExitRuntime;
    };

    Dataset records;
    try {
        records = load_records(common);
        if (!common.data_path.empty() && records.size() != kNumCases) {
            return fail("row count " + std::to_string(records.size()) + ", expected " +
                        std::to_string(kNumCases));
        }
    } catch (const IngestionError& e) {
        return fail(e.what());
    }
    ++checks;

    for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].theta_p_deg <= records[i - 1].theta_p_deg) {
            return fail("theta_p not strictly increasing at row " + std::to_string(i + 1));
        }
    }
    ++checks;

    for (std::size_t i = 0; i < records.size(); ++i) {
        for (Column c : {Column::UMax, Column::FnMax, Column::FtMax, Column::UDet,
                         Column::AlphaDet}) {
            if (column_value(records[i], c) <= 0) {
                return fail("non-positive " + column_name(c) + " at row " + std::to_string(i + 1));
            }
        }
    }
    ++checks;

    const FoldPlan& plan = fold_plan();
    std::vector<int> seen(kNumCases + 1, 0);
    for (int s = 0; s < kNumSplits; ++s) {
        for (int id : plan.testing[s]) ++seen[id];
        if (plan.testing[s].size() + plan.training[s].size() != kNumCases) {
            return fail("split " + std::to_string(s + 1) + " does not cover all cases");
        }
    }
    for (int id = 1; id <= kNumCases; ++id) {
        if (seen[id] != 1) {
            return fail("case " + std::to_string(id) + " appears in " + std::to_string(seen[id]) +
                        " test folds");
        }
    }
    ++checks;

    const std::uint64_t sum = dataset_checksum(records);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(sum));
    std::cout << "rows: " << records.size() << "\n";
    std::cout << "checksum: " << buf << "\n";
    if (common.data_path.empty() || records.size() == kNumCases) {
        if (sum != canonical_checksum()) {
            return fail("checksum mismatch against canonical dataset");
        }
        ++checks;
    }
    std::cout << "all " << checks << " checks passed\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian-regularized Levenberg-Marquardt training of small feedforward "
                 "networks on the spatula-peeling dataset"};
    app.require_subcommand(1);
    app.fallthrough();  // --data/--out may follow the subcommand

    CommonOptions common;
    app.add_option("--data", common.data_path, "CSV dataset path (defaults to the embedded data)");
    app.add_option("--out", common.out_dir,
                   "output directory (default $PEELNET_OUT or ./peelnet-out)");

    std::string model_name = "I";
    std::string structure = "1-5-3";
    std::string activation = "tanh-hidden";
    std::string split_arg = "1";
    int split = 1;
    std::uint64_t seed = 0;
    int epochs = 2000;
    int restarts = 15;
    std::string checkpoint_path;

    CLI::App* train_cmd = app.add_subcommand("train", "train one network on one split");
    train_cmd->add_option("--model", model_name, "model I or II")->capture_default_str();
    train_cmd->add_option("--spec", structure, "layer sizes, e.g. 1-5-3")->capture_default_str();
    train_cmd->add_option("--activation", activation, "tanh-hidden or linear")
        ->capture_default_str();
    train_cmd->add_option("--split", split, "split index 1-5")->check(CLI::Range(1, kNumSplits));
    train_cmd->add_option("--seed", seed, "weight-init seed")->capture_default_str();
    train_cmd->add_option("--epochs", epochs, "maximum epochs")->check(CLI::PositiveNumber);

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "hidden-size sweep with restarts");
    sweep_cmd->add_option("--model", model_name, "model I or II")->capture_default_str();
    sweep_cmd->add_option("--seed", seed, "master seed")->capture_default_str();
    sweep_cmd->add_option("--restarts", restarts, "restarts per (hidden size, split)")
        ->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--epochs", epochs, "maximum epochs")->check(CLI::PositiveNumber);

    CLI::App* predict_cmd = app.add_subcommand("predict", "predict test folds from a checkpoint");
    predict_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint JSON path")->required();
    predict_cmd->add_option("--split", split_arg, "split index 1-5 or 'all'");

    CLI::App* reproduce_cmd =
        app.add_subcommand("reproduce", "full workflow: sweep, select, retrain, predict, emit");
    reproduce_cmd->add_option("--seed", seed, "master seed")->capture_default_str();
    reproduce_cmd->add_option("--restarts", restarts, "restarts per (hidden size, split)")
        ->check(CLI::PositiveNumber);
    reproduce_cmd->add_option("--epochs", epochs, "maximum epochs")->check(CLI::PositiveNumber);

    CLI::App* validate_cmd =
        app.add_subcommand("validate-data", "check dataset integrity and fold plan");
    (void)validate_cmd;

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (train_cmd->parsed()) {
            return cmd_train(common, model_name, structure, activation, split, seed, epochs);
        }
        if (sweep_cmd->parsed()) {
            return cmd_sweep(common, model_name, seed, restarts, epochs);
        }
        if (predict_cmd->parsed()) {
            return cmd_predict(common, checkpoint_path, split_arg);
        }
        if (reproduce_cmd->parsed()) {
            return cmd_reproduce(common, seed, restarts, epochs);
        }
        return cmd_validate_data(common);
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
