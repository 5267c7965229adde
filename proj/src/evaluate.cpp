#include "peelnet/evaluate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <limits>

#include <json.hpp>

#include "format.hpp"
#include "parallel.hpp"
#include "peelnet/report_io.hpp"
#include "peelnet/rng.hpp"

namespace peelnet {

using nlohmann::json;

namespace {

constexpr std::uint64_t kPhaseSweep = 1;
constexpr std::uint64_t kPhaseRetrain = 2;

std::uint64_t model_tag(Model m) {
    return m == Model::I ? 1 : 2;
}

NetworkSpec spec_for(Model model, int hidden) {
    const int n_out = static_cast<int>(model_output_columns(model).size());
    return tanh_hidden_spec(1, {1, hidden, n_out});
}

}  // namespace

double mse(const Vector& errors, int n_t) {
    if (n_t < 1) {
        throw ShapeError("mse: n_t must be >= 1");
    }
    return errors.squaredNorm() / n_t;
}

double relative_error(double target, double predicted) {
    if (target == 0) {
        throw ShapeError("relative_error: target is zero");
    }
    return (target - predicted) / target;
}

void SweepConfig::validate() const {
    if (restarts < 1) throw ShapeError("sweep config: restarts must be >= 1");
    if (hidden_sizes.empty()) throw ShapeError("sweep config: hidden_sizes must be nonempty");
    for (int h : hidden_sizes) {
        if (h < 1) throw ShapeError("sweep config: hidden sizes must be >= 1");
    }
    train.validate();
}

int select_hidden_size(const std::map<int, double>& mean_test_mse) {
    if (mean_test_mse.empty()) {
        throw ShapeError("select_hidden_size: empty MSE curve");
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [h, value] : mean_test_mse) {
        best = std::min(best, value);
    }
    for (const auto& [h, value] : mean_test_mse) {  // map iterates in ascending h
        if (value <= 1.1 * best) {
            return h;
        }
    }
    return mean_test_mse.begin()->first;
}

// Mean over splits of the test MSE of each split's best restart (lowest
// final training MSE, ties to the lowest restart index). Order-independent:
// pure function of the run set.
std::map<int, double> aggregate_mean_test_mse(const std::vector<SweepRun>& runs) {
    struct Best {
        double train_mse = std::numeric_limits<double>::infinity();
        int restart = std::numeric_limits<int>::max();
        double test_mse = 0;
        bool present = false;
    };
    std::map<int, std::array<Best, kNumSplits>> best;
    for (const SweepRun& run : runs) {
        if (!run.succeeded) continue;
        Best& slot = best[run.hidden_size][run.split - 1];
        if (!slot.present || run.train_mse < slot.train_mse ||
            (run.train_mse == slot.train_mse && run.restart < slot.restart)) {
            slot = {run.train_mse, run.restart, run.test_mse, true};
        }
    }
    std::map<int, double> curve;
    for (const auto& [h, splits] : best) {
        double sum = 0;
        bool complete = true;
        for (const Best& b : splits) {
            if (!b.present) {
                complete = false;
                break;
            }
            sum += b.test_mse;
        }
        if (complete) {
            curve[h] = sum / kNumSplits;
        }
    }
    return curve;
}

namespace {

SweepRun execute_run(Model model, int hidden, int split, int restart, const TrainConfig& base,
                     std::uint64_t master_seed, const Dataset& records, const Normalizer& norm,
                     bool keep_report) {
    SweepRun run;
    run.hidden_size = hidden;
    run.split = split;
    run.restart = restart;
    run.seed = rng::mix_seed(master_seed, {kPhaseSweep, model_tag(model),
                                           static_cast<std::uint64_t>(hidden),
                                           static_cast<std::uint64_t>(split),
                                           static_cast<std::uint64_t>(restart)});
    const SampleSet training = build_training_pairs(records, norm, model, split);
    const SampleSet testing = build_testing_pairs(records, norm, model, split);
    TrainConfig config = base;
    config.seed = run.seed;
    try {
        TrainResult result = train(spec_for(model, hidden), training, config);
        run.succeeded = true;
        run.stop_reason = result.report.stop_reason;
        run.final_state = result.report.final_state;
        run.train_mse = result.report.final_state.sse / training.size();
        run.test_mse =
            mse(stacked_errors(result.params, testing.inputs, testing.targets), testing.size());
        if (keep_report) {
            run.report = std::move(result.report);
        }
    } catch (const HyperparameterError& e) {
        run.failure = e.what();
    } catch (const DivergedError& e) {
        run.failure = e.what();
    } catch (const SingularMatrixError& e) {
        run.failure = e.what();
    }
    return run;
}

}  // namespace

SweepReport run_sweep(const SweepConfig& config, const Dataset& records) {
    config.validate();
    const Normalizer norm = Normalizer::fit(records);

    SweepReport report;
    report.config = config;
    const int per_hidden = kNumSplits * config.restarts;
    const int total = static_cast<int>(config.hidden_sizes.size()) * per_hidden;
    report.runs.resize(total);
    detail::parallel_for(total, [&](int index) {
        const int h_index = index / per_hidden;
        const int within = index % per_hidden;
        const int split = within / config.restarts + 1;
        const int restart = within % config.restarts;
        report.runs[index] = execute_run(config.model, config.hidden_sizes[h_index], split, restart,
                                         config.train, config.master_seed, records, norm,
                                         config.keep_reports);
    });
    for (const SweepRun& run : report.runs) {
        if (!run.succeeded) ++report.failed_runs;
    }
    report.mean_test_mse = aggregate_mean_test_mse(report.runs);
    report.selected_hidden_size = select_hidden_size(report.mean_test_mse);
    return report;
}

PredictionReport predict_and_report(const NetworkParams& params, Model model, int split,
                                    const Dataset& records) {
    const Normalizer norm = Normalizer::fit(records);
    const SampleSet testing = build_testing_pairs(records, norm, model, split);
    const auto& cols = model_output_columns(model);

    PredictionReport report;
    report.model = model;
    for (int i = 0; i < testing.size(); ++i) {
        CasePrediction cp;
        cp.case_id = testing.case_ids[i];
        cp.split = split;
        const auto record =
            std::find_if(records.begin(), records.end(),
                         [&](const PeelingRecord& r) { return r.case_id == cp.case_id; });
        cp.theta_p_deg = record->theta_p_deg;
        const Vector prediction = forward(params, testing.inputs[i]).prediction();
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const double desired = norm.invert(cols[j], testing.targets[i][static_cast<int>(j)]);
            const double predicted = norm.invert(cols[j], prediction[static_cast<int>(j)]);
            cp.desired.push_back(desired);
            cp.predicted.push_back(predicted);
            cp.re_percent.push_back(100.0 * std::abs(relative_error(desired, predicted)));
        }
        report.cases.push_back(std::move(cp));
    }
    report.stats = aggregate_stats(model, report.cases);
    return report;
}

std::vector<OutputErrorStats> aggregate_stats(Model model,
                                              const std::vector<CasePrediction>& cases) {
    const auto& cols = model_output_columns(model);
    std::vector<OutputErrorStats> stats;
    for (std::size_t j = 0; j < cols.size(); ++j) {
        OutputErrorStats s;
        s.column = cols[j];
        s.max_re_percent = 0;
        s.min_re_percent = std::numeric_limits<double>::infinity();
        double sum = 0;
        for (const CasePrediction& cp : cases) {
            const double re = cp.re_percent[j];
            s.max_re_percent = std::max(s.max_re_percent, re);
            s.min_re_percent = std::min(s.min_re_percent, re);
            sum += re;
        }
        s.avg_re_percent = cases.empty() ? 0 : sum / static_cast<double>(cases.size());
        if (cases.empty()) s.min_re_percent = 0;
        stats.push_back(s);
    }
    return stats;
}

const std::vector<ReBand>& re_bands(Model m) {
    static const std::vector<ReBand> bands_i = {
        {Column::UMax, 3.5, 15.0},
        {Column::FnMax, 1.0, std::nullopt},
        {Column::FtMax, 1.0, std::nullopt},
    };
    static const std::vector<ReBand> bands_ii = {
        {Column::UDet, 3.5, 15.0},
        {Column::AlphaDet, 1.0, std::nullopt},
    };
    return m == Model::I ? bands_i : bands_ii;
}

namespace {

ModelReproduction reproduce_model(Model model, const ReproduceConfig& config,
                                  const Dataset& records, const Normalizer& norm) {
    ModelReproduction out;
    out.model = model;

    SweepConfig sweep_config;
    sweep_config.model = model;
    sweep_config.restarts = config.restarts;
    sweep_config.train.max_epochs = config.max_epochs;
    sweep_config.master_seed = config.master_seed;
    sweep_config.keep_reports = config.keep_reports;
    out.sweep = run_sweep(sweep_config, records);
    out.selected_hidden_size = out.sweep.selected_hidden_size;

    const NetworkSpec spec = spec_for(model, out.selected_hidden_size);

    // Retrain per split with fresh restarts; keep the restart with the
    // lowest final training MSE (ties to the lowest restart index).
    struct Candidate {
        bool ok = false;
        TrainResult result;
        double train_mse = 0;
        std::uint64_t seed = 0;
        std::string failure;
    };
    std::vector<Candidate> candidates(kNumSplits * config.restarts);
    detail::parallel_for(static_cast<int>(candidates.size()), [&](int index) {
        const int split = index / config.restarts + 1;
        const int restart = index % config.restarts;
        Candidate& c = candidates[index];
        c.seed = rng::mix_seed(config.master_seed,
                               {kPhaseRetrain, model_tag(model),
                                static_cast<std::uint64_t>(out.selected_hidden_size),
                                static_cast<std::uint64_t>(split),
                                static_cast<std::uint64_t>(restart)});
        const SampleSet training = build_training_pairs(records, norm, model, split);
        TrainConfig train_config = sweep_config.train;
        train_config.seed = c.seed;
        try {
            c.result = train(spec, training, train_config);
            c.train_mse = c.result.report.final_state.sse / training.size();
            c.ok = true;
        } catch (const HyperparameterError& e) {
            c.failure = e.what();
        } catch (const DivergedError& e) {
            c.failure = e.what();
        } catch (const SingularMatrixError& e) {
            c.failure = e.what();
        }
    });

    for (int index = 0; index < static_cast<int>(candidates.size()); ++index) {
        const Candidate& c = candidates[index];
        SweepRun entry;
        entry.hidden_size = out.selected_hidden_size;
        entry.split = index / config.restarts + 1;
        entry.restart = index % config.restarts;
        entry.seed = c.seed;
        entry.succeeded = c.ok;
        entry.failure = c.failure;
        if (c.ok) {
            entry.stop_reason = c.result.report.stop_reason;
            entry.final_state = c.result.report.final_state;
            entry.train_mse = c.train_mse;
            const SampleSet testing = build_testing_pairs(records, norm, model, entry.split);
            entry.test_mse =
                mse(stacked_errors(c.result.params, testing.inputs, testing.targets),
                    testing.size());
            if (config.keep_reports) {
                entry.report = c.result.report;
            }
        }
        out.retrain_runs.push_back(std::move(entry));
    }

    for (int split = 1; split <= kNumSplits; ++split) {
        int best = -1;
        for (int restart = 0; restart < config.restarts; ++restart) {
            const int index = (split - 1) * config.restarts + restart;
            if (!candidates[index].ok) continue;
            if (best < 0 || candidates[index].train_mse < candidates[best].train_mse) {
                best = index;
            }
        }
        if (best < 0) {
            throw HyperparameterError("reproduce: no successful retrain for split " +
                                      std::to_string(split));
        }
        Candidate& c = candidates[best];
        RetrainOutcome outcome;
        outcome.split = split;
        outcome.seed = c.seed;
        outcome.restart = best % config.restarts;
        outcome.params = std::move(c.result.params);
        outcome.report = std::move(c.result.report);
        outcome.train_mse = c.train_mse;
        const SampleSet testing = build_testing_pairs(records, norm, model, split);
        outcome.test_mse =
            mse(stacked_errors(outcome.params, testing.inputs, testing.targets), testing.size());

        const PredictionReport predictions =
            predict_and_report(outcome.params, model, split, records);
        out.predictions.insert(out.predictions.end(), predictions.cases.begin(),
                               predictions.cases.end());
        out.finals.push_back(std::move(outcome));
    }
    out.stats = aggregate_stats(model, out.predictions);
    return out;
}

}  // namespace

ReproduceResult reproduce(const ReproduceConfig& config, const Dataset& records) {
    const Normalizer norm = Normalizer::fit(records);
    ReproduceResult result;
    result.config = config;
    result.models.push_back(reproduce_model(Model::I, config, records, norm));
    result.models.push_back(reproduce_model(Model::II, config, records, norm));
    return result;
}

namespace {

json sweep_to_json(const SweepReport& report) {
    json runs = json::array();
    for (const SweepRun& run : report.runs) {
        json entry{{"hidden", run.hidden_size},
                   {"split", run.split},
                   {"restart", run.restart},
                   {"seed", run.seed},
                   {"succeeded", run.succeeded}};
        if (run.succeeded) {
            entry["stop_reason"] = to_string(run.stop_reason);
            entry["epochs"] = run.final_state.epoch;
            entry["train_mse"] = run.train_mse;
            entry["test_mse"] = run.test_mse;
            entry["gamma"] = run.final_state.gamma;
            entry["grad_norm"] = run.final_state.grad_norm;
        } else {
            entry["failure"] = run.failure;
        }
        runs.push_back(std::move(entry));
    }
    json curve = json::array();
    for (const auto& [h, value] : report.mean_test_mse) {
        curve.push_back(json{{"hidden", h}, {"mean_test_mse", value}});
    }
    return json{{"model", to_string(report.config.model)},
                {"restarts", report.config.restarts},
                {"selected_hidden_size", report.selected_hidden_size},
                {"failed_runs", report.failed_runs},
                {"curve", curve},
                {"runs", runs}};
}

std::string training_table_csv(const ModelReproduction& model) {
    std::string out = "split,epochs,mse,sse,ssw,gamma,lambda,grad_norm,stop_reason\n";
    for (const RetrainOutcome& final : model.finals) {
        const TrainState& s = final.report.final_state;
        out += std::to_string(final.split);
        out += ',' + std::to_string(s.epoch);
        out += ',' + detail::format_double(final.train_mse);
        out += ',' + detail::format_double(s.sse);
        out += ',' + detail::format_double(s.ssw);
        out += ',' + detail::format_double(s.gamma);
        out += ',' + detail::format_double(s.lambda);
        out += ',' + detail::format_double(s.grad_norm);
        out += ',' + to_string(final.report.stop_reason);
        out += '\n';
    }
    return out;
}

std::string re_table_csv(const ModelReproduction& model) {
    std::string out = "metric";
    for (const OutputErrorStats& s : model.stats) {
        out += ',' + column_name(s.column);
    }
    out += '\n';
    const auto row = [&](const char* name, auto getter) {
        std::string line(name);
        for (const OutputErrorStats& s : model.stats) {
            line += ',' + detail::format_double(getter(s));
        }
        return line + '\n';
    };
    out += row("max_re_percent", [](const OutputErrorStats& s) { return s.max_re_percent; });
    out += row("min_re_percent", [](const OutputErrorStats& s) { return s.min_re_percent; });
    out += row("avg_re_percent", [](const OutputErrorStats& s) { return s.avg_re_percent; });
    return out;
}

std::string curve_figure_csv(const ReproduceResult& result) {
    std::string out = "model,hidden_neurons,mean_test_mse\n";
    for (const ModelReproduction& model : result.models) {
        for (const auto& [h, value] : model.sweep.mean_test_mse) {
            out += to_string(model.model);
            out += ',' + std::to_string(h);
            out += ',' + detail::format_double(value);
            out += '\n';
        }
    }
    return out;
}

std::string prediction_figure_csv(const ModelReproduction& model, Column column) {
    const auto& cols = model_output_columns(model.model);
    const auto it = std::find(cols.begin(), cols.end(), column);
    const auto j = static_cast<std::size_t>(it - cols.begin());
    std::string out = "split,case,theta_p_deg,desired,predicted\n";
    for (const CasePrediction& cp : model.predictions) {
        out += std::to_string(cp.split);
        out += ',' + std::to_string(cp.case_id);
        out += ',' + detail::format_double(cp.theta_p_deg);
        out += ',' + detail::format_double(cp.desired[j]);
        out += ',' + detail::format_double(cp.predicted[j]);
        out += '\n';
    }
    return out;
}

}  // namespace

void write_bundle(const ReproduceResult& result, const std::string& out_dir) {
    namespace fs = std::filesystem;
    const fs::path root(out_dir);
    fs::create_directories(root / "tables");
    fs::create_directories(root / "figures");
    fs::create_directories(root / "checkpoints");

    json sweep{{"master_seed", result.config.master_seed},
               {"restarts", result.config.restarts},
               {"max_epochs", result.config.max_epochs},
               {"models", json::array()}};
    for (const ModelReproduction& model : result.models) {
        json entry = sweep_to_json(model.sweep);
        entry["selected_structure"] =
            "1-" + std::to_string(model.selected_hidden_size) + "-" +
            std::to_string(model_output_columns(model.model).size());
        json finals = json::array();
        for (const RetrainOutcome& final : model.finals) {
            finals.push_back(json{{"split", final.split},
                                  {"seed", final.seed},
                                  {"restart", final.restart},
                                  {"train_mse", final.train_mse},
                                  {"test_mse", final.test_mse},
                                  {"epochs", final.report.final_state.epoch},
                                  {"stop_reason", to_string(final.report.stop_reason)}});
        }
        entry["finals"] = std::move(finals);
        sweep["models"].push_back(std::move(entry));
    }
    write_text_file((root / "sweep.json").string(), sweep.dump(2) + "\n");

    write_text_file((root / "tables" / "t4.csv").string(), training_table_csv(result.models[0]));
    write_text_file((root / "tables" / "t5.csv").string(), training_table_csv(result.models[1]));
    write_text_file((root / "tables" / "t6.csv").string(), re_table_csv(result.models[0]));
    write_text_file((root / "tables" / "t7.csv").string(), re_table_csv(result.models[1]));

    write_text_file((root / "figures" / "fig4.csv").string(), curve_figure_csv(result));
    write_text_file((root / "figures" / "fig5.csv").string(),
                    prediction_figure_csv(result.models[0], Column::FnMax));
    write_text_file((root / "figures" / "fig6.csv").string(),
                    prediction_figure_csv(result.models[0], Column::FtMax));
    write_text_file((root / "figures" / "fig7.csv").string(),
                    prediction_figure_csv(result.models[0], Column::UMax));
    write_text_file((root / "figures" / "fig8.csv").string(),
                    prediction_figure_csv(result.models[1], Column::UDet));
    write_text_file((root / "figures" / "fig9.csv").string(),
                    prediction_figure_csv(result.models[1], Column::AlphaDet));

    for (const ModelReproduction& model : result.models) {
        for (const RetrainOutcome& final : model.finals) {
            Checkpoint checkpoint;
            checkpoint.meta.model = to_string(model.model);
            checkpoint.meta.split = final.split;
            checkpoint.meta.restart = final.restart;
            checkpoint.meta.seed = final.seed;
            checkpoint.params = final.params;
            const std::string name = "model_" + to_string(model.model) + "_split_" +
                                     std::to_string(final.split) + ".json";
            save_checkpoint((root / "checkpoints" / name).string(), checkpoint);
        }
    }
}

}  // namespace peelnet
