#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "peelnet/data.hpp"
#include "peelnet/trainer.hpp"

namespace peelnet {

/// Mean squared error, E_D / n_t.
double mse(const Vector& errors, int n_t);

/// Relative error (t - a) / t. Throws ShapeError when t == 0.
double relative_error(double target, double predicted);

struct SweepConfig {
    Model model = Model::I;
    std::vector<int> hidden_sizes = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    int restarts = 15;
    TrainConfig train;
    std::uint64_t master_seed = 0;
    // Retain the full per-epoch history of every run (for invariant audits).
    bool keep_reports = false;

    void validate() const;
};

/// Outcome of one (hidden size, split, restart) training run.
struct SweepRun {
    int hidden_size = 0;
    int split = 0;
    int restart = 0;
    std::uint64_t seed = 0;
    bool succeeded = false;
    std::string failure;          // empty on success
    StopReason stop_reason = StopReason::MaxEpochs;
    TrainState final_state;
    double train_mse = 0;
    double test_mse = 0;
    TrainReport report;          // populated only under keep_reports
};

struct SweepReport {
    SweepConfig config;
    std::vector<SweepRun> runs;   // fixed (hidden, split, restart) order
    // Mean over splits of the test MSE of each split's best restart
    // (lowest final training MSE); present only for hidden sizes where
    // every split has at least one successful run.
    std::map<int, double> mean_test_mse;
    int selected_hidden_size = 0;
    int failed_runs = 0;
};

/// Broad-minimum rule: the smallest hidden size whose mean MSE is within
/// 10% of the curve minimum. Pure function of the curve.
int select_hidden_size(const std::map<int, double>& mean_test_mse);

/// Mean over splits of the test MSE of each split's best restart (lowest
/// final training MSE, ties to the lowest restart index); a hidden size is
/// present only when every split has a successful run. Pure function of the
/// run set, independent of run order.
std::map<int, double> aggregate_mean_test_mse(const std::vector<SweepRun>& runs);

/// Train restarts x 5 splits per hidden size and aggregate.
SweepReport run_sweep(const SweepConfig& config, const Dataset& records);

/// One test-case prediction with denormalized values.
struct CasePrediction {
    int case_id = 0;
    int split = 0;
    double theta_p_deg = 0;
    std::vector<double> desired;
    std::vector<double> predicted;
    std::vector<double> re_percent;  // 100 * |t - a| / |t| per output
};

struct OutputErrorStats {
    Column column;
    double max_re_percent = 0;
    double min_re_percent = 0;
    double avg_re_percent = 0;
};

struct PredictionReport {
    Model model = Model::I;
    std::vector<CasePrediction> cases;
    std::vector<OutputErrorStats> stats;  // one per output column
};

/// Forward pass on a split's test fold, denormalized, with per-output
/// relative-error statistics.
PredictionReport predict_and_report(const NetworkParams& params, Model model, int split,
                                    const Dataset& records);

/// Relative-error stats across a set of case predictions.
std::vector<OutputErrorStats> aggregate_stats(Model model,
                                              const std::vector<CasePrediction>& cases);

/// Acceptance band on the aggregated relative errors per output.
struct ReBand {
    Column column;
    double avg_limit_percent = 0;
    std::optional<double> max_limit_percent;
};

const std::vector<ReBand>& re_bands(Model m);

struct RetrainOutcome {
    int split = 0;
    std::uint64_t seed = 0;
    int restart = 0;
    NetworkParams params;
    TrainReport report;
    double train_mse = 0;
    double test_mse = 0;
};

struct ModelReproduction {
    Model model = Model::I;
    SweepReport sweep;
    int selected_hidden_size = 0;
    std::vector<RetrainOutcome> finals;      // one per split
    std::vector<SweepRun> retrain_runs;      // every retrain candidate
    std::vector<CasePrediction> predictions; // all 17 cases across splits
    std::vector<OutputErrorStats> stats;
};

struct ReproduceConfig {
    std::uint64_t master_seed = 0;
    int restarts = 15;
    int max_epochs = 2000;
    bool keep_reports = false;
};

struct ReproduceResult {
    ReproduceConfig config;
    std::vector<ModelReproduction> models;  // model I then model II
};

/// Full workflow: for each model, sweep hidden sizes, select the structure,
/// retrain each split with restarts (best restart by final training MSE),
/// and predict the test folds.
ReproduceResult reproduce(const ReproduceConfig& config, const Dataset& records);

/// Write the report bundle (sweep.json, tables/, figures/, checkpoints/)
/// under the given directory.
void write_bundle(const ReproduceResult& result, const std::string& out_dir);

}  // namespace peelnet
