#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "peelnet/data.hpp"
#include "peelnet/evaluate.hpp"
#include "peelnet/report_io.hpp"

using namespace peelnet;

TEST_CASE("mse arithmetic") {
    Vector e(2);
    e << 1, 1;
    CHECK(mse(e, 2) == 1.0);
    CHECK(mse(Vector::Zero(5), 5) == 0.0);
    Vector scaled = Vector::Zero(1);
    scaled[0] = std::sqrt(2.6e-3);
    CHECK(mse(scaled, 13) == doctest::Approx(2e-4).epsilon(1e-12));
    CHECK_THROWS_AS(mse(e, 0), ShapeError);
}

TEST_CASE("relative error") {
    CHECK(relative_error(2.0, 2.0) == 0.0);
    CHECK(relative_error(2.0, 1.0) == 0.5);
    CHECK(relative_error(-4.0, -5.0) == doctest::Approx(-0.25).epsilon(1e-15));
    CHECK_THROWS_AS(relative_error(0.0, 1.0), ShapeError);
}

TEST_CASE("percent RE equals 100 * |raw| exactly") {
    const Dataset& records = canonical_dataset();
    const NetworkParams p = random_params(tanh_hidden_spec(1, {1, 2, 2}), 7);
    const PredictionReport report = predict_and_report(p, Model::II, 1, records);
    CHECK(!report.cases.empty());
    for (const CasePrediction& cp : report.cases) {
        for (std::size_t j = 0; j < cp.desired.size(); ++j) {
            const double raw = relative_error(cp.desired[j], cp.predicted[j]);
            CHECK(cp.re_percent[j] == doctest::Approx(100.0 * std::abs(raw)).epsilon(1e-12));
        }
    }
}

TEST_CASE("select_hidden_size: broad-minimum rule") {
    SUBCASE("smallest within 10% of the minimum wins") {
        CHECK(select_hidden_size({{1, 1.0}, {2, 0.105}, {3, 0.1}, {4, 0.2}}) == 2);
    }
    SUBCASE("strict minimum when the curve is steep") {
        CHECK(select_hidden_size({{1, 1.0}, {2, 0.5}, {3, 0.1}, {4, 0.3}}) == 3);
    }
    SUBCASE("ties break to the smaller size") {
        CHECK(select_hidden_size({{1, 0.1}, {2, 0.1}, {3, 0.1}}) == 1);
    }
    SUBCASE("identical curves give identical selections") {
        const std::map<int, double> curve = {{1, 0.4}, {2, 0.09}, {3, 0.08}, {5, 0.2}};
        CHECK(select_hidden_size(curve) == select_hidden_size(curve));
    }
    SUBCASE("empty curve rejected") {
        CHECK_THROWS_AS(select_hidden_size({}), ShapeError);
    }
}

TEST_CASE("predict_and_report: exact params give zero RE") {
    // constant network against constant dataset columns: predictions hit the
    // targets exactly, so every RE must be zero.
    Dataset constant = canonical_dataset();
    for (PeelingRecord& r : constant) {
        r.u_det_nm = 100.0;
        r.alpha_det_deg = 25.0;
    }
    NetworkParams p = zero_params(tanh_hidden_spec(1, {1, 2, 2}));
    p.biases[2] << 1.0, 1.0;  // constant output 1.0 -> denormalizes to column max
    const PredictionReport report = predict_and_report(p, Model::II, 1, constant);
    for (const CasePrediction& cp : report.cases) {
        CHECK(cp.re_percent[0] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(cp.re_percent[1] == doctest::Approx(0.0).epsilon(1e-12));
    }
    for (const OutputErrorStats& s : report.stats) {
        CHECK(s.avg_re_percent == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("aggregate_mean_test_mse: order-invariant and complete-splits-only") {
    std::vector<SweepRun> runs;
    const auto add = [&](int h, int split, int restart, double train_mse, double test_mse,
                         bool ok = true) {
        SweepRun r;
        r.hidden_size = h;
        r.split = split;
        r.restart = restart;
        r.succeeded = ok;
        r.train_mse = train_mse;
        r.test_mse = test_mse;
        runs.push_back(r);
    };
    // h=1: all five splits, two restarts each; best-by-train marked by test value
    for (int split = 1; split <= 5; ++split) {
        add(1, split, 0, 0.5, 99.0);           // worse train -> ignored
        add(1, split, 1, 0.1, 1.0 * split);    // best train
    }
    // h=2: split 3 has only failures -> no curve entry
    for (int split = 1; split <= 5; ++split) {
        add(2, split, 0, 0.1, 1.0, split != 3);
    }
    auto curve = aggregate_mean_test_mse(runs);
    REQUIRE(curve.count(1) == 1);
    CHECK(curve.at(1) == doctest::Approx((1 + 2 + 3 + 4 + 5) / 5.0).epsilon(1e-15));
    CHECK(curve.count(2) == 0);

    std::mt19937_64 gen(5);
    for (int rep = 0; rep < 5; ++rep) {
        std::shuffle(runs.begin(), runs.end(), gen);
        const auto shuffled = aggregate_mean_test_mse(runs);
        CHECK(shuffled == curve);
    }
}

TEST_CASE("aggregate_mean_test_mse: restart ties break to the lower index") {
    std::vector<SweepRun> runs;
    for (int split = 1; split <= 5; ++split) {
        SweepRun a;
        a.hidden_size = 1;
        a.split = split;
        a.restart = 1;
        a.succeeded = true;
        a.train_mse = 0.5;
        a.test_mse = 7.0;
        SweepRun b = a;
        b.restart = 0;
        b.test_mse = 3.0;
        runs.push_back(a);
        runs.push_back(b);
    }
    CHECK(aggregate_mean_test_mse(runs).at(1) == 3.0);
}

TEST_CASE("run_sweep: small deterministic sweep") {
    SweepConfig config;
    config.model = Model::II;
    config.hidden_sizes = {1};
    config.restarts = 2;
    config.train.max_epochs = 60;
    config.master_seed = 11;

    const Dataset& records = canonical_dataset();
    const SweepReport a = run_sweep(config, records);
    const SweepReport b = run_sweep(config, records);

    CHECK(a.runs.size() == 1 * 5 * 2);
    REQUIRE(a.runs.size() == b.runs.size());
    for (std::size_t i = 0; i < a.runs.size(); ++i) {
        CHECK(a.runs[i].hidden_size == b.runs[i].hidden_size);
        CHECK(a.runs[i].split == b.runs[i].split);
        CHECK(a.runs[i].restart == b.runs[i].restart);
        CHECK(a.runs[i].seed == b.runs[i].seed);
        CHECK(a.runs[i].succeeded == b.runs[i].succeeded);
        CHECK(a.runs[i].test_mse == b.runs[i].test_mse);
        CHECK(a.runs[i].train_mse == b.runs[i].train_mse);
    }
    CHECK(a.mean_test_mse == b.mean_test_mse);
    CHECK(a.selected_hidden_size == b.selected_hidden_size);
}

TEST_CASE("run_sweep: over-parameterized sizes are recorded as failures") {
    SweepConfig config;
    config.model = Model::II;
    config.hidden_sizes = {1, 10};  // 1-10-2 has K = 44 >= Q
    config.restarts = 1;
    config.train.max_epochs = 40;
    config.master_seed = 3;

    const SweepReport report = run_sweep(config, canonical_dataset());
    CHECK(report.runs.size() == 2 * 5 * 1);
    int failed = 0;
    for (const SweepRun& run : report.runs) {
        if (run.hidden_size == 10) {
            CHECK(!run.succeeded);
            CHECK(!run.failure.empty());
            ++failed;
        }
    }
    CHECK(failed == 5);
    CHECK(report.failed_runs == failed);
    CHECK(report.mean_test_mse.count(10) == 0);
    CHECK(report.selected_hidden_size == 1);
}

TEST_CASE("re_bands cover the model outputs") {
    for (Model m : {Model::I, Model::II}) {
        const auto& bands = re_bands(m);
        CHECK(bands.size() == model_output_columns(m).size());
        for (const ReBand& band : bands) {
            const auto& cols = model_output_columns(m);
            CHECK(std::find(cols.begin(), cols.end(), band.column) != cols.end());
        }
    }
}

TEST_CASE("sweep bands: one hidden neuron is markedly worse than two for model II") {
    SweepConfig config;
    config.model = Model::II;
    config.hidden_sizes = {1, 2};
    config.master_seed = 202;

    const SweepReport report = run_sweep(config, canonical_dataset());
    REQUIRE(report.mean_test_mse.count(1) == 1);
    REQUIRE(report.mean_test_mse.count(2) == 1);
    CHECK(report.mean_test_mse.at(1) >= 2.0 * report.mean_test_mse.at(2));
}

TEST_CASE("sweep bands: model I with one hidden neuron sits at the expected magnitude") {
    SweepConfig config;
    config.model = Model::I;
    config.hidden_sizes = {1};
    config.master_seed = 203;

    const SweepReport report = run_sweep(config, canonical_dataset());
    REQUIRE(report.mean_test_mse.count(1) == 1);
    CHECK(report.mean_test_mse.at(1) >= 7e-4);
    CHECK(report.mean_test_mse.at(1) <= 7e-2);
}

TEST_CASE("reproduce bundle: checkpoints reproduce the reported test MSE") {
    namespace fs = std::filesystem;
    ReproduceConfig config;
    config.master_seed = 55;
    config.restarts = 5;
    const Dataset& records = canonical_dataset();
    const ReproduceResult result = reproduce(config, records);

    const fs::path dir = fs::temp_directory_path() / "peelnet_eval_bundle";
    fs::remove_all(dir);
    write_bundle(result, dir.string());

    const Normalizer norm = Normalizer::fit(records);
    for (const ModelReproduction& model : result.models) {
        for (const RetrainOutcome& outcome : model.finals) {
            const std::string name = "model_" + to_string(model.model) + "_split_" +
                                     std::to_string(outcome.split) + ".json";
            const Checkpoint checkpoint = load_checkpoint((dir / "checkpoints" / name).string());
            const SampleSet testing =
                build_testing_pairs(records, norm, model.model, outcome.split);
            const double recomputed = mse(
                stacked_errors(checkpoint.params, testing.inputs, testing.targets),
                testing.size());
            CHECK(recomputed == outcome.test_mse);  // bit-exact through the JSON round-trip
        }
    }

    // figure data: five split series over the test-fold peeling angles
    std::ifstream fig7(dir / "figures" / "fig7.csv");
    REQUIRE(fig7.good());
    std::string line;
    std::getline(fig7, line);
    CHECK(line == "split,case,theta_p_deg,desired,predicted");
    std::set<int> splits;
    int rows = 0;
    while (std::getline(fig7, line)) {
        if (line.empty()) continue;
        splits.insert(line[0] - '0');
        ++rows;
    }
    CHECK(rows == kNumCases);
    CHECK(splits == std::set<int>{1, 2, 3, 4, 5});

    std::ifstream t4(dir / "tables" / "t4.csv");
    REQUIRE(t4.good());
    int t4_rows = -1;  // header
    while (std::getline(t4, line)) {
        if (!line.empty()) ++t4_rows;
    }
    CHECK(t4_rows == kNumSplits);
}
