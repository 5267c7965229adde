#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "peelnet/linalg.hpp"

namespace peelnet {

/// One finite-element peeling case: peeling angle plus the five response
/// quantities (displacement at force maximum, maximum normal and tangential
/// pull-off forces, displacement at detachment, resultant force angle at
/// detachment).
struct PeelingRecord {
    int case_id = 0;          // 1..17
    double theta_p_deg = 0;   // peeling angle [deg]
    double u_max_nm = 0;      // applied displacement at force maximum [nm]
    double fn_max_nn = 0;     // max normal pull-off force [nN]
    double ft_max_nn = 0;     // max tangential pull-off force [nN]
    double u_det_nm = 0;      // applied displacement at detachment [nm]
    double alpha_det_deg = 0; // resultant force angle at detachment [deg]
};

using Dataset = std::vector<PeelingRecord>;

/// Numeric columns of a record, used to address normalization and model
/// output selection.
enum class Column { ThetaP, UMax, FnMax, FtMax, UDet, AlphaDet };

constexpr int kNumCases = 17;
constexpr int kNumSplits = 5;

double column_value(const PeelingRecord& r, Column c);
std::string column_name(Column c);

/// The 17-case canonical dataset, embedded verbatim.
const Dataset& canonical_dataset();

/// FNV-1a checksum over the canonical CSV serialization of a dataset.
std::uint64_t dataset_checksum(const Dataset& records);

/// Checksum of the embedded canonical dataset, frozen at build time.
std::uint64_t canonical_checksum();

/// Parse a dataset from CSV with header
/// case,theta_p_deg,u_max_nm,Fn_max_nN,Ft_max_nN,u_det_nm,alpha_det_deg.
/// With require_canonical, the row count must be 17.
Dataset load_csv(std::istream& in, bool require_canonical);
Dataset load_csv_file(const std::string& path, bool require_canonical);

/// Serialize records in the same CSV schema.
std::string to_csv(const Dataset& records);

/// The two regression models: I predicts (u_max, Fn_max, Ft_max),
/// II predicts (u_det, alpha_det).
enum class Model { I, II };

std::string to_string(Model m);
Model model_from_string(const std::string& name);

const std::vector<Column>& model_output_columns(Model m);

/// Hidden-layer size of the recommended structure (1-5-3 / 1-2-2).
int recommended_hidden_size(Model m);

/// Five train/test splits over case ids 1..17; the five test folds
/// partition the case set and each training set is the exact complement.
struct FoldPlan {
    std::array<std::vector<int>, kNumSplits> testing;
    std::array<std::vector<int>, kNumSplits> training;
};

const FoldPlan& fold_plan();

/// Per-column maxima over a dataset; values are normalized by division.
class Normalizer {
  public:
    static Normalizer fit(const Dataset& records);

    double column_max(Column c) const;
    double apply(Column c, double value) const;
    double invert(Column c, double normalized) const;

  private:
    std::array<double, 6> max_{};
};

/// Input/target pairs for training or evaluation, already normalized.
struct SampleSet {
    std::vector<Vector> inputs;
    std::vector<Vector> targets;
    std::vector<int> case_ids;

    int size() const { return static_cast<int>(inputs.size()); }
};

/// Pairs for the given cases: input [theta_p / max theta_p], targets the
/// model's output columns divided by their full-dataset maxima.
SampleSet build_pairs(const Dataset& records, const Normalizer& norm, Model model,
                      const std::vector<int>& case_ids);

/// Pairs restricted to a split's training cases (split index 1..5).
SampleSet build_training_pairs(const Dataset& records, const Normalizer& norm, Model model,
                               int split);

/// Pairs restricted to a split's testing cases.
SampleSet build_testing_pairs(const Dataset& records, const Normalizer& norm, Model model,
                              int split);

}  // namespace peelnet
