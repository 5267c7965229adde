#include "peelnet/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "peelnet/errors.hpp"
#include "format.hpp"

namespace peelnet {

namespace {

const Dataset kCanonical = {
    {1, 10, 41.8, 174.1584, 1722.719, 393.4, 25.64973},
    {2, 15, 35.6, 171.1613, 1529.699, 263.8, 25.57726},
    {3, 20, 33.8, 165.5169, 1370.545, 199.6, 25.56427},
    {4, 25, 32.4, 160.1255, 1240.153, 161.6, 25.59890},
    {5, 30, 31.2, 155.0284, 1129.391, 136.6, 25.60988},
    {6, 35, 30.6, 150.3356, 1034.944, 119.0, 25.55115},
    {7, 40, 30.2, 145.7655, 950.3074, 106.2, 25.55958},
    {8, 45, 30.0, 141.2537, 872.9422, 96.6, 25.61840},
    {9, 50, 30.2, 136.8172, 801.4117, 89.2, 25.65779},
    {10, 55, 30.6, 132.2554, 733.2346, 83.4, 25.62680},
    {11, 60, 31.4, 127.5051, 667.3803, 78.8, 25.53845},
    {12, 65, 32.8, 122.5176, 602.7001, 75.4, 25.66338},
    {13, 70, 34.4, 117.0706, 537.6730, 72.6, 25.51802},
    {14, 75, 36.8, 110.9777, 471.2534, 70.6, 25.49363},
    {15, 80, 40.2, 104.0514, 402.4569, 69.4, 25.69447},
    {16, 85, 44.8, 95.87533, 330.1474, 68.4, 25.44845},
    {17, 90, 51.8, 86.18540, 254.5306, 68.2, 25.49894},
};

constexpr const char* kCsvHeader = "case,theta_p_deg,u_max_nm,Fn_max_nN,Ft_max_nN,u_det_nm,alpha_det_deg";

const std::vector<Column> kModelIColumns = {Column::UMax, Column::FnMax, Column::FtMax};
const std::vector<Column> kModelIIColumns = {Column::UDet, Column::AlphaDet};

double parse_cell(const std::string& cell, int row, const std::string& col) {
    double value = 0;
    const char* begin = cell.c_str();
    const char* end = begin + cell.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        throw IngestionError("non-numeric cell '" + cell + "' at row " + std::to_string(row) +
                             ", column " + col);
    }
    return value;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = line.find(',', pos);
        cells.push_back(line.substr(pos, comma == std::string::npos ? comma : comma - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return cells;
}

}  // namespace

double column_value(const PeelingRecord& r, Column c) {
    switch (c) {
        case Column::ThetaP: return r.theta_p_deg;
        case Column::UMax: return r.u_max_nm;
        case Column::FnMax: return r.fn_max_nn;
        case Column::FtMax: return r.ft_max_nn;
        case Column::UDet: return r.u_det_nm;
        case Column::AlphaDet: return r.alpha_det_deg;
    }
    throw ShapeError("column_value: bad column");
}

std::string column_name(Column c) {
    switch (c) {
        case Column::ThetaP: return "theta_p_deg";
        case Column::UMax: return "u_max_nm";
        case Column::FnMax: return "Fn_max_nN";
        case Column::FtMax: return "Ft_max_nN";
        case Column::UDet: return "u_det_nm";
        case Column::AlphaDet: return "alpha_det_deg";
    }
    throw ShapeError("column_name: bad column");
}

const Dataset& canonical_dataset() {
    return kCanonical;
}

std::uint64_t dataset_checksum(const Dataset& records) {
    const std::string csv = to_csv(records);
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char byte : csv) {
        h ^= byte;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t canonical_checksum() {
    static const std::uint64_t sum = dataset_checksum(kCanonical);
    return sum;
}

Dataset load_csv(std::istream& in, bool require_canonical) {
    std::string line;
    if (!std::getline(in, line)) {
        throw IngestionError("empty input, expected header " + std::string(kCsvHeader));
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) {
        throw IngestionError("bad header '" + line + "', expected '" + kCsvHeader + "'");
    }
    Dataset records;
    int row = 1;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != 7) {
            throw IngestionError("row " + std::to_string(row) + " has " +
                                 std::to_string(cells.size()) + " cells, expected 7");
        }
        PeelingRecord r;
        r.case_id = static_cast<int>(parse_cell(cells[0], row, "case"));
        r.theta_p_deg = parse_cell(cells[1], row, "theta_p_deg");
        r.u_max_nm = parse_cell(cells[2], row, "u_max_nm");
        r.fn_max_nn = parse_cell(cells[3], row, "Fn_max_nN");
        r.ft_max_nn = parse_cell(cells[4], row, "Ft_max_nN");
        r.u_det_nm = parse_cell(cells[5], row, "u_det_nm");
        r.alpha_det_deg = parse_cell(cells[6], row, "alpha_det_deg");
        records.push_back(r);
        ++row;
    }
    if (require_canonical && records.size() != kNumCases) {
        throw IngestionError("canonical dataset must have " + std::to_string(kNumCases) +
                             " rows, got " + std::to_string(records.size()));
    }
    return records;
}

Dataset load_csv_file(const std::string& path, bool require_canonical) {
    std::ifstream in(path);
    if (!in) {
        throw IngestionError("cannot open " + path);
    }
    return load_csv(in, require_canonical);
}

std::string to_csv(const Dataset& records) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const PeelingRecord& r : records) {
        out += std::to_string(r.case_id);
        for (Column c : {Column::ThetaP, Column::UMax, Column::FnMax, Column::FtMax, Column::UDet,
                         Column::AlphaDet}) {
            out += ',';
            out += detail::format_double(column_value(r, c));
        }
        out += '\n';
    }
    return out;
}

std::string to_string(Model m) {
    return m == Model::I ? "I" : "II";
}

Model model_from_string(const std::string& name) {
    if (name == "I" || name == "i" || name == "1") return Model::I;
    if (name == "II" || name == "ii" || name == "2") return Model::II;
    throw ShapeError("unknown model '" + name + "', expected I or II");
}

const std::vector<Column>& model_output_columns(Model m) {
    return m == Model::I ? kModelIColumns : kModelIIColumns;
}

int recommended_hidden_size(Model m) {
    return m == Model::I ? 5 : 2;
}

const FoldPlan& fold_plan() {
    static const FoldPlan plan = [] {
        FoldPlan p;
        p.testing = {{{3, 4, 7, 9}, {12, 13, 17}, {1, 6, 10, 11}, {2, 8, 14}, {5, 15, 16}}};
        for (int s = 0; s < kNumSplits; ++s) {
            for (int id = 1; id <= kNumCases; ++id) {
                if (std::find(p.testing[s].begin(), p.testing[s].end(), id) == p.testing[s].end()) {
                    p.training[s].push_back(id);
                }
            }
        }
        return p;
    }();
    return plan;
}

Normalizer Normalizer::fit(const Dataset& records) {
    if (records.empty()) {
        throw IngestionError("normalizer: empty dataset");
    }
    Normalizer n;
    for (int c = 0; c < 6; ++c) {
        double mx = 0;
        for (const PeelingRecord& r : records) {
            mx = std::max(mx, column_value(r, static_cast<Column>(c)));
        }
        if (mx <= 0) {
            throw IngestionError("normalizer: non-positive maximum in column " +
                                 column_name(static_cast<Column>(c)));
        }
        n.max_[c] = mx;
    }
    return n;
}

double Normalizer::column_max(Column c) const {
    return max_[static_cast<int>(c)];
}

double Normalizer::apply(Column c, double value) const {
    return value / max_[static_cast<int>(c)];
}

double Normalizer::invert(Column c, double normalized) const {
    return normalized * max_[static_cast<int>(c)];
}

SampleSet build_pairs(const Dataset& records, const Normalizer& norm, Model model,
                      const std::vector<int>& case_ids) {
    const auto& cols = model_output_columns(model);
    SampleSet set;
    for (int id : case_ids) {
        const auto it = std::find_if(records.begin(), records.end(),
                                     [id](const PeelingRecord& r) { return r.case_id == id; });
        if (it == records.end()) {
            throw IngestionError("case id " + std::to_string(id) + " not in dataset");
        }
        Vector u(1);
        u[0] = norm.apply(Column::ThetaP, it->theta_p_deg);
        Vector t(static_cast<int>(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j) {
            t[static_cast<int>(j)] = norm.apply(cols[j], column_value(*it, cols[j]));
        }
        set.inputs.push_back(std::move(u));
        set.targets.push_back(std::move(t));
        set.case_ids.push_back(id);
    }
    return set;
}

namespace {

void check_split(int split) {
    if (split < 1 || split > kNumSplits) {
        throw ShapeError("split index " + std::to_string(split) + " out of range 1.." +
                         std::to_string(kNumSplits));
    }
}

}  // namespace

SampleSet build_training_pairs(const Dataset& records, const Normalizer& norm, Model model,
                               int split) {
    check_split(split);
    return build_pairs(records, norm, model, fold_plan().training[split - 1]);
}

SampleSet build_testing_pairs(const Dataset& records, const Normalizer& norm, Model model,
                              int split) {
    check_split(split);
    return build_pairs(records, norm, model, fold_plan().testing[split - 1]);
}

}  // namespace peelnet
