#include "cobrasurv/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

namespace cobrasurv {

namespace {

std::optional<double> parse_number(std::string_view cell) {
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
    if (cell.empty()) return std::nullopt;
    if (cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
    return value;
}

bool is_missing(std::string_view cell) {
    while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
    while (!cell.empty() && cell.back() == ' ') cell.remove_suffix(1);
    return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "?";
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell.push_back('"');
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cell.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else {
            cell.push_back(ch);
        }
    }
    cells.push_back(std::move(cell));
    return cells;
}

Index column_index(const RawTable& table, const std::string& name) {
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) throw DataError("column '" + name + "' not found in header");
    return static_cast<Index>(it - table.header.begin());
}

// Data rows are numbered from 1; the header is line 1 of the file.
std::string row_label(std::size_t row) {
    return "row " + std::to_string(row + 1) + " (line " + std::to_string(row + 2) + ")";
}

void read_outcome(const RawTable& table, Index time_idx, Index event_idx, VectorXd& time, VectorXi& event) {
    const auto n = static_cast<Index>(table.rows.size());
    time.resize(n);
    event.resize(n);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto t = parse_number(row[static_cast<std::size_t>(time_idx)]);
        if (!t || !std::isfinite(*t)) throw DataError("non-numeric time at " + row_label(r));
        if (!(*t > 0.0)) throw DataError("time must be positive at " + row_label(r));
        const auto e = parse_number(row[static_cast<std::size_t>(event_idx)]);
        if (!e || (*e != 0.0 && *e != 1.0)) throw DataError("event flag must be 0 or 1 at " + row_label(r));
        time[static_cast<Index>(r)] = *t;
        event[static_cast<Index>(r)] = static_cast<int>(*e);
    }
}

}  // namespace

SurvivalDataset::SurvivalDataset(MatrixXd covariates, VectorXd time, VectorXi event,
                                 std::vector<std::string> feature_names)
    : covariates_(std::move(covariates)),
      time_(std::move(time)),
      event_(std::move(event)),
      feature_names_(std::move(feature_names)) {
    const Index n = time_.size();
    if (n == 0) throw DataError("dataset: no records");
    if (covariates_.rows() != n || event_.size() != n)
        throw DataError("dataset: covariates, times and events differ in length");
    for (Index i = 0; i < n; ++i) {
        if (!(time_[i] > 0.0) || !std::isfinite(time_[i]))
            throw DataError("dataset: record " + std::to_string(i) + " has non-positive time");
        if (event_[i] != 0 && event_[i] != 1)
            throw DataError("dataset: record " + std::to_string(i) + " has event flag outside {0,1}");
    }
    if (!covariates_.allFinite()) throw DataError("dataset: covariates must be finite");
    if (event_.sum() == 0) throw DataError("dataset: at least one observed event is required");
    if (feature_names_.empty()) {
        for (Index j = 0; j < covariates_.cols(); ++j) feature_names_.push_back("x" + std::to_string(j));
    } else if (static_cast<Index>(feature_names_.size()) != covariates_.cols()) {
        throw DataError("dataset: feature name count differs from covariate count");
    }
}

SurvivalDataset SurvivalDataset::from_records(std::span<const SurvivalRecord> records,
                                              std::vector<std::string> feature_names) {
    if (records.empty()) throw DataError("dataset: no records");
    const Index p = records.front().covariates.size();
    const auto n = static_cast<Index>(records.size());
    MatrixXd x(n, p);
    VectorXd t(n);
    VectorXi e(n);
    for (Index i = 0; i < n; ++i) {
        const auto& rec = records[static_cast<std::size_t>(i)];
        if (rec.covariates.size() != p) throw DataError("dataset: records differ in feature count");
        x.row(i) = rec.covariates.transpose();
        t[i] = rec.time;
        e[i] = rec.event;
    }
    return SurvivalDataset(std::move(x), std::move(t), std::move(e), std::move(feature_names));
}

SurvivalRecord SurvivalDataset::record(Index i) const {
    return {covariates_.row(i).transpose(), time_[i], event_[i]};
}

SurvivalDataset SurvivalDataset::subset(std::span<const Index> rows) const {
    const auto n = static_cast<Index>(rows.size());
    MatrixXd x(n, covariates_.cols());
    VectorXd t(n);
    VectorXi e(n);
    for (Index i = 0; i < n; ++i) {
        const Index r = rows[static_cast<std::size_t>(i)];
        if (r < 0 || r >= size()) throw std::out_of_range("dataset subset: row out of range");
        x.row(i) = covariates_.row(r);
        t[i] = time_[r];
        e[i] = event_[r];
    }
    return SurvivalDataset(std::move(x), std::move(t), std::move(e), feature_names_);
}

RawTable parse_csv_table(std::istream& in) {
    RawTable table;
    std::string line;
    if (!std::getline(in, line)) throw DataError("csv: missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
    table.header = split_line(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != table.header.size())
            throw DataError("csv: line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                            " cells, header has " + std::to_string(table.header.size()));
        table.rows.push_back(std::move(cells));
    }
    return table;
}

RawTable read_csv_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return parse_csv_table(in);
}

SurvivalDataset table_to_dataset(const RawTable& table, const std::string& time_col,
                                 const std::string& event_col) {
    const Index time_idx = column_index(table, time_col);
    const Index event_idx = column_index(table, event_col);
    std::vector<Index> feature_cols;
    std::vector<std::string> names;
    for (Index c = 0; c < static_cast<Index>(table.header.size()); ++c) {
        if (c == time_idx || c == event_idx) continue;
        feature_cols.push_back(c);
        names.push_back(table.header[static_cast<std::size_t>(c)]);
    }
    VectorXd time;
    VectorXi event;
    read_outcome(table, time_idx, event_idx, time, event);
    MatrixXd x(static_cast<Index>(table.rows.size()), static_cast<Index>(feature_cols.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (std::size_t j = 0; j < feature_cols.size(); ++j) {
            const auto v = parse_number(table.rows[r][static_cast<std::size_t>(feature_cols[j])]);
            if (!v || !std::isfinite(*v))
                throw DataError("non-numeric value in column '" + names[j] + "' at " + row_label(r));
            x(static_cast<Index>(r), static_cast<Index>(j)) = *v;
        }
    }
    return SurvivalDataset(std::move(x), std::move(time), std::move(event), std::move(names));
}

SurvivalDataset load_csv(const std::filesystem::path& path, const std::string& time_col,
                         const std::string& event_col) {
    return table_to_dataset(read_csv_table(path), time_col, event_col);
}

Preprocessed preprocess(const RawTable& raw, const TableSchema& schema) {
    const Index time_idx = column_index(raw, schema.time_col);
    const Index event_idx = column_index(raw, schema.event_col);
    for (const auto& name : schema.categorical) column_index(raw, name);

    VectorXd time;
    VectorXi event;
    read_outcome(raw, time_idx, event_idx, time, event);

    const std::size_t n = raw.rows.size();
    std::vector<VectorXd> columns;
    std::vector<std::string> names;
    std::vector<std::string> warnings;

    for (Index c = 0; c < static_cast<Index>(raw.header.size()); ++c) {
        if (c == time_idx || c == event_idx) continue;
        const auto& name = raw.header[static_cast<std::size_t>(c)];
        const auto cell = [&](std::size_t r) -> const std::string& { return raw.rows[r][static_cast<std::size_t>(c)]; };

        if (schema.categorical.count(name)) {
            std::map<std::string, Index> counts;
            for (std::size_t r = 0; r < n; ++r)
                if (!is_missing(cell(r))) ++counts[cell(r)];
            if (counts.empty()) throw DataError("column '" + name + "' is entirely missing");
            if (counts.size() == 1) {
                warnings.push_back("categorical column '" + name + "' has a single level and was dropped");
                continue;
            }
            // mode; ties go to the lexicographically smallest level
            std::string mode;
            Index best = -1;
            for (const auto& [level, count] : counts)
                if (count > best) { best = count; mode = level; }
            for (const auto& [level, count] : counts) {
                VectorXd indicator(static_cast<Index>(n));
                for (std::size_t r = 0; r < n; ++r) {
                    const std::string& value = is_missing(cell(r)) ? mode : cell(r);
                    indicator[static_cast<Index>(r)] = value == level ? 1.0 : 0.0;
                }
                columns.push_back(std::move(indicator));
                names.push_back(name + "=" + level);
            }
        } else {
            VectorXd values(static_cast<Index>(n));
            std::vector<bool> missing(n, false);
            double sum = 0.0;
            Index present = 0;
            for (std::size_t r = 0; r < n; ++r) {
                if (is_missing(cell(r))) {
                    missing[r] = true;
                    continue;
                }
                const auto v = parse_number(cell(r));
                if (!v || !std::isfinite(*v))
                    throw DataError("non-numeric value in column '" + name + "' at " + row_label(r) +
                                    " (declare it categorical?)");
                values[static_cast<Index>(r)] = *v;
                sum += *v;
                ++present;
            }
            if (present == 0) throw DataError("column '" + name + "' is entirely missing");
            const double mean = sum / static_cast<double>(present);
            for (std::size_t r = 0; r < n; ++r)
                if (missing[r]) values[static_cast<Index>(r)] = mean;
            columns.push_back(std::move(values));
            names.push_back(name);
        }
    }

    MatrixXd x(static_cast<Index>(n), static_cast<Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) x.col(static_cast<Index>(j)) = columns[j];
    return {SurvivalDataset(std::move(x), std::move(time), std::move(event), std::move(names)),
            std::move(warnings)};
}

std::vector<std::vector<Index>> kfold_indices(Index n, int folds, std::uint64_t seed) {
    if (folds < 2) throw std::invalid_argument("kfold: folds must be at least 2");
    if (folds > n) throw std::invalid_argument("kfold: more folds than records");
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);

    std::vector<std::vector<Index>> out(static_cast<std::size_t>(folds));
    const Index base = n / folds;
    const Index extra = n % folds;
    Index pos = 0;
    for (Index f = 0; f < folds; ++f) {
        const Index len = base + (f < extra ? 1 : 0);
        auto& fold = out[static_cast<std::size_t>(f)];
        fold.assign(perm.begin() + pos, perm.begin() + pos + len);
        std::sort(fold.begin(), fold.end());
        pos += len;
    }
    return out;
}

std::vector<Index> complement_rows(std::span<const Index> rows, Index n) {
    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    for (const Index r : rows) taken[static_cast<std::size_t>(r)] = true;
    std::vector<Index> out;
    out.reserve(static_cast<std::size_t>(n) - rows.size());
    for (Index i = 0; i < n; ++i)
        if (!taken[static_cast<std::size_t>(i)]) out.push_back(i);
    return out;
}

std::vector<std::pair<SurvivalDataset, SurvivalDataset>> kfold_split(const SurvivalDataset& data, int folds,
                                                                     std::uint64_t seed) {
    std::vector<std::pair<SurvivalDataset, SurvivalDataset>> out;
    for (const auto& test_rows : kfold_indices(data.size(), folds, seed)) {
        const auto train_rows = complement_rows(test_rows, data.size());
        out.emplace_back(data.subset(train_rows), data.subset(test_rows));
    }
    return out;
}

DatasetSplit cobra_split(const SurvivalDataset& train, double l_fraction, std::uint64_t seed) {
    if (!(l_fraction > 0.0 && l_fraction < 1.0))
        throw std::invalid_argument("cobra split: l_fraction must lie in (0,1)");
    const Index n = train.size();
    const auto l = static_cast<Index>(std::lround(l_fraction * static_cast<double>(n)));
    const Index k = n - l;
    if (l < 1 || k < 1)
        throw std::invalid_argument("cobra split: " + std::to_string(n) + " records with l_fraction " +
                                    std::to_string(l_fraction) + " leaves an empty part");
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Index> k_rows(perm.begin(), perm.begin() + k);
    std::vector<Index> l_rows(perm.begin() + k, perm.end());
    std::sort(k_rows.begin(), k_rows.end());
    std::sort(l_rows.begin(), l_rows.end());
    return {train.subset(k_rows), train.subset(l_rows), std::move(k_rows), std::move(l_rows), seed};
}

void SyntheticConfig::validate() const {
    if (n < 1) throw std::invalid_argument("synthetic: n must be positive");
    if (!(censor_fraction >= 0.0 && censor_fraction < 1.0))
        throw std::invalid_argument("synthetic: censor_fraction must lie in [0,1)");
    if (dim < 4) throw std::invalid_argument("synthetic: dim must be at least 4");
    if (std::lround(censor_fraction * static_cast<double>(n)) >= n)
        throw std::invalid_argument("synthetic: censoring would leave no events");
}

double synthetic_scale(const Eigen::Ref<const VectorXd>& x) {
    return 2.0 + std::log(13.0 * x[0] + 5.0 * x[1] + 7.0 * x[2]) + x[3];
}

SyntheticSample generate_synthetic_sample(const SyntheticConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    MatrixXd x(cfg.n, cfg.dim);
    for (Index i = 0; i < cfg.n; ++i) {
        // The scale can be <= 0 only in a corner of volume ~1e-6; such rows are redrawn.
        do {
            for (Index j = 0; j < cfg.dim; ++j) x(i, j) = 1.0 - unit(rng);  // (0,1]
        } while (!(synthetic_scale(x.row(i).transpose()) > 0.0));
    }

    VectorXd latent(cfg.n);
    for (Index i = 0; i < cfg.n; ++i) {
        std::weibull_distribution<double> weibull(2.0, synthetic_scale(x.row(i).transpose()));
        double t = 0.0;
        while (!(t > 0.0)) t = weibull(rng);
        latent[i] = t;
    }

    VectorXd time = latent;
    VectorXi event = VectorXi::Ones(cfg.n);
    std::vector<Index> perm(static_cast<std::size_t>(cfg.n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto censored = static_cast<Index>(std::lround(cfg.censor_fraction * static_cast<double>(cfg.n)));
    for (Index c = 0; c < censored; ++c) {
        const Index i = perm[static_cast<std::size_t>(c)];
        double u = 0.0;
        while (!(u > 0.0)) u = unit(rng);  // (0,1)
        time[i] = latent[i] * u;
        event[i] = 0;
    }
    return {SurvivalDataset(std::move(x), std::move(time), std::move(event)), std::move(latent)};
}

SurvivalDataset generate_synthetic(const SyntheticConfig& cfg) {
    return generate_synthetic_sample(cfg).data;
}

}  // namespace cobrasurv
