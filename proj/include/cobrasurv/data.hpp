#pragma once

#include "cobrasurv/core.hpp"

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cobrasurv {

struct SurvivalRecord {
    VectorXd covariates;
    double time = 0.0;
    int event = 0;
};

/**
 * Right-censored sample (X, Y, delta) stored column-wise.
 *
 * Invariants checked on construction: every time is finite and positive,
 * every event flag is 0 or 1, and at least one event is observed.
 */
class SurvivalDataset {
public:
    SurvivalDataset(MatrixXd covariates, VectorXd time, VectorXi event,
                    std::vector<std::string> feature_names = {});

    static SurvivalDataset from_records(std::span<const SurvivalRecord> records,
                                        std::vector<std::string> feature_names = {});

    Index size() const noexcept { return time_.size(); }
    Index n_features() const noexcept { return covariates_.cols(); }
    Index event_count() const noexcept { return event_.sum(); }

    const MatrixXd& covariates() const noexcept { return covariates_; }
    const VectorXd& time() const noexcept { return time_; }
    const VectorXi& event() const noexcept { return event_; }
    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }

    SurvivalRecord record(Index i) const;
    SurvivalDataset subset(std::span<const Index> rows) const;
    double max_time() const { return time_.maxCoeff(); }

private:
    MatrixXd covariates_;
    VectorXd time_;
    VectorXi event_;
    std::vector<std::string> feature_names_;
};

/// Header plus string cells exactly as read from a comma-separated file.
struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Comma-separated, header row required, '.' decimal; double-quoted cells allowed.
RawTable read_csv_table(const std::filesystem::path& path);
RawTable parse_csv_table(std::istream& in);

/// Every column other than time and event becomes a numeric feature, in header order.
SurvivalDataset load_csv(const std::filesystem::path& path, const std::string& time_col,
                         const std::string& event_col);
SurvivalDataset table_to_dataset(const RawTable& table, const std::string& time_col,
                                 const std::string& event_col);

struct TableSchema {
    std::string time_col = "time";
    std::string event_col = "event";
    std::set<std::string> categorical;
};

struct Preprocessed {
    SurvivalDataset data;
    std::vector<std::string> warnings;
};

/**
 * Mean-imputes numeric columns and mode-imputes categorical ones, then one-hot
 * codes each categorical column into one indicator per level (levels sorted).
 * Empty cells and NA/NaN/nan/? are missing. Single-level categoricals are
 * dropped with a warning; all-missing columns are an error.
 */
Preprocessed preprocess(const RawTable& raw, const TableSchema& schema);

/// Fold test index sets: a seeded permutation cut into near-equal chunks, the
/// first (n mod folds) chunks one record longer.
std::vector<std::vector<Index>> kfold_indices(Index n, int folds, std::uint64_t seed);

std::vector<std::pair<SurvivalDataset, SurvivalDataset>> kfold_split(const SurvivalDataset& data, int folds,
                                                                     std::uint64_t seed);

struct DatasetSplit {
    SurvivalDataset d_k;  // machine-training part
    SurvivalDataset d_l;  // calibration part
    std::vector<Index> k_rows;
    std::vector<Index> l_rows;
    std::uint64_t seed = 0;
};

/// l = round(l_fraction * n), assigned uniformly at random; both parts sorted by row.
DatasetSplit cobra_split(const SurvivalDataset& train, double l_fraction, std::uint64_t seed);

std::vector<Index> complement_rows(std::span<const Index> rows, Index n);

struct SyntheticConfig {
    Index n = 2000;
    double censor_fraction = 0.4;
    Index dim = 9;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticSample {
    SurvivalDataset data;
    VectorXd latent_time;  // uncensored event times T_i
};

/// Link rate 2 + log(13 x0 + 5 x1 + 7 x2) + x3.
double synthetic_scale(const Eigen::Ref<const VectorXd>& x);

/**
 * Covariates uniform on (0,1] (rows with a non-positive scale redrawn);
 * event times Weibull(shape 2, scale from the link rate); exactly
 * round(censor_fraction * n) records, chosen at random, are censored at a
 * time uniform on (0, T_i).
 */
SyntheticSample generate_synthetic_sample(const SyntheticConfig& cfg);
SurvivalDataset generate_synthetic(const SyntheticConfig& cfg);

}  // namespace cobrasurv
