#pragma once

#include "cobrasurv/cobra.hpp"
#include "cobrasurv/tuning.hpp"

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>

namespace cobrasurv {

/**
 * Experiment settings read from a `key = value` file ('#' starts a comment).
 * Exactly one of the fixed COBRA parameters (epsilon, alpha, l_fraction) or a
 * search (search.trials, ...) must be given. See README for every key.
 */
struct ExperimentConfig {
    std::string data = "synthetic";  // CSV path or "synthetic"
    std::string name;                // dataset label in reports
    TableSchema schema;
    SyntheticConfig synthetic;

    std::vector<LearnerSpec> roster = default_roster();

    std::optional<CobraParams> fixed;
    std::optional<SearchSpace> search;
    int inner_folds = 3;

    int folds = 5;
    Index queries = 100;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::filesystem::path out = "out";

    bool is_synthetic() const { return data == "synthetic"; }
    /// Throws DataError on an inconsistent configuration.
    void validate() const;
    /// The file's key/value pairs, for run metadata.
    std::map<std::string, std::string> entries;
};

ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace cobrasurv
