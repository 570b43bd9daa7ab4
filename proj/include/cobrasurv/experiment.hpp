#pragma once

#include "cobrasurv/config.hpp"
#include "cobrasurv/metrics.hpp"
#include "cobrasurv/relevance.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace cobrasurv {

/// File name -> contents. Commands build everything in memory and write once
/// at the end, so a failed run leaves nothing behind.
using OutputFiles = std::map<std::string, std::string>;

/// Creates dir if needed and writes every file.
void write_outputs(const std::filesystem::path& dir, const OutputFiles& files);

struct LoadedData {
    SurvivalDataset data;
    std::vector<std::string> warnings;
};

/// The configured CSV (preprocessed) or the synthetic sample for cfg.seed.
LoadedData load_dataset(const ExperimentConfig& cfg);

struct FoldRow {
    std::string model;
    MetricReport report;
};

struct BenchResult {
    std::vector<FoldRow> rows;              // fold-major, roster order then "proposed"
    std::vector<CobraParams> fold_params;   // COBRA parameters used per fold
    std::vector<double> fold_objectives;    // inner-CV objective of those parameters (NaN when fixed)
};

/// Outer k-fold comparison of every roster learner and the COBRA ensemble on shared folds.
BenchResult bench(const SurvivalDataset& data, const ExperimentConfig& cfg);

struct RelevanceRun {
    CobraParams params;
    std::optional<SearchResult> search;
    SurvivalDataset queries;
    RelevanceResult relevance;
    std::vector<StepCurve> query_curves;
};

/// Holds out cfg.queries records as query points, tunes or takes the fixed
/// parameters on the rest, fits COBRA and runs the relevance study.
RelevanceRun relevance_experiment(const SurvivalDataset& data, const ExperimentConfig& cfg);

OutputFiles run_bench(const ExperimentConfig& cfg);
OutputFiles run_simulate(const ExperimentConfig& cfg);
OutputFiles run_relevance(const ExperimentConfig& cfg);
OutputFiles run_tune(const ExperimentConfig& cfg);

}  // namespace cobrasurv
