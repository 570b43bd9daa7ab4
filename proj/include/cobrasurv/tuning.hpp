#pragma once

#include "cobrasurv/cobra.hpp"

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace cobrasurv {

enum class Objective { ibs, neg_concordance };

/// How epsilon is drawn from [epsilon_min, epsilon_max].
enum class EpsilonDistribution { log_uniform, uniform };

std::string to_string(Objective objective);
Objective objective_from_string(const std::string& name);
std::string to_string(EpsilonDistribution distribution);
EpsilonDistribution epsilon_distribution_from_string(const std::string& name);

struct SearchSpace {
    double epsilon_min = 1e-300;
    double epsilon_max = 0.9;
    EpsilonDistribution epsilon_distribution = EpsilonDistribution::log_uniform;
    std::vector<double> alpha_choices{0.2, 0.4, 0.6, 0.8, 1.0};
    std::vector<double> l_fraction_choices{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    int trials = 200;
    Objective objective = Objective::ibs;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrialResult {
    Index trial = 0;
    CobraParams params;
    double objective_value = 0.0;  // mean of fold_values
    std::vector<double> fold_values;
    bool failed = false;
    std::string error;
};

struct SearchResult {
    TrialResult best;
    std::vector<TrialResult> trace;  // in trial order
};

/// The `trials` parameter triples the search evaluates: epsilon log-uniform
/// (or uniform), alpha and l_fraction uniform over their choices.
std::vector<CobraParams> draw_trials(const SearchSpace& space, const std::vector<LearnerSpec>& roster);

/// Objective on one validation set: IBS or minus concordance.
double score_objective(Objective objective, std::span<const StepCurve> curves, const SurvivalDataset& validation);

struct InnerFold {
    SurvivalDataset train;
    SurvivalDataset validation;
};

/// Inner cross-validation folds of data drawn from seed.
std::vector<InnerFold> make_inner_folds(const SurvivalDataset& data, int folds, std::uint64_t seed);

/// Seed of the COBRA fit on every inner fold of a search with this seed.
std::uint64_t inner_cobra_seed(std::uint64_t seed);

/// Mean objective over the given folds; each fold fits COBRA with cobra_seed.
double evaluate_on_folds(const CobraParams& params, const std::vector<InnerFold>& folds, Objective objective,
                         std::uint64_t cobra_seed, std::vector<double>* fold_values = nullptr);

/**
 * Mean inner-CV objective of params on train. Inner folds come from `seed`, and
 * so does every COBRA fit, so random_search with the same seed reproduces
 * these values exactly.
 */
double evaluate_params(const CobraParams& params, const SurvivalDataset& train, int inner_folds,
                       Objective objective, std::uint64_t seed, std::vector<double>* fold_values = nullptr);

/**
 * Seeded random search. Trials sharing an l_fraction share their fitted
 * machines per inner fold, so each (l_fraction, fold) block fits COBRA once
 * and scores all of its trials from one proximity table. Returns the argmin of
 * the mean objective, ties to the earlier trial. Failed trials are kept in the
 * trace; if all fail, throws std::runtime_error.
 */
SearchResult random_search(const SearchSpace& space, const SurvivalDataset& train, int inner_folds,
                           const std::vector<LearnerSpec>& roster, int jobs = 1);

/// trial,epsilon,alpha,l_fraction,objective
void write_trace_csv(std::ostream& out, const std::vector<TrialResult>& trace);

}  // namespace cobrasurv
