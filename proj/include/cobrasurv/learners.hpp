#pragma once

#include "cobrasurv/curves.hpp"
#include "cobrasurv/data.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cobrasurv {

enum class LearnerKind { survival_tree, random_survival_forest, cox_ridge, cox_lasso, knn_survival };

std::string to_string(LearnerKind kind);
LearnerKind learner_kind_from_string(const std::string& name);

/**
 * Base-learner choice plus its hyperparameters. Fields unused by a kind are
 * ignored. Zero for mtry or k means the data-dependent default
 * (ceil(sqrt(p)) and ceil(sqrt(n))); an empty lambda selects the Cox penalty
 * by 3-fold cross-validated partial likelihood over a 10-point log grid.
 */
struct LearnerSpec {
    LearnerKind kind = LearnerKind::survival_tree;
    int max_depth = 10;         // tree, forest
    int min_leaf = 15;          // tree, forest
    int n_trees = 100;          // forest
    int mtry = 0;               // forest
    bool bootstrap = true;      // forest
    std::optional<double> lambda;  // cox
    int k = 0;                  // knn
    std::uint64_t seed = 0;

    void validate() const;
    std::string label() const;
};

/// The five-machine roster with default hyperparameters.
std::vector<LearnerSpec> default_roster();

/// A trained survival model. Predicted curves must only jump at training event times.
class SurvivalModel {
public:
    virtual ~SurvivalModel() = default;
    virtual StepCurve predict(const Eigen::Ref<const VectorXd>& x) const = 0;
};

class FittedLearner {
public:
    FittedLearner(LearnerSpec spec, std::shared_ptr<const SurvivalModel> model, Index n_features);

    const LearnerSpec& spec() const noexcept { return spec_; }
    Index n_features() const noexcept { return n_features_; }
    const SurvivalModel& model() const noexcept { return *model_; }

    /// Throws std::invalid_argument on a covariate-count mismatch.
    StepCurve predict_curve(const Eigen::Ref<const VectorXd>& x) const;

private:
    LearnerSpec spec_;
    std::shared_ptr<const SurvivalModel> model_;
    Index n_features_;
};

FittedLearner fit(const LearnerSpec& spec, const SurvivalDataset& data);

}  // namespace cobrasurv
