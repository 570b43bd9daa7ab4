#pragma once

#include "cobrasurv/learners.hpp"

#include <random>
#include <span>
#include <vector>

namespace cobrasurv {

struct TreeNode {
    Index feature = -1;      // -1 for leaves
    double threshold = 0.0;  // x[feature] <= threshold goes left
    Index left = -1;
    Index right = -1;
    Index leaf = -1;         // index into leaf curves
    Index depth = 0;
    double statistic = 0.0;  // log-rank chi-square of the chosen split
};

struct TreeOptions {
    int max_depth = 10;
    int min_leaf = 15;
    int mtry = 0;  // features tried per node; 0 = all
};

/**
 * Binary survival tree grown on the two-sample log-rank statistic.
 * Leaves hold the Kaplan-Meier curve of their records.
 */
class SurvivalTree final : public SurvivalModel {
public:
    SurvivalTree(std::vector<TreeNode> nodes, std::vector<StepCurve> leaves)
        : nodes_(std::move(nodes)), leaves_(std::move(leaves)) {}

    StepCurve predict(const Eigen::Ref<const VectorXd>& x) const override { return leaves_[static_cast<std::size_t>(leaf_index(x))]; }
    Index leaf_index(const Eigen::Ref<const VectorXd>& x) const;
    const StepCurve& leaf_curve(Index leaf) const { return leaves_[static_cast<std::size_t>(leaf)]; }

    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    Index leaf_count() const noexcept { return static_cast<Index>(leaves_.size()); }
    Index depth() const;

private:
    std::vector<TreeNode> nodes_;
    std::vector<StepCurve> leaves_;
};

/// Log-rank chi-square U^2/V for a two-group comparison; 0 when V vanishes.
double log_rank_statistic(const VectorXd& time, const VectorXi& event, const std::vector<bool>& in_left);

struct SplitCandidate {
    Index feature = -1;
    double threshold = 0.0;
    double statistic = 0.0;
};

/// Best admissible split of `rows` over `features` (midpoints of consecutive
/// distinct values, both children at least min_leaf records). feature = -1 if none.
SplitCandidate best_log_rank_split(const SurvivalDataset& data, std::span<const Index> rows,
                                   std::span<const Index> features, int min_leaf);

SurvivalTree fit_survival_tree(const SurvivalDataset& data, int max_depth, int min_leaf);

/// Grows a tree on `rows` (duplicates allowed). With options.mtry > 0 each node
/// draws that many candidate features from `rng`.
SurvivalTree grow_survival_tree(const SurvivalDataset& data, std::span<const Index> rows,
                                const TreeOptions& options, std::mt19937_64* rng);

class RandomSurvivalForest final : public SurvivalModel {
public:
    RandomSurvivalForest(std::vector<SurvivalTree> trees, VectorXd grid);

    StepCurve predict(const Eigen::Ref<const VectorXd>& x) const override;
    const std::vector<SurvivalTree>& trees() const noexcept { return trees_; }

private:
    std::vector<SurvivalTree> trees_;
    VectorXd grid_;                           // training event times
    std::vector<std::vector<VectorXd>> leaf_values_;  // [tree][leaf] on grid_
};

struct ForestOptions {
    int n_trees = 100;
    int mtry = 0;  // 0 = ceil(sqrt(p))
    int min_leaf = 15;
    int max_depth = 10;
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

RandomSurvivalForest fit_random_survival_forest(const SurvivalDataset& data, const ForestOptions& options);

}  // namespace cobrasurv
