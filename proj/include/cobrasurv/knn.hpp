#pragma once

#include "cobrasurv/learners.hpp"

#include <vector>

namespace cobrasurv {

/// Kaplan-Meier over the k nearest training records (standardized Euclidean
/// distance, ties to the lower record index).
class KnnSurvival final : public SurvivalModel {
public:
    KnnSurvival(const SurvivalDataset& data, Index k);

    StepCurve predict(const Eigen::Ref<const VectorXd>& x) const override;
    std::vector<Index> neighbors(const Eigen::Ref<const VectorXd>& x) const;
    Index k() const noexcept { return k_; }

private:
    Standardizer standardizer_;
    MatrixXd z_;  // standardized training covariates, one row per record
    VectorXd time_;
    VectorXi event_;
    Index k_;
};

KnnSurvival fit_knn_survival(const SurvivalDataset& data, Index k);

}  // namespace cobrasurv
