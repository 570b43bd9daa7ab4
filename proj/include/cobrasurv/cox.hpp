#pragma once

#include "cobrasurv/cox_likelihood.hpp"
#include "cobrasurv/learners.hpp"

#include <vector>

namespace cobrasurv {

enum class CoxPenalty { ridge, lasso };

/**
 * Penalized Cox fit on standardized covariates.
 *
 * beta lives on the standardized scale; predictions standardize x with the
 * stored center/scale, so x equal to the training means gives exp(-H0).
 */
class CoxModel final : public SurvivalModel {
public:
    VectorXd beta;
    Standardizer standardizer;
    StepCurve baseline_cumhaz{CurveKind::cumulative};
    CoxPenalty penalty = CoxPenalty::ridge;
    double lambda = 0.0;
    int iterations = 0;
    std::vector<double> objective_trace;  // penalized objective after each outer iteration

    double linear_predictor(const Eigen::Ref<const VectorXd>& x) const;
    StepCurve predict(const Eigen::Ref<const VectorXd>& x) const override;
};

inline constexpr int kCoxMaxIterations = 100;
inline constexpr double kCoxTolerance = 1e-7;

/// Penalized objective l(beta) - lambda * penalty(beta) on already standardized covariates.
double cox_objective(const MatrixXd& z, const VectorXd& time, const VectorXi& event, const VectorXd& beta,
                     CoxPenalty penalty, double lambda);

/**
 * Maximizes l(beta) - lambda * (0.5 |beta|^2 for ridge, |beta|_1 for lasso).
 * Ridge runs damped Newton; lasso runs cyclic coordinate descent on the
 * quadratic model at each outer iteration, then a step-halving line search.
 * Throws ConvergenceError after kCoxMaxIterations outer iterations.
 */
CoxModel fit_cox(const SurvivalDataset& data, CoxPenalty penalty, double lambda);

/// Breslow baseline H0(t) = sum_{event times <= t} d / sum_{at risk} exp(beta' z_j).
StepCurve breslow_baseline(const CoxModel& model, const SurvivalDataset& data);

/// Penalty grid for cross-validation (10 points, descending).
std::vector<double> cox_lambda_grid(const SurvivalDataset& data, CoxPenalty penalty);

/// Lambda with the largest summed held-out partial likelihood over `folds` folds.
double select_cox_lambda(const SurvivalDataset& data, CoxPenalty penalty, int folds, std::uint64_t seed);

}  // namespace cobrasurv
