#pragma once

#include "cobrasurv/cobra.hpp"
#include "cobrasurv/logistic.hpp"

#include <string>
#include <vector>

namespace cobrasurv {

constexpr double kDefaultRelevanceL2 = 1e-4;

struct QueryRelevance {
    VectorXd beta;            // intercept, then one slope per covariate
    bool degenerate = false;  // Gamma labels were all equal; slopes are zero
    Index positives = 0;      // calibration points with Gamma = 1
};

/**
 * Logistic regression of Gamma(x, X_j) on the calibration covariates X_j,
 * standardized with the calibration mean and deviation so slopes are
 * comparable across covariates.
 */
QueryRelevance relevance_for_query(const CobraModel& model, const Eigen::Ref<const VectorXd>& x,
                                   double l2 = kDefaultRelevanceL2);

/// Same fit from Gamma labels already at hand.
QueryRelevance relevance_from_labels(const MatrixXd& standardized_features, const VectorXi& labels, double l2);

struct RelevanceResult {
    MatrixXd per_query;            // query_count x (1 + p): intercept, slopes
    std::vector<bool> degenerate;  // per query
    VectorXd aggregate;            // mean |slope| over non-degenerate queries
    std::vector<Index> ranking;    // covariate indices by descending aggregate
    Index query_count = 0;
    Index used_queries = 0;

    /// 1-based rank of covariate j.
    Index rank_of(Index j) const;
};

/// Per-query relevance for every row of queries, then the aggregate. Throws
/// std::invalid_argument when every query is degenerate.
RelevanceResult relevance_study(const CobraModel& model, const MatrixXd& queries, double l2 = kDefaultRelevanceL2,
                                int jobs = 1);

/// Covariate indices by descending score; equal scores keep index order.
std::vector<Index> rank_descending(const VectorXd& scores);

}  // namespace cobrasurv
