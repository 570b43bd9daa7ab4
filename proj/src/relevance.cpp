#include "cobrasurv/relevance.hpp"

#include <algorithm>
#include <numeric>

namespace cobrasurv {

namespace {

MatrixXd calibration_features(const CobraModel& model) {
    const MatrixXd& x = model.calibration().covariates();
    return Standardizer::fit(x).apply(x);
}

VectorXi gamma_labels(const ProximityTable& table, Index q, double epsilon, int count) {
    VectorXi labels(table.calibration_count());
    for (Index j = 0; j < table.calibration_count(); ++j)
        labels[j] = table.consensus_distance(q, j, count) <= epsilon ? 1 : 0;
    return labels;
}

}  // namespace

QueryRelevance relevance_from_labels(const MatrixXd& standardized_features, const VectorXi& labels, double l2) {
    QueryRelevance out;
    out.positives = labels.sum();
    if (out.positives == 0 || out.positives == labels.size()) {
        out.beta = VectorXd::Zero(standardized_features.cols() + 1);
        out.degenerate = true;
        return out;
    }
    out.beta = fit_logistic(standardized_features, labels, l2).beta;
    return out;
}

QueryRelevance relevance_for_query(const CobraModel& model, const Eigen::Ref<const VectorXd>& x, double l2) {
    const ProximityTable table(model, x.transpose());
    const auto& p = model.params();
    return relevance_from_labels(calibration_features(model), gamma_labels(table, 0, p.epsilon, p.consensus_count()),
                                 l2);
}

Index RelevanceResult::rank_of(Index j) const {
    const auto it = std::find(ranking.begin(), ranking.end(), j);
    if (it == ranking.end()) throw std::out_of_range("relevance: covariate index");
    return static_cast<Index>(it - ranking.begin()) + 1;
}

std::vector<Index> rank_descending(const VectorXd& scores) {
    std::vector<Index> order(static_cast<std::size_t>(scores.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return scores[a] > scores[b]; });
    return order;
}

RelevanceResult relevance_study(const CobraModel& model, const MatrixXd& queries, double l2, int jobs) {
    const ProximityTable table(model, queries, jobs);
    const MatrixXd features = calibration_features(model);
    const auto& p = model.params();
    const Index n_queries = queries.rows();
    const Index n_features = features.cols();

    std::vector<QueryRelevance> fits(static_cast<std::size_t>(n_queries));
    parallel_for(n_queries, jobs, [&](Index q) {
        fits[static_cast<std::size_t>(q)] =
            relevance_from_labels(features, gamma_labels(table, q, p.epsilon, p.consensus_count()), l2);
    });

    RelevanceResult out;
    out.query_count = n_queries;
    out.per_query.resize(n_queries, n_features + 1);
    out.aggregate = VectorXd::Zero(n_features);
    for (Index q = 0; q < n_queries; ++q) {
        const auto& fit = fits[static_cast<std::size_t>(q)];
        out.per_query.row(q) = fit.beta.transpose();
        out.degenerate.push_back(fit.degenerate);
        if (fit.degenerate) continue;
        out.aggregate += fit.beta.tail(n_features).cwiseAbs();
        ++out.used_queries;
    }
    if (out.used_queries == 0)
        throw std::invalid_argument("relevance study: every query has constant Gamma labels; adjust epsilon or alpha");
    out.aggregate /= static_cast<double>(out.used_queries);
    out.ranking = rank_descending(out.aggregate);
    return out;
}

}  // namespace cobrasurv
