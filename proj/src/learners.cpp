#include "cobrasurv/learners.hpp"

#include "cobrasurv/cox.hpp"
#include "cobrasurv/knn.hpp"
#include "cobrasurv/tree.hpp"

#include <cmath>
#include <sstream>

namespace cobrasurv {

namespace {
constexpr std::uint64_t kCoxCvStream = 0xC0C5ULL;
}

std::string to_string(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::survival_tree: return "survival_tree";
        case LearnerKind::random_survival_forest: return "random_survival_forest";
        case LearnerKind::cox_ridge: return "cox_ridge";
        case LearnerKind::cox_lasso: return "cox_lasso";
        case LearnerKind::knn_survival: return "knn_survival";
    }
    return "unknown";
}

LearnerKind learner_kind_from_string(const std::string& name) {
    for (const auto kind : {LearnerKind::survival_tree, LearnerKind::random_survival_forest, LearnerKind::cox_ridge,
                            LearnerKind::cox_lasso, LearnerKind::knn_survival})
        if (to_string(kind) == name) return kind;
    throw std::invalid_argument("unknown learner '" + name + "'");
}

void LearnerSpec::validate() const {
    if (max_depth < 0) throw std::invalid_argument(label() + ": max_depth must be >= 0");
    if (min_leaf < 1) throw std::invalid_argument(label() + ": min_leaf must be >= 1");
    if (n_trees < 1) throw std::invalid_argument(label() + ": n_trees must be >= 1");
    if (mtry < 0) throw std::invalid_argument(label() + ": mtry must be >= 0 (0 = default)");
    if (k < 0) throw std::invalid_argument(label() + ": k must be >= 0 (0 = default)");
    if (lambda && !(*lambda >= 0.0 && std::isfinite(*lambda)))
        throw std::invalid_argument(label() + ": lambda must be finite and >= 0");
}

std::string LearnerSpec::label() const { return to_string(kind); }

std::vector<LearnerSpec> default_roster() {
    std::vector<LearnerSpec> roster;
    for (const auto kind : {LearnerKind::survival_tree, LearnerKind::random_survival_forest, LearnerKind::cox_lasso,
                            LearnerKind::cox_ridge, LearnerKind::knn_survival}) {
        LearnerSpec spec;
        spec.kind = kind;
        roster.push_back(spec);
    }
    return roster;
}

FittedLearner::FittedLearner(LearnerSpec spec, std::shared_ptr<const SurvivalModel> model, Index n_features)
    : spec_(std::move(spec)), model_(std::move(model)), n_features_(n_features) {}

StepCurve FittedLearner::predict_curve(const Eigen::Ref<const VectorXd>& x) const {
    if (x.size() != n_features_) {
        std::ostringstream os;
        os << spec_.label() << ": expected " << n_features_ << " covariates, got " << x.size();
        throw std::invalid_argument(os.str());
    }
    return model_->predict(x);
}

FittedLearner fit(const LearnerSpec& spec, const SurvivalDataset& data) {
    spec.validate();
    std::shared_ptr<const SurvivalModel> model;
    switch (spec.kind) {
        case LearnerKind::survival_tree:
            model = std::make_shared<SurvivalTree>(fit_survival_tree(data, spec.max_depth, spec.min_leaf));
            break;
        case LearnerKind::random_survival_forest: {
            ForestOptions options;
            options.n_trees = spec.n_trees;
            options.mtry = spec.mtry;
            options.min_leaf = spec.min_leaf;
            options.max_depth = spec.max_depth;
            options.bootstrap = spec.bootstrap;
            options.seed = spec.seed;
            model = std::make_shared<RandomSurvivalForest>(fit_random_survival_forest(data, options));
            break;
        }
        case LearnerKind::cox_ridge:
        case LearnerKind::cox_lasso: {
            const auto penalty = spec.kind == LearnerKind::cox_ridge ? CoxPenalty::ridge : CoxPenalty::lasso;
            const double lambda =
                spec.lambda ? *spec.lambda : select_cox_lambda(data, penalty, 3, derive_seed(spec.seed, kCoxCvStream, 0));
            model = std::make_shared<CoxModel>(fit_cox(data, penalty, lambda));
            break;
        }
        case LearnerKind::knn_survival: {
            const Index k = spec.k > 0 ? spec.k
                                       : static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(data.size()))));
            model = std::make_shared<KnnSurvival>(data, k);
            break;
        }
    }
    return FittedLearner(spec, std::move(model), data.n_features());
}

}  // namespace cobrasurv
