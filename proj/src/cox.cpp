#include "cobrasurv/cox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

namespace cobrasurv {

namespace {

double penalty_value(const VectorXd& beta, CoxPenalty penalty, double lambda) {
    if (lambda == 0.0) return 0.0;
    return penalty == CoxPenalty::ridge ? 0.5 * lambda * beta.squaredNorm() : lambda * beta.lpNorm<1>();
}

double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

// Largest step 2^-h (h < 50) along `direction` that does not lower the objective.
bool halving_step(const MatrixXd& z, const VectorXd& time, const VectorXi& event, CoxPenalty penalty,
                  double lambda, VectorXd& beta, double& objective, const VectorXd& direction, double& moved) {
    double step = 1.0;
    for (int h = 0; h < 50; ++h, step *= 0.5) {
        const VectorXd candidate = beta + step * direction;
        const double value = cox_objective(z, time, event, candidate, penalty, lambda);
        if (std::isfinite(value) && value >= objective) {
            moved = (step * direction).lpNorm<Eigen::Infinity>();
            beta = candidate;
            objective = value;
            return true;
        }
    }
    moved = 0.0;
    return false;
}

VectorXd ridge_direction(const PartialLikelihood<double>& pl, const VectorXd& beta, double lambda) {
    const Index p = beta.size();
    const VectorXd g = pl.gradient - lambda * beta;
    MatrixXd a = -pl.hessian;
    a.diagonal().array() += lambda;
    VectorXd d = a.ldlt().solve(g);
    if (!d.allFinite()) {
        a.diagonal().array() += 1e-8 * std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
        d = a.ldlt().solve(g);
    }
    if (!d.allFinite()) d = g / std::max<double>(1.0, static_cast<double>(p));
    return d;
}

// Minimizes the negated quadratic model plus lambda |b|_1 by cyclic coordinate descent.
VectorXd lasso_direction(const PartialLikelihood<double>& pl, const VectorXd& beta, double lambda) {
    const Index p = beta.size();
    const MatrixXd a = -pl.hessian;
    VectorXd b = beta;
    VectorXd residual = pl.gradient;  // gradient of the model at b
    for (int sweep = 0; sweep < 1000; ++sweep) {
        double largest = 0.0;
        for (Index j = 0; j < p; ++j) {
            const double ajj = a(j, j);
            const double updated = ajj > 1e-12 ? soft_threshold(ajj * b[j] + residual[j], lambda) / ajj : 0.0;
            const double delta = updated - b[j];
            if (delta == 0.0) continue;
            residual.noalias() -= a.col(j) * delta;
            b[j] = updated;
            largest = std::max(largest, std::abs(delta));
        }
        if (largest < 1e-12) break;
    }
    return b - beta;
}

std::string trace_text(const std::vector<double>& trace) {
    std::ostringstream os;
    os.precision(10);
    const std::size_t from = trace.size() > 5 ? trace.size() - 5 : 0;
    for (std::size_t i = from; i < trace.size(); ++i) os << (i == from ? "" : ", ") << trace[i];
    return os.str();
}

}  // namespace

double cox_objective(const MatrixXd& z, const VectorXd& time, const VectorXi& event, const VectorXd& beta,
                     CoxPenalty penalty, double lambda) {
    return partial_likelihood(z, time, event, beta, false).value - penalty_value(beta, penalty, lambda);
}

double CoxModel::linear_predictor(const Eigen::Ref<const VectorXd>& x) const {
    return beta.dot(standardizer.apply_row(x));
}

StepCurve CoxModel::predict(const Eigen::Ref<const VectorXd>& x) const {
    const double risk = std::exp(linear_predictor(x));
    VectorXd values = (-baseline_cumhaz.values().array() * risk).exp().matrix();
    return StepCurve(baseline_cumhaz.times(), std::move(values), CurveKind::survival).compressed();
}

CoxModel fit_cox(const SurvivalDataset& data, CoxPenalty penalty, double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("cox: lambda must be finite and >= 0");
    CoxModel model;
    model.penalty = penalty;
    model.lambda = lambda;
    model.standardizer = Standardizer::fit(data.covariates());
    const MatrixXd z = model.standardizer.apply(data.covariates());
    const VectorXd& time = data.time();
    const VectorXi& event = data.event();

    VectorXd beta = VectorXd::Zero(data.n_features());
    double objective = cox_objective(z, time, event, beta, penalty, lambda);
    model.objective_trace.push_back(objective);

    bool converged = data.n_features() == 0;
    int iter = 0;
    while (!converged && iter < kCoxMaxIterations) {
        ++iter;
        const auto pl = partial_likelihood(z, time, event, beta, true);
        const VectorXd direction =
            penalty == CoxPenalty::ridge ? ridge_direction(pl, beta, lambda) : lasso_direction(pl, beta, lambda);
        double moved = 0.0;
        if (!halving_step(z, time, event, penalty, lambda, beta, objective, direction, moved)) {
            converged = true;  // no ascent direction left
            break;
        }
        model.objective_trace.push_back(objective);
        if (moved < kCoxTolerance) converged = true;
    }
    if (!converged) {
        throw ConvergenceError("cox: no convergence after " + std::to_string(kCoxMaxIterations) +
                                   " iterations (lambda " + std::to_string(lambda) + "); last objectives: " +
                                   trace_text(model.objective_trace),
                               model.objective_trace);
    }
    model.iterations = iter;
    model.beta = std::move(beta);
    model.baseline_cumhaz = breslow_baseline(model, data);
    return model;
}

StepCurve breslow_baseline(const CoxModel& model, const SurvivalDataset& data) {
    const Index n = data.size();
    const VectorXd eta = model.standardizer.apply(data.covariates()) * model.beta;
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) { return data.time()[a] < data.time()[b]; });

    // risk-set weight sums from the back
    std::vector<double> tail(static_cast<std::size_t>(n) + 1, 0.0);
    for (Index k = n - 1; k >= 0; --k)
        tail[static_cast<std::size_t>(k)] = tail[static_cast<std::size_t>(k) + 1] + std::exp(eta[order[static_cast<std::size_t>(k)]]);

    std::vector<double> t, h;
    double cumulative = 0.0;
    for (Index k = 0; k < n;) {
        const double now = data.time()[order[static_cast<std::size_t>(k)]];
        const double risk = tail[static_cast<std::size_t>(k)];
        double deaths = 0.0;
        for (; k < n && data.time()[order[static_cast<std::size_t>(k)]] == now; ++k)
            deaths += data.event()[order[static_cast<std::size_t>(k)]];
        if (deaths == 0.0) continue;
        cumulative += deaths / risk;
        t.push_back(now);
        h.push_back(cumulative);
    }
    const auto m = static_cast<Index>(t.size());
    return StepCurve(Eigen::Map<VectorXd>(t.data(), m), Eigen::Map<VectorXd>(h.data(), m), CurveKind::cumulative);
}

std::vector<double> cox_lambda_grid(const SurvivalDataset& data, CoxPenalty penalty) {
    std::vector<double> grid;
    if (penalty == CoxPenalty::lasso) {
        const MatrixXd z = Standardizer::fit(data.covariates()).apply(data.covariates());
        const auto pl = partial_likelihood(z, data.time(), data.event(), VectorXd::Zero(data.n_features()), false);
        const double top = std::max(pl.gradient.lpNorm<Eigen::Infinity>(), 1e-8);
        for (int i = 0; i < 10; ++i) grid.push_back(top * std::pow(10.0, -3.0 * i / 9.0));
    } else {
        const double events = static_cast<double>(data.event_count());
        for (int i = 0; i < 10; ++i) grid.push_back(events * std::pow(10.0, 1.0 - 4.0 * i / 9.0));
    }
    return grid;
}

double select_cox_lambda(const SurvivalDataset& data, CoxPenalty penalty, int folds, std::uint64_t seed) {
    const auto grid = cox_lambda_grid(data, penalty);
    if (data.size() < 2 * static_cast<Index>(folds)) return grid[grid.size() / 2];
    const auto fold_rows = kfold_indices(data.size(), folds, seed);

    std::vector<double> score(grid.size(), 0.0);
    bool any_fold = false;
    for (const auto& test_rows : fold_rows) {
        const auto train_rows = complement_rows(test_rows, data.size());
        std::optional<SurvivalDataset> train;
        try {
            train.emplace(data.subset(train_rows));
        } catch (const DataError&) {
            continue;  // no events in this training fold
        }
        any_fold = true;
        const auto m = static_cast<Index>(test_rows.size());
        MatrixXd x(m, data.n_features());
        VectorXd t(m);
        VectorXi e(m);
        for (Index i = 0; i < m; ++i) {
            const Index r = test_rows[static_cast<std::size_t>(i)];
            x.row(i) = data.covariates().row(r);
            t[i] = data.time()[r];
            e[i] = data.event()[r];
        }
        for (std::size_t g = 0; g < grid.size(); ++g) {
            if (!std::isfinite(score[g])) continue;
            try {
                const CoxModel model = fit_cox(*train, penalty, grid[g]);
                score[g] += partial_likelihood(model.standardizer.apply(x), t, e, model.beta, false).value;
            } catch (const ConvergenceError&) {
                score[g] = -std::numeric_limits<double>::infinity();
            }
        }
    }
    if (!any_fold) return grid[grid.size() / 2];
    std::size_t best = grid.size();
    for (std::size_t g = 0; g < grid.size(); ++g)
        if (std::isfinite(score[g]) && (best == grid.size() || score[g] > score[best])) best = g;
    if (best == grid.size()) throw ConvergenceError("cox: no penalty in the cross-validation grid converged", {});
    return grid[best];
}

}  // namespace cobrasurv
