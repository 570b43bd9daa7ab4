#include "cobrasurv/tuning.hpp"

#include "cobrasurv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>

namespace cobrasurv {

namespace {
constexpr std::uint64_t kTrialStream = 0x7E1A1ULL;
constexpr std::uint64_t kInnerFoldStream = 0x1FF01DULL;
constexpr std::uint64_t kInnerCobraStream = 0xC0B2AULL;

double score_with(const CobraModel& model, const ProximityTable& table, Objective objective,
                  const SurvivalDataset& validation) {
    std::vector<StepCurve> curves(static_cast<std::size_t>(table.query_count()));
    for (Index q = 0; q < table.query_count(); ++q)
        curves[static_cast<std::size_t>(q)] = predict_from_table(model, table, q);
    return score_objective(objective, curves, validation);
}

}  // namespace

std::vector<InnerFold> make_inner_folds(const SurvivalDataset& data, int folds, std::uint64_t seed) {
    const auto chunks = kfold_indices(data.size(), folds, derive_seed(seed, kInnerFoldStream, 0));
    std::vector<InnerFold> out;
    out.reserve(chunks.size());
    for (const auto& chunk : chunks)
        out.push_back({data.subset(complement_rows(chunk, data.size())), data.subset(chunk)});
    return out;
}

std::uint64_t inner_cobra_seed(std::uint64_t seed) { return derive_seed(seed, kInnerCobraStream, 0); }

std::string to_string(Objective objective) {
    return objective == Objective::ibs ? "ibs" : "neg_concordance";
}

Objective objective_from_string(const std::string& name) {
    if (name == "ibs") return Objective::ibs;
    if (name == "neg_concordance") return Objective::neg_concordance;
    throw std::invalid_argument("unknown objective '" + name + "' (expected ibs or neg_concordance)");
}

std::string to_string(EpsilonDistribution distribution) {
    return distribution == EpsilonDistribution::log_uniform ? "log_uniform" : "uniform";
}

EpsilonDistribution epsilon_distribution_from_string(const std::string& name) {
    if (name == "log_uniform") return EpsilonDistribution::log_uniform;
    if (name == "uniform") return EpsilonDistribution::uniform;
    throw std::invalid_argument("unknown epsilon distribution '" + name + "' (expected log_uniform or uniform)");
}

void SearchSpace::validate() const {
    if (trials < 1) throw std::invalid_argument("search: trials must be >= 1");
    if (!(epsilon_min > 0.0 && epsilon_min <= epsilon_max && std::isfinite(epsilon_max)))
        throw std::invalid_argument("search: epsilon range must satisfy 0 < min <= max");
    if (alpha_choices.empty() || l_fraction_choices.empty())
        throw std::invalid_argument("search: alpha and l_fraction choices must be non-empty");
    for (const double a : alpha_choices)
        if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("search: alpha choices must lie in (0,1]");
    for (const double l : l_fraction_choices)
        if (!(l > 0.0 && l < 1.0)) throw std::invalid_argument("search: l_fraction choices must lie in (0,1)");
}

std::vector<CobraParams> draw_trials(const SearchSpace& space, const std::vector<LearnerSpec>& roster) {
    space.validate();
    std::mt19937_64 rng(derive_seed(space.seed, kTrialStream, 0));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick_alpha(0, space.alpha_choices.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_l(0, space.l_fraction_choices.size() - 1);
    const double lo = std::log(space.epsilon_min);
    const double hi = std::log(space.epsilon_max);
    std::vector<CobraParams> out;
    out.reserve(static_cast<std::size_t>(space.trials));
    for (int t = 0; t < space.trials; ++t) {
        CobraParams p;
        p.roster = roster;
        const double u = unit(rng);
        const double eps = space.epsilon_distribution == EpsilonDistribution::log_uniform
                               ? std::exp(lo + u * (hi - lo))
                               : space.epsilon_min + u * (space.epsilon_max - space.epsilon_min);
        p.epsilon = std::clamp(eps, space.epsilon_min, space.epsilon_max);
        p.alpha = space.alpha_choices[pick_alpha(rng)];
        p.l_fraction = space.l_fraction_choices[pick_l(rng)];
        out.push_back(std::move(p));
    }
    return out;
}

double score_objective(Objective objective, std::span<const StepCurve> curves, const SurvivalDataset& validation) {
    if (objective == Objective::ibs) return integrated_brier(curves, validation.time(), validation.event());
    return -concordance_td(curves, validation.time(), validation.event());
}

double evaluate_on_folds(const CobraParams& params, const std::vector<InnerFold>& folds, Objective objective,
                         std::uint64_t cobra_seed, std::vector<double>* fold_values) {
    if (folds.empty()) throw std::invalid_argument("evaluate: no folds");
    std::vector<double> values;
    for (const auto& fold : folds) {
        const CobraModel model = fit_cobra(fold.train, params, cobra_seed);
        const ProximityTable table(model, fold.validation.covariates());
        values.push_back(score_with(model, table, objective, fold.validation));
    }
    if (fold_values) *fold_values = values;
    double sum = 0.0;
    for (const double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

double evaluate_params(const CobraParams& params, const SurvivalDataset& train, int inner_folds,
                       Objective objective, std::uint64_t seed, std::vector<double>* fold_values) {
    return evaluate_on_folds(params, make_inner_folds(train, inner_folds, seed), objective, inner_cobra_seed(seed),
                             fold_values);
}

SearchResult random_search(const SearchSpace& space, const SurvivalDataset& train, int inner_folds,
                           const std::vector<LearnerSpec>& roster, int jobs) {
    const auto params = draw_trials(space, roster);
    const auto folds = make_inner_folds(train, inner_folds, space.seed);
    const auto n_folds = folds.size();

    // Trials grouped by l_fraction; machines depend on nothing else.
    std::map<double, std::vector<std::size_t>> by_l;
    for (std::size_t t = 0; t < params.size(); ++t) by_l[params[t].l_fraction].push_back(t);
    std::vector<const std::vector<std::size_t>*> groups;
    for (const auto& [l, members] : by_l) groups.push_back(&members);

    const auto nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::vector<double>> values(params.size(), std::vector<double>(n_folds, nan));
    std::vector<std::string> errors(params.size());

    const auto blocks = static_cast<Index>(groups.size() * n_folds);
    parallel_for(blocks, jobs, [&](Index b) {
        const auto& members = *groups[static_cast<std::size_t>(b) / n_folds];
        const std::size_t f = static_cast<std::size_t>(b) % n_folds;
        std::optional<CobraModel> base;
        std::optional<ProximityTable> table;
        try {
            base.emplace(fit_cobra(folds[f].train, params[members.front()], inner_cobra_seed(space.seed)));
            table.emplace(*base, folds[f].validation.covariates());
        } catch (const std::exception& e) {
            for (const auto t : members) errors[t] = e.what();
            return;
        }
        for (const auto t : members) {
            try {
                const CobraModel model = base->with_thresholds(params[t].epsilon, params[t].alpha);
                values[t][f] = score_with(model, *table, space.objective, folds[f].validation);
            } catch (const std::exception& e) {
                errors[t] = e.what();
            }
        }
    });

    SearchResult result;
    result.trace.reserve(params.size());
    std::optional<std::size_t> best;
    for (std::size_t t = 0; t < params.size(); ++t) {
        TrialResult r;
        r.trial = static_cast<Index>(t);
        r.params = params[t];
        r.fold_values = values[t];
        r.error = errors[t];
        r.failed = !errors[t].empty();
        if (!r.failed) {
            double sum = 0.0;
            for (const double v : r.fold_values) sum += v;
            r.objective_value = sum / static_cast<double>(n_folds);
            if (!best || r.objective_value < result.trace[*best].objective_value) best = t;
        } else {
            r.objective_value = nan;
        }
        result.trace.push_back(std::move(r));
    }
    if (!best) {
        std::string message = "random search: all " + std::to_string(params.size()) + " trials failed";
        if (!errors.empty()) message += " (first error: " + errors.front() + ")";
        throw std::runtime_error(message);
    }
    result.best = result.trace[*best];
    return result;
}

void write_trace_csv(std::ostream& out, const std::vector<TrialResult>& trace) {
    out << "trial,epsilon,alpha,l_fraction,objective\n";
    for (const auto& r : trace) {
        out << r.trial << ',' << format_number(r.params.epsilon) << ',' << format_number(r.params.alpha) << ','
            << format_number(r.params.l_fraction) << ',';
        if (r.failed) out << "NA";
        else out << format_number(r.objective_value);
        out << '\n';
    }
}

}  // namespace cobrasurv
