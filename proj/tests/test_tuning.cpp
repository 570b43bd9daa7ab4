#include "cobrasurv/tuning.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <sstream>

using namespace cobrasurv;

namespace {

/// Five quick machines so every alpha choice is a multiple of 1/5.
std::vector<LearnerSpec> quick_roster() {
    auto roster = testutil::small_roster();
    LearnerSpec shallow = roster[0];
    shallow.max_depth = 2;
    LearnerSpec wide = roster[1];
    wide.k = 9;
    LearnerSpec cox;
    cox.kind = LearnerKind::cox_ridge;
    cox.lambda = 1.0;
    roster.push_back(shallow);
    roster.push_back(wide);
    roster.push_back(cox);
    return roster;
}

SurvivalDataset train_data(std::uint64_t seed, Index n = 240) {
    SyntheticConfig cfg;
    cfg.n = n;
    cfg.seed = seed;
    return generate_synthetic(cfg);
}

SearchSpace space(int trials, std::uint64_t seed) {
    SearchSpace s;
    s.trials = trials;
    s.seed = seed;
    s.epsilon_min = 1e-4;
    s.epsilon_distribution = EpsilonDistribution::uniform;
    return s;
}

bool same_trace(const SearchResult& a, const SearchResult& b) {
    if (a.trace.size() != b.trace.size()) return false;
    for (std::size_t t = 0; t < a.trace.size(); ++t) {
        const auto& x = a.trace[t];
        const auto& y = b.trace[t];
        if (x.params.epsilon != y.params.epsilon || x.params.alpha != y.params.alpha ||
            x.params.l_fraction != y.params.l_fraction || x.objective_value != y.objective_value)
            return false;
    }
    return a.best.trial == b.best.trial;
}

}  // namespace

TEST_CASE("draws stay inside the search space") {
    for (const auto dist : {EpsilonDistribution::log_uniform, EpsilonDistribution::uniform}) {
        SearchSpace s;
        s.trials = 2000;
        s.seed = 3;
        s.epsilon_distribution = dist;
        const auto trials = draw_trials(s, quick_roster());
        REQUIRE(trials.size() == 2000);
        for (const auto& p : trials) {
            CHECK(p.epsilon >= s.epsilon_min);
            CHECK(p.epsilon <= s.epsilon_max);
            CHECK(std::find(s.alpha_choices.begin(), s.alpha_choices.end(), p.alpha) != s.alpha_choices.end());
            CHECK(std::find(s.l_fraction_choices.begin(), s.l_fraction_choices.end(), p.l_fraction) !=
                  s.l_fraction_choices.end());
            CHECK(p.roster.size() == 5);
        }
    }
    SearchSpace bad;
    bad.trials = 0;
    CHECK_THROWS_AS(draw_trials(bad, quick_roster()), std::invalid_argument);
    bad.trials = 1;
    bad.epsilon_min = 0.0;
    CHECK_THROWS_AS(draw_trials(bad, quick_roster()), std::invalid_argument);
}

TEST_CASE("log-uniform draws spread over orders of magnitude") {
    SearchSpace s;
    s.trials = 3000;
    const auto trials = draw_trials(s, quick_roster());
    int below = 0;
    for (const auto& p : trials) below += p.epsilon < 1e-150 ? 1 : 0;
    CHECK(below > 1300);
    CHECK(below < 1700);
}

TEST_CASE("a single trial is returned as the best") {
    const auto data = train_data(1);
    const auto s = space(1, 4);
    const auto r = random_search(s, data, 3, quick_roster());
    const auto drawn = draw_trials(s, quick_roster());
    REQUIRE(r.trace.size() == 1);
    CHECK(r.best.trial == 0);
    CHECK(r.best.params.epsilon == drawn[0].epsilon);
    CHECK(r.best.params.alpha == drawn[0].alpha);
    CHECK(r.best.params.l_fraction == drawn[0].l_fraction);
}

TEST_CASE("search is deterministic, prefix-stable and matches evaluate_params") {
    const auto data = train_data(2);
    const auto roster = quick_roster();
    const auto full = random_search(space(24, 5), data, 3, roster);
    CHECK(same_trace(full, random_search(space(24, 5), data, 3, roster, 4)));

    const auto prefix = random_search(space(10, 5), data, 3, roster);
    for (std::size_t t = 0; t < prefix.trace.size(); ++t)
        CHECK(prefix.trace[t].objective_value == full.trace[t].objective_value);

    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : full.trace) {
        CHECK_FALSE(r.failed);
        double mean = 0.0;
        for (const double v : r.fold_values) mean += v;
        CHECK(r.objective_value == doctest::Approx(mean / 3.0).epsilon(1e-15));
        best = std::min(best, r.objective_value);
    }
    CHECK(full.best.objective_value == best);
    for (const auto& r : full.trace)
        if (r.objective_value == best) {
            CHECK(full.best.trial == r.trial);  // first occurrence wins
            break;
        }

    for (const Index t : {Index{0}, Index{7}, full.best.trial}) {
        const auto& r = full.trace[static_cast<std::size_t>(t)];
        std::vector<double> folds;
        CHECK(evaluate_params(r.params, data, 3, Objective::ibs, 5, &folds) == r.objective_value);
        CHECK(folds == r.fold_values);
    }
}

TEST_CASE("objectives are the metrics") {
    const auto data = train_data(3, 200);
    const auto folds = make_inner_folds(data, 2, 9);
    CobraParams p;
    p.roster = quick_roster();
    p.epsilon = 0.05;
    p.alpha = 0.6;
    p.l_fraction = 0.5;
    const auto model = fit_cobra(folds[0].train, p, inner_cobra_seed(9));
    const auto curves = predict_cobra_batch(model, folds[0].validation.covariates());
    const auto& v = folds[0].validation;
    CHECK(score_objective(Objective::ibs, curves, v) == integrated_brier(curves, v.time(), v.event()));
    CHECK(score_objective(Objective::neg_concordance, curves, v) == -concordance_td(curves, v.time(), v.event()));

    std::vector<double> values;
    evaluate_params(p, data, 2, Objective::neg_concordance, 9, &values);
    CHECK(values[0] == -concordance_td(curves, v.time(), v.event()));
}

TEST_CASE("identical halves give identical fold objectives") {
    const auto half = train_data(4, 150);
    CobraParams p;
    p.roster = quick_roster();
    p.epsilon = 0.04;
    p.alpha = 0.4;
    p.l_fraction = 0.5;
    const std::vector<InnerFold> folds{{half, half}, {half, half}};
    for (const auto objective : {Objective::ibs, Objective::neg_concordance}) {
        std::vector<double> values;
        evaluate_on_folds(p, folds, objective, 21, &values);
        REQUIRE(values.size() == 2);
        CHECK(std::abs(values[0] - values[1]) < 1e-12);
    }
}

TEST_CASE("saturated trials score the population estimate") {
    const auto data = train_data(5);
    const auto roster = quick_roster();
    SearchSpace saturated = space(12, 8);
    saturated.epsilon_min = 1.0;  // area distances never exceed 1
    saturated.epsilon_max = 1.0;
    const auto sat = random_search(saturated, data, 3, roster);

    const auto folds = make_inner_folds(data, 3, 8);
    for (const auto& r : sat.trace) {
        std::vector<double> baseline;
        for (const auto& fold : folds) {
            const auto model = fit_cobra(fold.train, r.params, inner_cobra_seed(8));
            const std::vector<StepCurve> curves(static_cast<std::size_t>(fold.validation.size()), model.population_km());
            baseline.push_back(score_objective(Objective::ibs, curves, fold.validation));
        }
        CHECK(r.fold_values == baseline);
    }

    // a space with the same draws of alpha and l_fraction but free epsilon
    const auto free = random_search(space(12, 8), data, 3, roster);
    for (std::size_t t = 0; t < free.trace.size(); ++t)
        CHECK(free.trace[t].params.l_fraction == sat.trace[t].params.l_fraction);
    bool beaten = false;
    for (const auto& r : free.trace) beaten = beaten || r.objective_value < sat.best.objective_value;
    CHECK(beaten == (free.best.objective_value < sat.best.objective_value));
}

TEST_CASE("failed trials stay in the trace") {
    const auto data = train_data(6, 150);
    auto roster = quick_roster();
    roster.pop_back();  // four machines: alpha 0.2 and 0.6 are not multiples of 1/4
    SearchSpace s = space(20, 10);
    const auto r = random_search(s, data, 2, roster);
    int failed = 0;
    for (const auto& t : r.trace) {
        if (!t.failed) continue;
        ++failed;
        CHECK(std::isnan(t.objective_value));
        CHECK_FALSE(t.error.empty());
    }
    CHECK(failed > 0);
    CHECK_FALSE(r.best.failed);

    std::ostringstream csv;
    write_trace_csv(csv, r.trace);
    const auto text = csv.str();
    CHECK(text.rfind("trial,epsilon,alpha,l_fraction,objective\n", 0) == 0);
    CHECK(text.find(",NA\n") != std::string::npos);

    s.alpha_choices = {0.2};
    CHECK_THROWS_AS(random_search(s, data, 2, roster), std::runtime_error);
}

TEST_CASE("objective and distribution names") {
    CHECK(objective_from_string(to_string(Objective::neg_concordance)) == Objective::neg_concordance);
    CHECK(epsilon_distribution_from_string("uniform") == EpsilonDistribution::uniform);
    CHECK_THROWS_AS(objective_from_string("auc"), std::invalid_argument);
    CHECK_THROWS_AS(epsilon_distribution_from_string("normal"), std::invalid_argument);
}
