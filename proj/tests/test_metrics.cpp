#include "oracles.hpp"

#include <doctest.h>

#include <numeric>

using namespace cobrasurv;
using testutil::survival_curve;

namespace {

StepCurve flat(double value) { return value == 1.0 ? survival_curve({}, {}) : survival_curve({1e-9}, {value}); }

/// Random curves with jumps at the sample's times.
std::vector<StepCurve> random_predictions(std::mt19937_64& rng, const VectorXd& t) {
    std::vector<double> candidates(t.data(), t.data() + t.size());
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    std::vector<StepCurve> out;
    for (Index i = 0; i < t.size(); ++i) out.push_back(testutil::random_curve(rng, candidates));
    return out;
}

}  // namespace

TEST_CASE("concordance extremes") {
    VectorXd t(4);
    VectorXi e = VectorXi::Ones(4);
    t << 1, 2, 3, 4;
    std::vector<StepCurve> ranked{flat(0.1), flat(0.2), flat(0.3), flat(0.4)};
    CHECK(concordance_td(ranked, t, e) == 1.0);
    std::vector<StepCurve> same(4, flat(0.5));
    CHECK(concordance_td(same, t, e) == 0.5);
    std::vector<StepCurve> reversed{flat(0.4), flat(0.3), flat(0.2), flat(0.1)};
    CHECK(concordance_td(reversed, t, e) == 0.0);
    CHECK_THROWS_AS(concordance_td(ranked, t, VectorXi::Zero(4)), std::invalid_argument);
}

TEST_CASE("concordance three-subject hand example") {
    VectorXd t(3);
    VectorXi e(3);
    t << 1, 2, 3;
    e << 1, 1, 0;
    std::vector<StepCurve> c{survival_curve({0.5}, {0.2}), survival_curve({0.5}, {0.5}), survival_curve({0.5}, {0.4})};
    CHECK(concordance_td(c, t, e) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("concordance equals pair enumeration") {
    std::mt19937_64 rng(41);
    for (int rep = 0; rep < 200; ++rep) {
        const auto d = testutil::random_dataset(rng, 2 + rep % 29, 1, rep % 2 == 0);
        const auto curves = random_predictions(rng, d.time());
        bool any = false;
        for (Index i = 0; i < d.size(); ++i)
            for (Index j = 0; j < d.size(); ++j) any = any || (d.event()[i] == 1 && d.time()[i] < d.time()[j]);
        if (!any) continue;
        CHECK(concordance_td(curves, d.time(), d.event()) ==
              testutil::oracle_concordance(curves, d.time(), d.event()));
    }
}

TEST_CASE("concordance ignores monotone transforms and record order") {
    std::mt19937_64 rng(42);
    const auto d = testutil::random_dataset(rng, 25, 1);
    const auto curves = random_predictions(rng, d.time());
    std::vector<StepCurve> squared;
    for (const auto& c : curves) squared.emplace_back(c.times(), c.values().array().square().matrix());
    const double base = concordance_td(curves, d.time(), d.event());
    CHECK(concordance_td(squared, d.time(), d.event()) == base);

    std::vector<Index> perm(25);
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto shuffled = d.subset(perm);
    std::vector<StepCurve> pc;
    for (const Index i : perm) pc.push_back(curves[static_cast<std::size_t>(i)]);
    CHECK(concordance_td(pc, shuffled.time(), shuffled.event()) == doctest::Approx(base).epsilon(1e-15));
    CHECK(integrated_brier(pc, shuffled.time(), shuffled.event()) ==
          doctest::Approx(integrated_brier(curves, d.time(), d.event())).epsilon(1e-12));
}

TEST_CASE("brier score hand examples") {
    VectorXd t(4);
    t << 1, 2, 3, 4;
    const VectorXi all = VectorXi::Ones(4);
    const auto g_one = flat(1.0);
    std::vector<StepCurve> exact;
    for (Index i = 0; i < 4; ++i) exact.push_back(survival_curve({t[i]}, {0.0}));
    CHECK(brier_censored(exact, t, all, 2.5, g_one) == 0.0);
    std::vector<StepCurve> half(4, flat(0.5));
    for (const double s : {0.5, 1.0, 2.5, 3.9}) CHECK(brier_censored(half, t, all, s, g_one) == 0.25);

    VectorXi e(4);
    e << 1, 0, 1, 1;
    const auto g = censoring_km(t, e);
    std::vector<StepCurve> seven(4, flat(0.7));
    // record 1: 0.49/G(1) ; record 2 censored before t: 0 ; records 3,4: 0.09/G(2.5) with G = 2/3
    CHECK(brier_censored(seven, t, e, 2.5, g) == doctest::Approx((0.49 + 2 * 0.09 * 1.5) / 4));
}

TEST_CASE("brier score with unit weights is the plain brier score") {
    std::mt19937_64 rng(43);
    for (int rep = 0; rep < 50; ++rep) {
        const auto d = testutil::random_dataset(rng, 20, 1, false, 0.0);
        const auto curves = random_predictions(rng, d.time());
        const double s = d.time().mean();
        double plain = 0.0;
        for (Index i = 0; i < d.size(); ++i) {
            const double target = d.time()[i] > s ? 1.0 : 0.0;
            plain += std::pow(target - curves[static_cast<std::size_t>(i)](s), 2);
        }
        plain /= d.size();
        CHECK(std::abs(brier_censored(curves, d.time(), d.event(), s, flat(1.0)) - plain) < 1e-12);
    }
}

TEST_CASE("brier score drops records with zero censoring weight") {
    VectorXd t(3);
    VectorXi e(3);
    t << 1, 2, 3;
    e << 1, 1, 1;
    std::vector<StepCurve> c(3, flat(0.5));
    const auto g = survival_curve({2.5}, {0.0});
    // at t = 3 the records with y <= 3 use G(y) (1,1,0): the third is dropped
    CHECK(brier_censored(c, t, e, 3.0, g) == doctest::Approx(0.25));
}

TEST_CASE("integrated brier trapezoid") {
    VectorXd t(4);
    t << 1, 2, 3, 4;
    const VectorXi e = VectorXi::Ones(4);
    std::vector<StepCurve> half(4, flat(0.5));
    CHECK(integrated_brier(half, t, e) == doctest::Approx(0.25));

    std::vector<StepCurve> exact;
    for (Index i = 0; i < 4; ++i) exact.push_back(survival_curve({t[i]}, {0.0}));
    VectorXd two(2);
    two << 1.5, 3.5;
    const double u = brier_censored(half, t, e, 1.5, flat(1.0));
    const double v = brier_censored(half, t, e, 3.5, flat(1.0));
    CHECK(integrated_brier(half, t, e, two, flat(1.0)) == doctest::Approx((u + v) / 2));
    VectorXd one(1);
    one << 2.0;
    CHECK_THROWS_AS(integrated_brier(half, t, e, one), std::invalid_argument);
}

TEST_CASE("integrated brier matches a fine riemann sum") {
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> rate(0.3, 3.0);
    const Index n = 1000;  // the trapezoid error on a step function shrinks like 1/n
    for (int rep = 0; rep < 3; ++rep) {
        const auto d = testutil::random_dataset(rng, n, 1);
        const auto grid = event_time_grid(d.time(), d.event());
        std::vector<StepCurve> curves;
        for (Index i = 0; i < n; ++i) {
            const double lambda = rate(rng);
            std::vector<double> t(grid.data(), grid.data() + grid.size()), v;
            for (const double g : t) v.push_back(std::exp(-lambda * g));
            curves.push_back(survival_curve(t, v));
        }
        const auto g = censoring_km(d.time(), d.event());
        const double lo = grid[0], hi = grid[grid.size() - 1];
        const int steps = 20000;
        double fine = 0.0;
        for (int k = 0; k < steps; ++k)
            fine += brier_censored(curves, d.time(), d.event(), lo + (hi - lo) * (k + 0.5) / steps, g) / steps;
        CHECK(std::abs(integrated_brier(curves, d.time(), d.event()) - fine) < 1e-3);
    }
}

TEST_CASE("d-calibration on exactly uniform probabilities") {
    const int n = 100;
    VectorXd t = VectorXd::Ones(n);
    const VectorXi e = VectorXi::Ones(n);
    std::vector<StepCurve> c;
    for (int i = 0; i < n; ++i) c.push_back(flat(0.05 + 0.1 * (i % 10)));
    const auto r = d_calibration(c, t, e);
    CHECK(r.pass);
    CHECK(r.pvalue == doctest::Approx(1.0));
    CHECK(r.statistic == doctest::Approx(0.0));
}

TEST_CASE("d-calibration rejects the constant one predictor") {
    std::mt19937_64 rng(45);
    const auto d = testutil::random_dataset(rng, 1000, 1, false, 0.0);
    std::vector<StepCurve> c(1000, flat(1.0));
    const auto r = d_calibration(c, d.time(), d.event());
    CHECK_FALSE(r.pass);
    CHECK(r.bin_mass[9] == 1000.0);
}

TEST_CASE("d-calibration accepts the sample's own kaplan-meier") {
    std::mt19937_64 rng(46);
    const auto d = testutil::random_dataset(rng, 1000, 1, false, 0.0);
    const auto km = kaplan_meier(d.time(), d.event());
    std::vector<StepCurve> c(1000, km);
    CHECK(d_calibration(c, d.time(), d.event()).pass);
}

TEST_CASE("d-calibration spreads censored mass") {
    VectorXd t(2);
    VectorXi e(2);
    t << 1, 1;
    e << 0, 0;
    std::vector<StepCurve> c{flat(0.25), flat(0.0)};
    const auto r = d_calibration(c, t, e, 4);
    // p = 0.25 sits in bin [0.25, 0.5): (0.25 - 0.25)/0.25 = 0 there, 0.25/0.25 = 1 in bin 0
    // p = 0 goes to the lowest bin
    CHECK(r.bin_mass[0] == doctest::Approx(2.0));
    CHECK(r.bin_mass.sum() == doctest::Approx(2.0));

    std::vector<StepCurve> c2{flat(0.6), flat(0.6)};
    const auto r2 = d_calibration(c2, t, e, 4);
    CHECK(r2.bin_mass[2] == doctest::Approx(2 * 0.1 / 0.6));
    CHECK(r2.bin_mass[0] == doctest::Approx(2 * 0.25 / 0.6));
    CHECK(r2.bin_mass[3] == 0.0);
    CHECK_THROWS_AS(d_calibration(c2, t, e, 1), std::invalid_argument);
}

TEST_CASE("d-calibration conserves mass") {
    std::mt19937_64 rng(47);
    for (int rep = 0; rep < 50; ++rep) {
        const auto d = testutil::random_dataset(rng, 60, 1, rep % 2 == 0, 0.5);
        const auto curves = random_predictions(rng, d.time());
        const auto r = d_calibration(curves, d.time(), d.event());
        CHECK(std::abs(r.bin_mass.sum() - 60.0) < 1e-9);
        CHECK(r.pvalue >= 0.0);
        CHECK(r.pvalue <= 1.0);
    }
}

TEST_CASE("fold evaluation fills every field") {
    std::mt19937_64 rng(48);
    const auto d = testutil::random_dataset(rng, 80, 1);
    const auto curves = random_predictions(rng, d.time());
    const auto r = evaluate_fold(curves, d, 3);
    CHECK(r.fold_id == 3);
    CHECK(r.concordance == concordance_td(curves, d.time(), d.event()));
    CHECK(r.ibs == integrated_brier(curves, d.time(), d.event()));
    CHECK(r.dcal_pvalue == d_calibration(curves, d.time(), d.event()).pvalue);
}
