#pragma once

#include "cobrasurv/curves.hpp"
#include "cobrasurv/data.hpp"

#include <optional>
#include <span>

namespace cobrasurv {

/**
 * Time-dependent concordance. Over pairs with delta_i = 1 and t_i < t_j, the
 * share where S_i(t_i) < S_j(t_i); prediction ties count one half.
 * Throws std::invalid_argument when no pair is comparable.
 */
double concordance_td(std::span<const StepCurve> curves, const VectorXd& times, const VectorXi& events);

/**
 * Inverse-probability-of-censoring-weighted Brier score at t:
 *
 *      1/N sum_i [ 1{y_i <= t, delta_i = 1} S(t|x_i)^2 / G(y_i)
 *                + 1{y_i > t} (1 - S(t|x_i))^2 / G(t) ]
 *
 * Records whose weight would divide by G = 0 are dropped and N shrinks.
 */
double brier_censored(std::span<const StepCurve> curves, const VectorXd& times, const VectorXi& events, double t,
                      const StepCurve& censoring);

/// Sorted distinct event times of a sample.
VectorXd event_time_grid(const VectorXd& times, const VectorXi& events);

/// Trapezoid of BS^c over t_grid divided by its span. The censoring curve
/// defaults to censoring_km of (times, events).
double integrated_brier(std::span<const StepCurve> curves, const VectorXd& times, const VectorXi& events,
                        const VectorXd& t_grid, const std::optional<StepCurve>& censoring = std::nullopt);

/// Grid defaults to the sample's distinct event times.
double integrated_brier(std::span<const StepCurve> curves, const VectorXd& times, const VectorXi& events);

struct DCalibration {
    bool pass = false;
    double pvalue = 0.0;
    double statistic = 0.0;
    VectorXd bin_mass;  // bins ordered by ascending survival probability
};

/**
 * D-calibration: p_i = S_i(y_i) should be uniform. Events add unit mass to the
 * bin holding p_i; a censored record spreads its unit mass over the bin holding
 * p_i ((p_i - lower edge)/p_i) and every lower bin (width/p_i). Pearson
 * chi-square against the uniform count, bins - 1 degrees of freedom; passes
 * iff pvalue > level.
 */
DCalibration d_calibration(std::span<const StepCurve> curves, const VectorXd& times, const VectorXi& events,
                           int bins = 10, double level = 0.05);

struct MetricReport {
    Index fold_id = 0;
    double concordance = 0.0;
    double ibs = 0.0;
    bool dcal_pass = false;
    double dcal_pvalue = 0.0;
};

/// All three metrics on one evaluation fold; the censoring curve is estimated on that fold.
MetricReport evaluate_fold(std::span<const StepCurve> curves, const SurvivalDataset& test, Index fold_id);

}  // namespace cobrasurv
