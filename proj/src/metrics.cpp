#include "cobrasurv/metrics.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>

namespace cobrasurv {

namespace {

void check_aligned(std::span<const StepCurve> curves, const VectorXd& times, const VectorXi& events,
                   const char* who) {
    if (static_cast<Index>(curves.size()) != times.size() || times.size() != events.size())
        throw std::invalid_argument(std::string(who) + ": curves, times and events differ in length");
}

}  // namespace

double concordance_td(std::span<const StepCurve> curves, const VectorXd& times, const VectorXi& events) {
    check_aligned(curves, times, events, "concordance_td");
    const Index n = times.size();
    double score = 0.0;
    long long pairs = 0;
    for (Index i = 0; i < n; ++i) {
        if (events[i] != 1) continue;
        const double ti = times[i];
        const double si = curves[static_cast<std::size_t>(i)](ti);
        for (Index j = 0; j < n; ++j) {
            if (!(ti < times[j])) continue;
            const double sj = curves[static_cast<std::size_t>(j)](ti);
            ++pairs;
            if (si < sj) score += 1.0;
            else if (si == sj) score += 0.5;
        }
    }
    if (pairs == 0) throw std::invalid_argument("concordance_td: no comparable pairs");
    return score / static_cast<double>(pairs);
}

double brier_censored(std::span<const StepCurve> curves, const VectorXd& times, const VectorXi& events, double t,
                      const StepCurve& censoring) {
    check_aligned(curves, times, events, "brier_censored");
    const double g_t = censoring(t);
    double sum = 0.0;
    Index used = 0;
    for (Index i = 0; i < times.size(); ++i) {
        const double s = curves[static_cast<std::size_t>(i)](t);
        if (times[i] <= t) {
            if (events[i] == 1) {
                const double g = censoring(times[i]);
                if (g <= 0.0) continue;
                sum += s * s / g;
            }
        } else {
            if (g_t <= 0.0) continue;
            sum += (1.0 - s) * (1.0 - s) / g_t;
        }
        ++used;
    }
    if (used == 0) throw std::invalid_argument("brier_censored: every record has zero censoring weight");
    return sum / static_cast<double>(used);
}

VectorXd event_time_grid(const VectorXd& times, const VectorXi& events) {
    std::vector<double> grid;
    for (Index i = 0; i < times.size(); ++i)
        if (events[i] == 1) grid.push_back(times[i]);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return Eigen::Map<VectorXd>(grid.data(), static_cast<Index>(grid.size()));
}

double integrated_brier(std::span<const StepCurve> curves, const VectorXd& times, const VectorXi& events,
                        const VectorXd& t_grid, const std::optional<StepCurve>& censoring) {
    check_aligned(curves, times, events, "integrated_brier");
    if (t_grid.size() < 2) throw std::invalid_argument("integrated_brier: grid needs at least two points");
    for (Index g = 1; g < t_grid.size(); ++g)
        if (!(t_grid[g] > t_grid[g - 1])) throw std::invalid_argument("integrated_brier: grid must be increasing");

    const StepCurve g_curve = censoring ? *censoring : censoring_km(times, events);
    const Index n = times.size();
    const Index grid_size = t_grid.size();

    // Per-grid-point weighted squared errors, accumulated record by record.
    VectorXd sum = VectorXd::Zero(grid_size);
    VectorXd used = VectorXd::Zero(grid_size);
    const VectorXd g_grid = g_curve.evaluate_sorted(t_grid);
    for (Index i = 0; i < n; ++i) {
        const VectorXd s = curves[static_cast<std::size_t>(i)].evaluate_sorted(t_grid);
        const double g_own = g_curve(times[i]);
        for (Index k = 0; k < grid_size; ++k) {
            if (times[i] <= t_grid[k]) {
                if (events[i] == 1) {
                    if (g_own <= 0.0) continue;
                    sum[k] += s[k] * s[k] / g_own;
                }
            } else {
                if (g_grid[k] <= 0.0) continue;
                sum[k] += (1.0 - s[k]) * (1.0 - s[k]) / g_grid[k];
            }
            used[k] += 1.0;
        }
    }
    if ((used.array() == 0.0).any())
        throw std::invalid_argument("integrated_brier: a grid point has zero censoring weight for every record");
    const VectorXd bs = sum.array() / used.array();
    const VectorXd widths = t_grid.tail(grid_size - 1) - t_grid.head(grid_size - 1);
    const double area = (0.5 * (bs.head(grid_size - 1) + bs.tail(grid_size - 1))).dot(widths);
    return area / (t_grid[grid_size - 1] - t_grid[0]);
}

double integrated_brier(std::span<const StepCurve> curves, const VectorXd& times, const VectorXi& events) {
    return integrated_brier(curves, times, events, event_time_grid(times, events));
}

DCalibration d_calibration(std::span<const StepCurve> curves, const VectorXd& times, const VectorXi& events,
                           int bins, double level) {
    check_aligned(curves, times, events, "d_calibration");
    if (bins < 2) throw std::invalid_argument("d_calibration: bins must be >= 2");
    if (times.size() == 0) throw std::invalid_argument("d_calibration: empty sample");
    const double width = 1.0 / bins;
    DCalibration out;
    out.bin_mass = VectorXd::Zero(bins);
    for (Index i = 0; i < times.size(); ++i) {
        const double p = std::clamp(curves[static_cast<std::size_t>(i)](times[i]), 0.0, 1.0);
        const int b = std::min(static_cast<int>(std::floor(p * bins)), bins - 1);
        if (events[i] == 1) {
            out.bin_mass[b] += 1.0;
        } else if (p <= 0.0) {
            out.bin_mass[0] += 1.0;
        } else {
            const double lower = b * width;
            out.bin_mass[b] += (p - lower) / p;
            for (int k = 0; k < b; ++k) out.bin_mass[k] += width / p;
        }
    }
    const double expected = static_cast<double>(times.size()) / bins;
    out.statistic = (out.bin_mass.array() - expected).square().sum() / expected;
    const boost::math::chi_squared chi(bins - 1);
    out.pvalue = boost::math::cdf(boost::math::complement(chi, out.statistic));
    out.pass = out.pvalue > level;
    return out;
}

MetricReport evaluate_fold(std::span<const StepCurve> curves, const SurvivalDataset& test, Index fold_id) {
    MetricReport report;
    report.fold_id = fold_id;
    report.concordance = concordance_td(curves, test.time(), test.event());
    report.ibs = integrated_brier(curves, test.time(), test.event());
    const auto dcal = d_calibration(curves, test.time(), test.event());
    report.dcal_pass = dcal.pass;
    report.dcal_pvalue = dcal.pvalue;
    return report;
}

}  // namespace cobrasurv
