#pragma once

#include "cobrasurv/learners.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace cobrasurv {

struct CobraParams {
    double epsilon = 0.05;     // area-distance threshold
    double alpha = 0.6;        // fraction of machines that must agree
    double l_fraction = 0.5;   // calibration share of the training data
    std::vector<LearnerSpec> roster = default_roster();

    /// ceil(|roster| * alpha): machines that must place a point within epsilon.
    int consensus_count() const;
    void validate() const;
};

/// Event times, event counts and risk counts of the proximity set (Gamma = 1).
struct ProximityAggregate {
    std::vector<double> event_times;
    std::vector<double> event_counts;
    std::vector<double> risk_counts;
    std::vector<Index> members;  // calibration indices, ascending
};

/**
 * Machines trained on D_k plus the calibration part D_l with every machine's
 * curve for every calibration record precomputed.
 *
 * Distances are taken on one grid: 0, the distinct event times of D_k, and the
 * largest observed D_k time. Every built-in learner jumps only at D_k event
 * times, so this grid contains all jumps of any pair of curves and the
 * left-Riemann sum over it is the exact time-averaged area.
 */
class CobraModel {
public:
    const CobraParams& params() const noexcept { return params_; }
    const std::vector<FittedLearner>& machines() const noexcept { return state_->machines; }
    const DatasetSplit& split() const noexcept { return state_->split; }
    const SurvivalDataset& calibration() const noexcept { return state_->split.d_l; }
    Index calibration_size() const noexcept { return state_->split.d_l.size(); }
    Index machine_count() const noexcept { return static_cast<Index>(state_->machines.size()); }
    Index n_features() const noexcept { return state_->split.d_l.n_features(); }

    const StepCurve& calibration_curve(Index j, Index m) const;
    const StepCurve& population_km() const noexcept { return state_->population_km; }
    const VectorXd& grid() const noexcept { return state_->grid; }
    double horizon() const noexcept { return state_->grid[state_->grid.size() - 1]; }
    const std::vector<Index>& time_order() const noexcept { return state_->time_order; }

    /// S_{k,m}(.|x) for every machine m.
    std::vector<StepCurve> query_curves(const Eigen::Ref<const VectorXd>& x) const;

    /// |D_l| x |roster| matrix of area distances between the query curves and
    /// each calibration record's curves.
    MatrixXd distances(std::span<const StepCurve> query) const;

    /// Same machines and calibration data, different (epsilon, alpha).
    CobraModel with_thresholds(double epsilon, double alpha) const;

private:
    struct State {
        DatasetSplit split;
        std::vector<FittedLearner> machines;
        std::vector<std::vector<StepCurve>> curves;  // [j][m]
        VectorXd grid;
        VectorXd widths;              // grid[k+1] - grid[k]
        std::vector<MatrixXd> values; // per machine: |D_l| x (grid size - 1), left grid points
        StepCurve population_km;
        std::vector<Index> time_order;  // D_l indices by ascending time
    };

    CobraModel(CobraParams params, std::shared_ptr<const State> state)
        : params_(std::move(params)), state_(std::move(state)) {}

    friend CobraModel fit_cobra(const SurvivalDataset& train, const CobraParams& params, std::uint64_t seed);

    CobraParams params_;
    std::shared_ptr<const State> state_;
};

/// Splits train into D_k / D_l, fits every roster machine on D_k and caches
/// each machine's curve for each D_l record.
CobraModel fit_cobra(const SurvivalDataset& train, const CobraParams& params, std::uint64_t seed);

/// 1 iff at least consensus_count machines put calibration point j within epsilon of x.
int gamma_indicator(const CobraModel& model, const Eigen::Ref<const VectorXd>& x, Index j);

/**
 * For a batch of queries, every (query, calibration point) pair's machine
 * distances in ascending order. Gamma = 1 exactly when the count-th smallest
 * distance is <= epsilon, so one table serves every (epsilon, alpha).
 */
class ProximityTable {
public:
    ProximityTable(const CobraModel& model, const MatrixXd& queries, int jobs = 1);

    Index query_count() const noexcept { return queries_; }
    Index calibration_count() const noexcept { return calibration_; }
    Index machine_count() const noexcept { return machines_; }

    std::span<const double> sorted_distances(Index q, Index j) const {
        return {sorted_.data() + offset(q, j), static_cast<std::size_t>(machines_)};
    }
    double consensus_distance(Index q, Index j, int count) const {
        return sorted_[offset(q, j) + static_cast<std::size_t>(count - 1)];
    }
    std::vector<Index> members(Index q, double epsilon, int count) const;

private:
    std::size_t offset(Index q, Index j) const {
        return static_cast<std::size_t>((q * calibration_ + j) * machines_);
    }

    Index queries_ = 0;
    Index calibration_ = 0;
    Index machines_ = 0;
    std::vector<double> sorted_;
};

ProximityAggregate aggregate_members(const CobraModel& model, std::span<const Index> members);
ProximityAggregate proximity_aggregate(const CobraModel& model, const Eigen::Ref<const VectorXd>& x);

/// prod over aggregate event times of (1 - D/R).
StepCurve product_limit(const ProximityAggregate& aggregate);

/// Aggregated Kaplan-Meier over the proximity set; population KM of D_l when the
/// set is empty or holds no events.
StepCurve predict_cobra(const CobraModel& model, const Eigen::Ref<const VectorXd>& x);
StepCurve predict_from_table(const CobraModel& model, const ProximityTable& table, Index q);
std::vector<StepCurve> predict_cobra_batch(const CobraModel& model, const MatrixXd& queries, int jobs = 1);

}  // namespace cobrasurv
