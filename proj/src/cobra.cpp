#include "cobrasurv/cobra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace cobrasurv {

namespace {
constexpr std::uint64_t kSplitStream = 0x5B117ULL;
constexpr std::uint64_t kMachineStream = 0x3AC41E0ULL;
}  // namespace

int CobraParams::consensus_count() const {
    const auto m = static_cast<double>(roster.size());
    const int count = static_cast<int>(std::ceil(m * alpha - 1e-9));
    return std::clamp(count, 1, static_cast<int>(roster.size()));
}

void CobraParams::validate() const {
    if (!(epsilon > 0.0) || std::isnan(epsilon)) throw std::invalid_argument("cobra: epsilon must be positive");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("cobra: alpha must lie in (0,1]");
    if (!(l_fraction > 0.0 && l_fraction < 1.0)) throw std::invalid_argument("cobra: l_fraction must lie in (0,1)");
    if (roster.empty()) throw std::invalid_argument("cobra: empty roster");
    const double scaled = alpha * static_cast<double>(roster.size());
    const double rounded = std::round(scaled);
    if (std::abs(scaled - rounded) > 1e-9 || rounded < 1.0 || rounded > static_cast<double>(roster.size()))
        throw std::invalid_argument("cobra: alpha must be a multiple of 1 / roster size");
    for (const auto& spec : roster) spec.validate();
}

const StepCurve& CobraModel::calibration_curve(Index j, Index m) const {
    return state_->curves.at(static_cast<std::size_t>(j)).at(static_cast<std::size_t>(m));
}

std::vector<StepCurve> CobraModel::query_curves(const Eigen::Ref<const VectorXd>& x) const {
    std::vector<StepCurve> out;
    out.reserve(state_->machines.size());
    for (const auto& machine : state_->machines) out.push_back(machine.predict_curve(x));
    return out;
}

MatrixXd CobraModel::distances(std::span<const StepCurve> query) const {
    const State& s = *state_;
    const Index cols = s.widths.size();
    const Index l = calibration_size();
    const double span = horizon() - s.grid[0];
    const auto left = s.grid.head(cols);
    MatrixXd out(l, machine_count());
    for (Index m = 0; m < machine_count(); ++m) {
        const VectorXd q = query[static_cast<std::size_t>(m)].evaluate_sorted(left);
        const MatrixXd& c = s.values[static_cast<std::size_t>(m)];
        VectorXd acc = VectorXd::Zero(l);
        for (Index k = 0; k < cols; ++k) acc.array() += (c.col(k).array() - q[k]).abs() * s.widths[k];
        out.col(m) = acc / span;
    }
    return out;
}

CobraModel CobraModel::with_thresholds(double epsilon, double alpha) const {
    CobraParams p = params_;
    p.epsilon = epsilon;
    p.alpha = alpha;
    p.validate();
    return CobraModel(std::move(p), state_);
}

CobraModel fit_cobra(const SurvivalDataset& train, const CobraParams& params, std::uint64_t seed) {
    params.validate();
    auto state = std::make_shared<CobraModel::State>(CobraModel::State{
        cobra_split(train, params.l_fraction, derive_seed(seed, kSplitStream, 0)), {}, {}, {}, {}, {}, StepCurve{}, {}});
    CobraModel::State& s = *state;
    const SurvivalDataset& d_k = s.split.d_k;
    const SurvivalDataset& d_l = s.split.d_l;

    for (std::size_t m = 0; m < params.roster.size(); ++m) {
        LearnerSpec spec = params.roster[m];
        spec.seed = derive_seed(seed, kMachineStream + m, spec.seed);
        s.machines.push_back(fit(spec, d_k));
    }

    std::vector<double> grid{0.0};
    for (Index i = 0; i < d_k.size(); ++i)
        if (d_k.event()[i] == 1) grid.push_back(d_k.time()[i]);
    grid.push_back(d_k.max_time());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    s.grid = Eigen::Map<VectorXd>(grid.data(), static_cast<Index>(grid.size()));
    const Index cols = s.grid.size() - 1;
    s.widths = s.grid.tail(cols) - s.grid.head(cols);

    const Index l = d_l.size();
    const Index machines = static_cast<Index>(s.machines.size());
    s.curves.resize(static_cast<std::size_t>(l));
    s.values.assign(static_cast<std::size_t>(machines), MatrixXd(l, cols));
    const auto left = s.grid.head(cols);
    for (Index j = 0; j < l; ++j) {
        auto& row = s.curves[static_cast<std::size_t>(j)];
        row.reserve(static_cast<std::size_t>(machines));
        for (Index m = 0; m < machines; ++m) {
            row.push_back(s.machines[static_cast<std::size_t>(m)].predict_curve(d_l.covariates().row(j).transpose()));
            s.values[static_cast<std::size_t>(m)].row(j) = row.back().evaluate_sorted(left).transpose();
        }
    }

    s.population_km = kaplan_meier(d_l.time(), d_l.event());
    s.time_order.resize(static_cast<std::size_t>(l));
    std::iota(s.time_order.begin(), s.time_order.end(), Index{0});
    std::stable_sort(s.time_order.begin(), s.time_order.end(),
                     [&](Index a, Index b) { return d_l.time()[a] < d_l.time()[b]; });
    return CobraModel(params, std::move(state));
}

int gamma_indicator(const CobraModel& model, const Eigen::Ref<const VectorXd>& x, Index j) {
    if (j < 0 || j >= model.calibration_size()) throw std::out_of_range("gamma_indicator: calibration index");
    const auto query = model.query_curves(x);
    const MatrixXd d = model.distances(query);
    const auto agreeing = (d.row(j).array() <= model.params().epsilon).count();
    return agreeing >= model.params().consensus_count() ? 1 : 0;
}

ProximityTable::ProximityTable(const CobraModel& model, const MatrixXd& queries, int jobs)
    : queries_(queries.rows()), calibration_(model.calibration_size()), machines_(model.machine_count()) {
    if (queries.cols() != model.n_features())
        throw std::invalid_argument("proximity table: query covariate count differs from the model's");
    sorted_.resize(static_cast<std::size_t>(queries_ * calibration_ * machines_));
    parallel_for(queries_, jobs, [&](Index q) {
        const auto curves = model.query_curves(queries.row(q).transpose());
        const MatrixXd d = model.distances(curves);
        for (Index j = 0; j < calibration_; ++j) {
            double* out = sorted_.data() + offset(q, j);
            for (Index m = 0; m < machines_; ++m) out[m] = d(j, m);
            std::sort(out, out + machines_);
        }
    });
}

std::vector<Index> ProximityTable::members(Index q, double epsilon, int count) const {
    std::vector<Index> out;
    for (Index j = 0; j < calibration_; ++j)
        if (consensus_distance(q, j, count) <= epsilon) out.push_back(j);
    return out;
}

ProximityAggregate aggregate_members(const CobraModel& model, std::span<const Index> members) {
    const SurvivalDataset& d_l = model.calibration();
    std::vector<char> in(static_cast<std::size_t>(d_l.size()), 0);
    for (const Index j : members) in[static_cast<std::size_t>(j)] = 1;

    ProximityAggregate agg;
    agg.members.assign(members.begin(), members.end());
    std::sort(agg.members.begin(), agg.members.end());
    const auto total = static_cast<Index>(agg.members.size());
    const auto& order = model.time_order();
    Index passed = 0;
    for (std::size_t k = 0; k < order.size();) {
        const double now = d_l.time()[order[k]];
        Index present = 0, deaths = 0;
        for (; k < order.size() && d_l.time()[order[k]] == now; ++k) {
            if (!in[static_cast<std::size_t>(order[k])]) continue;
            ++present;
            deaths += d_l.event()[order[k]];
        }
        if (deaths > 0) {
            agg.event_times.push_back(now);
            agg.event_counts.push_back(static_cast<double>(deaths));
            agg.risk_counts.push_back(static_cast<double>(total - passed));
        }
        passed += present;
    }
    return agg;
}

StepCurve product_limit(const ProximityAggregate& aggregate) {
    const auto n = static_cast<Index>(aggregate.event_times.size());
    VectorXd t(n), v(n);
    double s = 1.0;
    for (Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        s *= 1.0 - aggregate.event_counts[k] / aggregate.risk_counts[k];
        t[i] = aggregate.event_times[k];
        v[i] = s;
    }
    return StepCurve(std::move(t), std::move(v), CurveKind::survival);
}

ProximityAggregate proximity_aggregate(const CobraModel& model, const Eigen::Ref<const VectorXd>& x) {
    const ProximityTable table(model, x.transpose());
    return aggregate_members(model, table.members(0, model.params().epsilon, model.params().consensus_count()));
}

StepCurve predict_from_table(const CobraModel& model, const ProximityTable& table, Index q) {
    const auto members = table.members(q, model.params().epsilon, model.params().consensus_count());
    if (members.empty()) return model.population_km();
    const auto agg = aggregate_members(model, members);
    if (agg.event_times.empty()) return model.population_km();
    return product_limit(agg);
}

StepCurve predict_cobra(const CobraModel& model, const Eigen::Ref<const VectorXd>& x) {
    const ProximityTable table(model, x.transpose());
    return predict_from_table(model, table, 0);
}

std::vector<StepCurve> predict_cobra_batch(const CobraModel& model, const MatrixXd& queries, int jobs) {
    const ProximityTable table(model, queries, jobs);
    std::vector<StepCurve> out(static_cast<std::size_t>(queries.rows()));
    for (Index q = 0; q < queries.rows(); ++q) out[static_cast<std::size_t>(q)] = predict_from_table(model, table, q);
    return out;
}

}  // namespace cobrasurv
