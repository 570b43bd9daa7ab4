#pragma once

#include "cobrasurv/core.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cobrasurv {

/// Survival curves start at 1 and fall; cumulative-hazard curves start at 0 and rise.
enum class CurveKind { survival, cumulative };

/**
 * Right-continuous piecewise-constant function on [0, inf).
 *
 * The value on [times[i], times[i+1]) is values[i]; before times[0] it is the
 * kind's initial value (1 for survival curves, 0 for cumulative ones).
 */
template <typename Scalar>
class BasicStepCurve {
public:
    using scalar_type = Scalar;
    using vector_type = Vector<Scalar>;

    explicit BasicStepCurve(CurveKind kind = CurveKind::survival) : kind_(kind) {}

    BasicStepCurve(vector_type times, vector_type values, CurveKind kind = CurveKind::survival)
        : times_(std::move(times)), values_(std::move(values)), kind_(kind) {
        validate();
    }

    const vector_type& times() const noexcept { return times_; }
    const vector_type& values() const noexcept { return values_; }
    CurveKind kind() const noexcept { return kind_; }
    Index size() const noexcept { return times_.size(); }
    bool empty() const noexcept { return times_.size() == 0; }

    Scalar initial_value() const noexcept {
        return kind_ == CurveKind::survival ? Scalar(1) : Scalar(0);
    }

    Scalar operator()(Scalar t) const {
        // first jump strictly after t
        const Scalar* begin = times_.data();
        const Scalar* end = begin + times_.size();
        const auto it = std::upper_bound(begin, end, t);
        if (it == begin) return initial_value();
        return values_[static_cast<Index>(it - begin) - 1];
    }

    /// Evaluates at every point of an ascending grid in one merge pass.
    template <typename Derived>
    vector_type evaluate_sorted(const Eigen::MatrixBase<Derived>& grid) const {
        vector_type out(grid.size());
        Index pos = 0;
        Scalar current = initial_value();
        for (Index g = 0; g < grid.size(); ++g) {
            while (pos < times_.size() && times_[pos] <= grid[g]) current = values_[pos++];
            out[g] = current;
        }
        return out;
    }

    /// Drops jumps that do not change the value.
    BasicStepCurve compressed() const {
        std::vector<Index> keep;
        Scalar previous = initial_value();
        for (Index i = 0; i < times_.size(); ++i) {
            if (values_[i] != previous) keep.push_back(i);
            previous = values_[i];
        }
        if (static_cast<Index>(keep.size()) == times_.size()) return *this;
        vector_type t(static_cast<Index>(keep.size())), v(static_cast<Index>(keep.size()));
        for (Index i = 0; i < t.size(); ++i) {
            t[i] = times_[keep[static_cast<std::size_t>(i)]];
            v[i] = values_[keep[static_cast<std::size_t>(i)]];
        }
        return BasicStepCurve(std::move(t), std::move(v), kind_);
    }

    friend bool operator==(const BasicStepCurve& a, const BasicStepCurve& b) {
        return a.kind_ == b.kind_ && a.times_.size() == b.times_.size() &&
               a.times_ == b.times_ && a.values_ == b.values_;
    }

private:
    void validate() const {
        if (times_.size() != values_.size())
            throw std::invalid_argument("step curve: times and values differ in length");
        for (Index i = 0; i < times_.size(); ++i) {
            if (!(times_[i] >= 0) || !std::isfinite(static_cast<double>(times_[i])))
                throw std::invalid_argument("step curve: jump times must be finite and nonnegative");
            if (i > 0 && !(times_[i] > times_[i - 1]))
                throw std::invalid_argument("step curve: jump times must be strictly increasing");
        }
        if (kind_ == CurveKind::survival) {
            Scalar previous = 1;
            for (Index i = 0; i < values_.size(); ++i) {
                if (!(values_[i] >= 0 && values_[i] <= previous))
                    throw std::invalid_argument(
                        "step curve: survival values must be non-increasing within [0,1]");
                previous = values_[i];
            }
        } else {
            Scalar previous = 0;
            for (Index i = 0; i < values_.size(); ++i) {
                if (!(values_[i] >= previous) || !std::isfinite(static_cast<double>(values_[i])))
                    throw std::invalid_argument(
                        "step curve: cumulative values must be finite and non-decreasing from 0");
                previous = values_[i];
            }
        }
    }

    vector_type times_;
    vector_type values_;
    CurveKind kind_;
};

using StepCurve = BasicStepCurve<double>;

template <typename Scalar>
Scalar evaluate(const BasicStepCurve<Scalar>& curve, Scalar t) {
    return curve(t);
}

/// Per-unique-time counts of a right-censored sample, ascending in time.
template <typename Scalar>
struct EventTable {
    Vector<Scalar> times;    // every distinct observed time
    Vector<Scalar> events;   // d(t): events at t
    Vector<Scalar> censored; // c(t): censorings at t
    Vector<Scalar> at_risk;  // r(t): records with time >= t
};

template <typename TimeDerived, typename EventDerived>
EventTable<typename TimeDerived::Scalar> event_table(const Eigen::MatrixBase<TimeDerived>& times,
                                                     const Eigen::MatrixBase<EventDerived>& events) {
    using Scalar = typename TimeDerived::Scalar;
    const Index n = times.size();
    if (events.size() != n) throw std::invalid_argument("event table: times and events differ in length");
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return times[a] < times[b]; });

    std::vector<Scalar> t, d, c, r;
    Index passed = 0;
    for (Index k = 0; k < n;) {
        const Scalar now = times[order[static_cast<std::size_t>(k)]];
        Index died = 0, lost = 0;
        const Index start = k;
        for (; k < n && times[order[static_cast<std::size_t>(k)]] == now; ++k) {
            const auto flag = events[order[static_cast<std::size_t>(k)]];
            if (flag != 0 && flag != 1) throw std::invalid_argument("event table: event flags must be 0 or 1");
            if (flag == 1) ++died; else ++lost;
        }
        t.push_back(now);
        d.push_back(static_cast<Scalar>(died));
        c.push_back(static_cast<Scalar>(lost));
        r.push_back(static_cast<Scalar>(n - passed));
        passed += k - start;
    }
    EventTable<Scalar> out;
    const auto size = static_cast<Index>(t.size());
    out.times = Eigen::Map<Vector<Scalar>>(t.data(), size);
    out.events = Eigen::Map<Vector<Scalar>>(d.data(), size);
    out.censored = Eigen::Map<Vector<Scalar>>(c.data(), size);
    out.at_risk = Eigen::Map<Vector<Scalar>>(r.data(), size);
    return out;
}

/**
 * Product-limit estimate prod_{t' <= t} (1 - d(t')/r(t')).
 *
 * Jumps only at event times. At tied times the risk set includes the records
 * censored at that time. A sample with no events yields the constant curve 1.
 */
template <typename TimeDerived, typename EventDerived>
BasicStepCurve<typename TimeDerived::Scalar> kaplan_meier(const Eigen::MatrixBase<TimeDerived>& times,
                                                         const Eigen::MatrixBase<EventDerived>& events) {
    using Scalar = typename TimeDerived::Scalar;
    if (times.size() == 0) throw std::invalid_argument("kaplan_meier: empty sample");
    const auto table = event_table(times, events);
    std::vector<Scalar> t, v;
    Scalar s = 1;
    for (Index i = 0; i < table.times.size(); ++i) {
        if (table.events[i] == 0) continue;
        s *= Scalar(1) - table.events[i] / table.at_risk[i];
        t.push_back(table.times[i]);
        v.push_back(s);
    }
    const auto size = static_cast<Index>(t.size());
    return BasicStepCurve<Scalar>(Eigen::Map<Vector<Scalar>>(t.data(), size),
                                  Eigen::Map<Vector<Scalar>>(v.data(), size), CurveKind::survival);
}

/// Cumulative hazard sum_{t' <= t} d(t')/r(t').
template <typename TimeDerived, typename EventDerived>
BasicStepCurve<typename TimeDerived::Scalar> nelson_aalen(const Eigen::MatrixBase<TimeDerived>& times,
                                                         const Eigen::MatrixBase<EventDerived>& events) {
    using Scalar = typename TimeDerived::Scalar;
    if (times.size() == 0) throw std::invalid_argument("nelson_aalen: empty sample");
    const auto table = event_table(times, events);
    std::vector<Scalar> t, v;
    Scalar h = 0;
    for (Index i = 0; i < table.times.size(); ++i) {
        if (table.events[i] == 0) continue;
        h += table.events[i] / table.at_risk[i];
        t.push_back(table.times[i]);
        v.push_back(h);
    }
    const auto size = static_cast<Index>(t.size());
    return BasicStepCurve<Scalar>(Eigen::Map<Vector<Scalar>>(t.data(), size),
                                  Eigen::Map<Vector<Scalar>>(v.data(), size), CurveKind::cumulative);
}

/// Kaplan-Meier of the censoring distribution: flags flipped, censorings are the events.
template <typename TimeDerived, typename EventDerived>
BasicStepCurve<typename TimeDerived::Scalar> censoring_km(const Eigen::MatrixBase<TimeDerived>& times,
                                                         const Eigen::MatrixBase<EventDerived>& events) {
    const VectorXi flipped = (1 - events.derived().template cast<int>().array()).matrix();
    return kaplan_meier(times, flipped);
}

/**
 * Area-norm distance between two curves on a grid:
 *
 *      (1 / (g_last - g_first)) * sum_k |a(g_{k-1}) - b(g_{k-1})| * (g_k - g_{k-1})
 *
 * With a grid containing every jump of both curves this is the exact time-averaged
 * area between them.
 */
template <typename Scalar, typename GridDerived>
Scalar area_distance(const BasicStepCurve<Scalar>& a, const BasicStepCurve<Scalar>& b,
                     const Eigen::MatrixBase<GridDerived>& grid) {
    if (grid.size() < 2) throw std::invalid_argument("area_distance: grid needs at least two points");
    for (Index k = 1; k < grid.size(); ++k)
        if (!(grid[k] > grid[k - 1])) throw std::invalid_argument("area_distance: grid must be strictly increasing");
    const Scalar span = grid[grid.size() - 1] - grid[0];
    if (!(span > 0)) throw std::invalid_argument("area_distance: degenerate grid");
    const auto va = a.evaluate_sorted(grid);
    const auto vb = b.evaluate_sorted(grid);
    Scalar sum = 0;
    for (Index k = 1; k < grid.size(); ++k) sum += std::abs(va[k - 1] - vb[k - 1]) * (grid[k] - grid[k - 1]);
    return sum / span;
}

/// Sorted union of both curves' jumps inside (0, t_max), with endpoints 0 and t_max.
template <typename Scalar>
Vector<Scalar> distance_grid(const BasicStepCurve<Scalar>& a, const BasicStepCurve<Scalar>& b, Scalar t_max) {
    if (!(t_max > 0)) throw std::invalid_argument("distance_grid: t_max must be positive");
    std::vector<Scalar> g{Scalar(0)};
    for (const auto* c : {&a, &b})
        for (Index i = 0; i < c->size(); ++i)
            if (c->times()[i] > 0 && c->times()[i] < t_max) g.push_back(c->times()[i]);
    g.push_back(t_max);
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return Eigen::Map<Vector<Scalar>>(g.data(), static_cast<Index>(g.size()));
}

template <typename Scalar>
Scalar area_distance(const BasicStepCurve<Scalar>& a, const BasicStepCurve<Scalar>& b, Scalar t_max) {
    return area_distance(a, b, distance_grid(a, b, t_max));
}

/// Pointwise mean of curves of one kind, on the union of their jump times.
template <typename Scalar>
BasicStepCurve<Scalar> mean_curve(std::span<const BasicStepCurve<Scalar>> curves) {
    if (curves.empty()) throw std::invalid_argument("mean_curve: no curves");
    const CurveKind kind = curves.front().kind();
    std::vector<Scalar> grid;
    for (const auto& c : curves) {
        if (c.kind() != kind) throw std::invalid_argument("mean_curve: mixed curve kinds");
        grid.insert(grid.end(), c.times().data(), c.times().data() + c.size());
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const Eigen::Map<const Vector<Scalar>> g(grid.data(), static_cast<Index>(grid.size()));
    Vector<Scalar> sum = Vector<Scalar>::Zero(g.size());
    for (const auto& c : curves) sum += c.evaluate_sorted(g);
    sum /= static_cast<Scalar>(curves.size());
    if (kind == CurveKind::survival) sum = sum.cwiseMin(Scalar(1)).cwiseMax(Scalar(0));
    return BasicStepCurve<Scalar>(Vector<Scalar>(g), std::move(sum), kind).compressed();
}

/// Writes "time,value" rows preceded by a header.
template <typename Scalar>
void write_curve_csv(std::ostream& out, const BasicStepCurve<Scalar>& curve) {
    const auto old_precision = out.precision(std::numeric_limits<Scalar>::max_digits10);
    out << "time,value\n";
    for (Index i = 0; i < curve.size(); ++i) out << curve.times()[i] << ',' << curve.values()[i] << '\n';
    out.precision(old_precision);
}

inline StepCurve read_curve_csv(std::istream& in, CurveKind kind = CurveKind::survival) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("curve csv: missing header");
    std::vector<double> t, v;
    Index row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw DataError("curve csv: malformed line " + std::to_string(row));
        try {
            t.push_back(std::stod(line.substr(0, comma)));
            v.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw DataError("curve csv: non-numeric value on line " + std::to_string(row));
        }
    }
    const auto n = static_cast<Index>(t.size());
    return StepCurve(Eigen::Map<VectorXd>(t.data(), n), Eigen::Map<VectorXd>(v.data(), n), kind);
}

}  // namespace cobrasurv
