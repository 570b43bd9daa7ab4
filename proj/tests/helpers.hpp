#pragma once

#include "cobrasurv/curves.hpp"
#include "cobrasurv/data.hpp"

#include <random>
#include <vector>

namespace testutil {

using namespace cobrasurv;

/// Small random survival sample; times on a coarse lattice when `ties` so equal times occur.
inline SurvivalDataset random_dataset(std::mt19937_64& rng, Index n, Index p, bool ties = false,
                                      double censor_rate = 0.3) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> lattice(1, 8);
    MatrixXd x(n, p);
    VectorXd t(n);
    VectorXi e(n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < p; ++j) x(i, j) = u(rng);
        t[i] = ties ? static_cast<double>(lattice(rng)) : 0.05 + u(rng) * (1.0 + x(i, 0));
        e[i] = u(rng) < censor_rate ? 0 : 1;
    }
    e[0] = 1;
    return SurvivalDataset(std::move(x), std::move(t), std::move(e));
}

/// Product-limit estimate straight from the definition, one time at a time.
inline double km_oracle(const VectorXd& time, const VectorXi& event, double t) {
    std::vector<double> times(time.data(), time.data() + time.size());
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    double s = 1.0;
    for (const double u : times) {
        if (u > t) break;
        double d = 0, r = 0;
        for (Index i = 0; i < time.size(); ++i) {
            if (time[i] >= u) r += 1;
            if (time[i] == u && event[i] == 1) d += 1;
        }
        if (d > 0) s *= 1.0 - d / r;
    }
    return s;
}

inline StepCurve survival_curve(std::vector<double> t, std::vector<double> v) {
    return StepCurve(Eigen::Map<VectorXd>(t.data(), static_cast<Index>(t.size())),
                     Eigen::Map<VectorXd>(v.data(), static_cast<Index>(v.size())));
}

/// Random non-increasing survival curve with jumps on the given candidate times.
inline StepCurve random_curve(std::mt19937_64& rng, const std::vector<double>& candidates) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> t, v;
    double s = 1.0;
    for (const double c : candidates) {
        if (u(rng) < 0.5) continue;
        s *= u(rng);
        t.push_back(c);
        v.push_back(s);
    }
    return survival_curve(t, v);
}

}  // namespace testutil
