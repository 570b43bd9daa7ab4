#pragma once

#include "cobrasurv/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace cobrasurv {

template <typename Scalar>
struct PartialLikelihood {
    Scalar value = 0;
    Vector<Scalar> gradient;
    Matrix<Scalar> hessian;  // empty unless requested
};

/**
 * Cox log partial likelihood with Breslow ties,
 *
 *      l(beta) = sum_{i: delta_i = 1} [ eta_i - log sum_{j: y_j >= y_i} exp(eta_j) ],
 *
 * its gradient, and optionally its Hessian. One backward sweep over time with
 * running risk-set sums; linear predictors are shifted by their maximum.
 */
template <typename XDerived, typename TDerived, typename EDerived, typename BDerived>
PartialLikelihood<typename XDerived::Scalar> partial_likelihood(const Eigen::MatrixBase<XDerived>& x,
                                                                const Eigen::MatrixBase<TDerived>& time,
                                                                const Eigen::MatrixBase<EDerived>& event,
                                                                const Eigen::MatrixBase<BDerived>& beta,
                                                                bool with_hessian = true) {
    using Scalar = typename XDerived::Scalar;
    const Index n = x.rows();
    const Index p = x.cols();

    PartialLikelihood<Scalar> out;
    out.gradient = Vector<Scalar>::Zero(p);
    if (with_hessian) out.hessian = Matrix<Scalar>::Zero(p, p);
    if (n == 0) return out;

    const Vector<Scalar> eta = x * beta;
    const Scalar shift = eta.maxCoeff();
    const Vector<Scalar> w = (eta.array() - shift).exp().matrix();

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) { return time[a] > time[b]; });

    Scalar s0 = 0;
    Vector<Scalar> s1 = Vector<Scalar>::Zero(p);
    Matrix<Scalar> s2;
    if (with_hessian) s2 = Matrix<Scalar>::Zero(p, p);

    for (Index k = 0; k < n;) {
        const Scalar now = time[order[static_cast<std::size_t>(k)]];
        Index end = k;
        for (; end < n && time[order[static_cast<std::size_t>(end)]] == now; ++end) {
            const Index i = order[static_cast<std::size_t>(end)];
            s0 += w[i];
            s1.noalias() += w[i] * x.row(i).transpose();
            if (with_hessian) s2.noalias() += w[i] * x.row(i).transpose() * x.row(i);
        }
        Scalar deaths = 0;
        for (Index j = k; j < end; ++j) {
            const Index i = order[static_cast<std::size_t>(j)];
            if (event[i] != 1) continue;
            deaths += 1;
            out.value += eta[i];
            out.gradient.noalias() += x.row(i).transpose();
        }
        if (deaths > 0) {
            const Vector<Scalar> mean = s1 / s0;
            out.value -= deaths * (shift + std::log(s0));
            out.gradient.noalias() -= deaths * mean;
            if (with_hessian) out.hessian.noalias() -= deaths * (s2 / s0 - mean * mean.transpose());
        }
        k = end;
    }
    return out;
}

}  // namespace cobrasurv
