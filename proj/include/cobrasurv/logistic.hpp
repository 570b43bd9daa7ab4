#pragma once

#include "cobrasurv/core.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace cobrasurv {

/// Penalized Bernoulli log-likelihood with its gradient; coefficients are
/// (intercept, slopes...) and only slopes are penalized by l2/2 * |slope|^2.
template <typename Scalar>
struct LogisticObjective {
    Scalar value = 0;
    Vector<Scalar> gradient;
};

template <typename Scalar>
Scalar log1p_exp(Scalar z) {
    return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

template <typename XDerived, typename YDerived, typename BDerived>
LogisticObjective<typename XDerived::Scalar> logistic_objective(const Eigen::MatrixBase<XDerived>& x,
                                                                const Eigen::MatrixBase<YDerived>& y,
                                                                const Eigen::MatrixBase<BDerived>& beta,
                                                                typename XDerived::Scalar l2) {
    using Scalar = typename XDerived::Scalar;
    const Index n = x.rows();
    const Index p = x.cols();
    const Vector<Scalar> eta = (x * beta.tail(p)).array() + beta[0];
    LogisticObjective<Scalar> out;
    out.gradient = Vector<Scalar>::Zero(p + 1);
    Vector<Scalar> resid(n);
    for (Index i = 0; i < n; ++i) {
        const Scalar yi = static_cast<Scalar>(y[i]);
        out.value += yi * eta[i] - log1p_exp(eta[i]);
        resid[i] = yi - Scalar(1) / (Scalar(1) + std::exp(-eta[i]));
    }
    out.value -= Scalar(0.5) * l2 * beta.tail(p).squaredNorm();
    out.gradient[0] = resid.sum();
    out.gradient.tail(p) = x.transpose() * resid - l2 * beta.tail(p);
    return out;
}

/// Thrown when the unpenalized maximum does not exist.
class SeparationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

template <typename Scalar>
struct LogisticFit {
    Vector<Scalar> beta;  // intercept first
    int iterations = 0;
    std::vector<Scalar> objective_trace;
};

/**
 * l2-penalized logistic regression by IRLS (Newton) with step halving.
 * Stops when the largest coefficient change falls below 1e-8 or after 50
 * iterations. With l2 = 0, labels that a hyperplane separates make the
 * coefficients diverge; that case throws SeparationError.
 */
template <typename XDerived, typename YDerived>
LogisticFit<typename XDerived::Scalar> fit_logistic(const Eigen::MatrixBase<XDerived>& x,
                                                    const Eigen::MatrixBase<YDerived>& y,
                                                    typename XDerived::Scalar l2) {
    using Scalar = typename XDerived::Scalar;
    const Index n = x.rows();
    const Index p = x.cols();
    if (y.size() != n) throw std::invalid_argument("fit_logistic: labels and features differ in length");
    if (n == 0) throw std::invalid_argument("fit_logistic: no observations");
    if (!(l2 >= 0)) throw std::invalid_argument("fit_logistic: l2 must be >= 0");
    for (Index i = 0; i < n; ++i)
        if (y[i] != 0 && y[i] != 1) throw std::invalid_argument("fit_logistic: labels must be 0 or 1");

    Matrix<Scalar> design(n, p + 1);
    design.col(0).setOnes();
    design.rightCols(p) = x;

    LogisticFit<Scalar> fit;
    fit.beta = Vector<Scalar>::Zero(p + 1);
    auto current = logistic_objective(x, y, fit.beta, l2);
    fit.objective_trace.push_back(current.value);

    const auto separation = [] {
        return SeparationError("fit_logistic: labels are separable and the maximum does not exist; use l2 > 0");
    };

    constexpr int kMaxIterations = 50;
    constexpr Scalar kTolerance = Scalar(1e-8);
    for (int it = 0; it < kMaxIterations; ++it) {
        const Vector<Scalar> eta = design * fit.beta;
        Vector<Scalar> w(n);
        for (Index i = 0; i < n; ++i) {
            const Scalar mu = Scalar(1) / (Scalar(1) + std::exp(-eta[i]));
            w[i] = mu * (Scalar(1) - mu);
        }
        Matrix<Scalar> info = design.transpose() * w.asDiagonal() * design;
        info.diagonal().tail(p).array() += l2;
        const Eigen::LDLT<Matrix<Scalar>> ldlt(info);
        Vector<Scalar> step = ldlt.solve(current.gradient);
        if (ldlt.info() != Eigen::Success || !step.allFinite()) {
            if (l2 == 0) throw separation();
            throw std::runtime_error("fit_logistic: singular information matrix");
        }

        Scalar scale = 1;
        LogisticObjective<Scalar> next;
        Vector<Scalar> candidate;
        bool improved = false;
        for (int half = 0; half < 30; ++half) {
            candidate = fit.beta + scale * step;
            next = logistic_objective(x, y, candidate, l2);
            if (next.value >= current.value) {
                improved = true;
                break;
            }
            scale /= 2;
        }
        fit.iterations = it + 1;
        if (!improved) break;
        const Scalar change = (candidate - fit.beta).cwiseAbs().maxCoeff();
        fit.beta = candidate;
        current = next;
        fit.objective_trace.push_back(current.value);
        if (change < kTolerance) break;
    }

    if (l2 == 0) {
        // Separated data drive the fitted probabilities to 0/1 with growing slopes.
        const Vector<Scalar> eta = design * fit.beta;
        bool separated = true;
        for (Index i = 0; i < n && separated; ++i)
            separated = (y[i] == 1) ? eta[i] > Scalar(10) : eta[i] < Scalar(-10);
        if (separated || !fit.beta.allFinite()) throw separation();
    }
    return fit;
}

}  // namespace cobrasurv
