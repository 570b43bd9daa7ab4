#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cobrasurv {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

/// Malformed input data, config, or files. Reported to CLI users as a user error.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative solver hit its iteration cap. Carries the objective trace.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::vector<double> trace)
        : std::runtime_error(what), trace_(std::move(trace)) {}
    const std::vector<double>& trace() const noexcept { return trace_; }

private:
    std::vector<double> trace_;
};

/**
 * Derives a child seed from a master seed.
 *
 *      child = splitmix64(splitmix64(master ^ splitmix64(stream)) + index)
 *
 * Every seeded component takes its seed through this function with a fixed
 * stream constant, so one master seed reproduces a whole experiment.
 */
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

/// Runs body(i) for i in [0, n) on up to `jobs` threads. Results must be
/// written to per-index slots by the caller; ordering is then deterministic.
void parallel_for(Index n, int jobs, const std::function<void(Index)>& body);

/// Shortest decimal text that reads back to the same double.
std::string format_number(double x);

/// Column-wise mean and standard deviation; zero deviations are replaced by 1.
struct Standardizer {
    VectorXd center;
    VectorXd scale;

    static Standardizer fit(const MatrixXd& x);
    MatrixXd apply(const MatrixXd& x) const;
    VectorXd apply_row(const Eigen::Ref<const VectorXd>& x) const;
};

}  // namespace cobrasurv
