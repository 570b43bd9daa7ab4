#include "cobrasurv/core.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <exception>
#include <mutex>
#include <thread>

namespace cobrasurv {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
    return splitmix64(splitmix64(master ^ splitmix64(stream)) + index);
}

std::string format_number(double x) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc()) throw std::runtime_error("format_number: buffer too small");
    return std::string(buf.data(), ptr);
}

void parallel_for(Index n, int jobs, const std::function<void(Index)>& body) {
    if (n <= 0) return;
    const Index workers = std::min<Index>(std::max(jobs, 1), n);
    if (workers == 1) {
        for (Index i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<Index> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (Index w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (Index i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

Standardizer Standardizer::fit(const MatrixXd& x) {
    Standardizer s;
    const Index n = x.rows();
    s.center = n > 0 ? VectorXd(x.colwise().mean().transpose()) : VectorXd::Zero(x.cols());
    s.scale = VectorXd::Ones(x.cols());
    if (n > 1) {
        for (Index j = 0; j < x.cols(); ++j) {
            const double ss = (x.col(j).array() - s.center(j)).square().sum();
            const double sd = std::sqrt(ss / static_cast<double>(n - 1));
            if (sd > 0.0 && std::isfinite(sd)) s.scale(j) = sd;
        }
    }
    return s;
}

MatrixXd Standardizer::apply(const MatrixXd& x) const {
    return (x.rowwise() - center.transpose()).array().rowwise() / scale.transpose().array();
}

VectorXd Standardizer::apply_row(const Eigen::Ref<const VectorXd>& x) const {
    return (x - center).cwiseQuotient(scale);
}

}  // namespace cobrasurv
