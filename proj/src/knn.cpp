#include "cobrasurv/knn.hpp"

#include <algorithm>
#include <numeric>

namespace cobrasurv {

KnnSurvival::KnnSurvival(const SurvivalDataset& data, Index k)
    : standardizer_(Standardizer::fit(data.covariates())),
      z_(standardizer_.apply(data.covariates())),
      time_(data.time()),
      event_(data.event()),
      k_(k) {
    if (k < 1 || k > data.size()) throw std::invalid_argument("knn survival: k must lie in [1, n]");
}

std::vector<Index> KnnSurvival::neighbors(const Eigen::Ref<const VectorXd>& x) const {
    const VectorXd q = standardizer_.apply_row(x);
    const VectorXd dist = (z_.rowwise() - q.transpose()).rowwise().squaredNorm();
    std::vector<Index> idx(static_cast<std::size_t>(z_.rows()));
    std::iota(idx.begin(), idx.end(), Index{0});
    const auto by_distance = [&](Index a, Index b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); };
    std::nth_element(idx.begin(), idx.begin() + (k_ - 1), idx.end(), by_distance);
    idx.resize(static_cast<std::size_t>(k_));
    std::sort(idx.begin(), idx.end(), by_distance);
    return idx;
}

StepCurve KnnSurvival::predict(const Eigen::Ref<const VectorXd>& x) const {
    const auto idx = neighbors(x);
    VectorXd t(k_);
    VectorXi e(k_);
    for (Index i = 0; i < k_; ++i) {
        t[i] = time_[idx[static_cast<std::size_t>(i)]];
        e[i] = event_[idx[static_cast<std::size_t>(i)]];
    }
    return kaplan_meier(t, e);
}

KnnSurvival fit_knn_survival(const SurvivalDataset& data, Index k) { return KnnSurvival(data, k); }

}  // namespace cobrasurv
