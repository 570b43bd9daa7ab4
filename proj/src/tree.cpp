#include "cobrasurv/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cobrasurv {

namespace {

constexpr std::uint64_t kTreeStream = 0x7265650001ULL;

// Prefix counts and prefix sums over time ranks.
class Fenwick {
public:
    explicit Fenwick(Index n) : count_(static_cast<std::size_t>(n + 1), 0), sum_(static_cast<std::size_t>(n + 1), 0.0) {}

    void add(Index rank, double value) {
        for (auto i = static_cast<std::size_t>(rank + 1); i < count_.size(); i += i & (~i + 1)) {
            ++count_[i];
            sum_[i] += value;
        }
    }
    // over ranks strictly below `rank`
    std::pair<Index, double> below(Index rank) const {
        Index c = 0;
        double s = 0.0;
        for (auto i = static_cast<std::size_t>(rank); i > 0; i -= i & (~i + 1)) {
            c += count_[i];
            s += sum_[i];
        }
        return {c, s};
    }

private:
    std::vector<Index> count_;
    std::vector<double> sum_;
};

struct NodeScores {
    std::vector<Index> rank;  // per position in rows
    std::vector<double> na;   // A(k): cumulative d/r up to rank k
    std::vector<double> lin;  // B(k): cumulative v/r
    std::vector<double> quad; // C(k): cumulative v/r^2
};

NodeScores node_scores(const SurvivalDataset& data, std::span<const Index> rows) {
    const auto m = static_cast<Index>(rows.size());
    std::vector<double> times(rows.size());
    for (Index i = 0; i < m; ++i) times[static_cast<std::size_t>(i)] = data.time()[rows[static_cast<std::size_t>(i)]];
    std::vector<double> unique = times;
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    const auto t_count = static_cast<Index>(unique.size());

    NodeScores s;
    s.rank.resize(rows.size());
    std::vector<double> deaths(unique.size(), 0.0), present(unique.size(), 0.0);
    for (Index i = 0; i < m; ++i) {
        const auto r = static_cast<Index>(std::lower_bound(unique.begin(), unique.end(), times[static_cast<std::size_t>(i)]) - unique.begin());
        s.rank[static_cast<std::size_t>(i)] = r;
        present[static_cast<std::size_t>(r)] += 1.0;
        deaths[static_cast<std::size_t>(r)] += data.event()[rows[static_cast<std::size_t>(i)]];
    }
    s.na.resize(unique.size());
    s.lin.resize(unique.size());
    s.quad.resize(unique.size());
    double at_risk = static_cast<double>(m);
    double a = 0.0, b = 0.0, c = 0.0;
    for (Index u = 0; u < t_count; ++u) {
        const auto k = static_cast<std::size_t>(u);
        const double d = deaths[k];
        if (d > 0.0) {
            a += d / at_risk;
            if (at_risk > 1.0) {
                const double v = d * (at_risk - d) / (at_risk - 1.0);
                b += v / at_risk;
                c += v / (at_risk * at_risk);
            }
        }
        s.na[k] = a;
        s.lin[k] = b;
        s.quad[k] = c;
        at_risk -= present[k];
    }
    return s;
}

}  // namespace

double log_rank_statistic(const VectorXd& time, const VectorXi& event, const std::vector<bool>& in_left) {
    const Index n = time.size();
    std::vector<double> unique(time.data(), time.data() + n);
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    double u_stat = 0.0, var = 0.0;
    for (const double t : unique) {
        double d = 0, r = 0, d_left = 0, r_left = 0;
        for (Index i = 0; i < n; ++i) {
            if (time[i] < t) continue;
            r += 1;
            if (in_left[static_cast<std::size_t>(i)]) r_left += 1;
            if (time[i] == t && event[i] == 1) {
                d += 1;
                if (in_left[static_cast<std::size_t>(i)]) d_left += 1;
            }
        }
        if (d == 0) continue;
        u_stat += d_left - r_left * d / r;
        if (r > 1) var += d * (r_left / r) * (1 - r_left / r) * (r - d) / (r - 1);
    }
    return var > 0 ? u_stat * u_stat / var : 0.0;
}

SplitCandidate best_log_rank_split(const SurvivalDataset& data, std::span<const Index> rows,
                                   std::span<const Index> features, int min_leaf) {
    SplitCandidate best;
    const auto m = static_cast<Index>(rows.size());
    if (m < 2 * static_cast<Index>(min_leaf) || m < 2) return best;
    const NodeScores scores = node_scores(data, rows);
    const auto t_count = static_cast<Index>(scores.na.size());
    const double total_lin = scores.lin.empty() ? 0.0 : scores.lin.back();
    if (total_lin <= 0.0) return best;

    std::vector<Index> order(rows.size());
    for (const Index f : features) {
        const auto x = data.covariates().col(f);
        std::iota(order.begin(), order.end(), Index{0});
        std::sort(order.begin(), order.end(), [&](Index a, Index b) {
            const double xa = x[rows[static_cast<std::size_t>(a)]], xb = x[rows[static_cast<std::size_t>(b)]];
            if (xa != xb) return xa < xb;
            const Index ra = scores.rank[static_cast<std::size_t>(a)], rb = scores.rank[static_cast<std::size_t>(b)];
            if (ra != rb) return ra < rb;
            return data.event()[rows[static_cast<std::size_t>(a)]] < data.event()[rows[static_cast<std::size_t>(b)]];
        });

        Fenwick tree(t_count);
        double u_stat = 0.0, lin = 0.0, quad = 0.0;
        for (Index i = 0; i + 1 < m; ++i) {
            const auto pos = static_cast<std::size_t>(order[static_cast<std::size_t>(i)]);
            const Index row = rows[pos];
            const Index rank = scores.rank[pos];
            const auto rk = static_cast<std::size_t>(rank);
            const auto [count_below, quad_below] = tree.below(rank);
            const Index count_at_or_above = i - count_below;
            u_stat += data.event()[row] - scores.na[rk];
            lin += scores.lin[rk];
            quad += 2.0 * (scores.quad[rk] * static_cast<double>(count_at_or_above) + quad_below) + scores.quad[rk];
            tree.add(rank, scores.quad[rk]);

            const Index n_left = i + 1;
            if (n_left < min_leaf || m - n_left < min_leaf) continue;
            const double here = x[row];
            const double next = x[rows[static_cast<std::size_t>(order[static_cast<std::size_t>(i + 1)])]];
            if (!(here < next)) continue;
            const double var = lin - quad;
            if (!(var > 1e-12 * total_lin)) continue;
            const double stat = u_stat * u_stat / var;
            if (stat > best.statistic) {
                double mid = 0.5 * (here + next);
                if (!(mid < next)) mid = here;
                best = {f, mid, stat};
            }
        }
    }
    return best;
}

Index SurvivalTree::leaf_index(const Eigen::Ref<const VectorXd>& x) const {
    Index node = 0;
    while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
        const auto& nd = nodes_[static_cast<std::size_t>(node)];
        node = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes_[static_cast<std::size_t>(node)].leaf;
}

Index SurvivalTree::depth() const {
    Index d = 0;
    for (const auto& nd : nodes_) d = std::max(d, nd.depth);
    return d;
}

namespace {

struct TreeBuilder {
    const SurvivalDataset& data;
    const TreeOptions& options;
    std::mt19937_64* rng;
    std::vector<TreeNode> nodes;
    std::vector<StepCurve> leaves;

    std::vector<Index> candidate_features() {
        const Index p = data.n_features();
        std::vector<Index> all(static_cast<std::size_t>(p));
        std::iota(all.begin(), all.end(), Index{0});
        if (options.mtry <= 0 || options.mtry >= p || rng == nullptr) return all;
        for (Index i = 0; i < options.mtry; ++i) {
            std::uniform_int_distribution<Index> pick(i, p - 1);
            std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(pick(*rng))]);
        }
        all.resize(static_cast<std::size_t>(options.mtry));
        std::sort(all.begin(), all.end());
        return all;
    }

    Index make_leaf(std::span<const Index> rows, Index depth) {
        VectorXd t(static_cast<Index>(rows.size()));
        VectorXi e(static_cast<Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            t[static_cast<Index>(i)] = data.time()[rows[i]];
            e[static_cast<Index>(i)] = data.event()[rows[i]];
        }
        TreeNode leaf;
        leaf.leaf = static_cast<Index>(leaves.size());
        leaf.depth = depth;
        leaves.push_back(kaplan_meier(t, e));
        nodes.push_back(leaf);
        return static_cast<Index>(nodes.size()) - 1;
    }

    Index grow(std::vector<Index> rows, Index depth) {
        if (depth >= options.max_depth) return make_leaf(rows, depth);
        const auto features = candidate_features();
        const SplitCandidate split = best_log_rank_split(data, rows, features, options.min_leaf);
        if (split.feature < 0 || !(split.statistic > 0.0)) return make_leaf(rows, depth);

        std::vector<Index> left, right;
        for (const Index r : rows)
            (data.covariates()(r, split.feature) <= split.threshold ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        const auto self = static_cast<Index>(nodes.size());
        TreeNode node;
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.statistic = split.statistic;
        node.depth = depth;
        nodes.push_back(node);
        const Index l = grow(std::move(left), depth + 1);
        const Index r = grow(std::move(right), depth + 1);
        nodes[static_cast<std::size_t>(self)].left = l;
        nodes[static_cast<std::size_t>(self)].right = r;
        return self;
    }
};

}  // namespace

SurvivalTree grow_survival_tree(const SurvivalDataset& data, std::span<const Index> rows,
                                const TreeOptions& options, std::mt19937_64* rng) {
    if (options.min_leaf < 1) throw std::invalid_argument("survival tree: min_leaf must be at least 1");
    if (options.max_depth < 0) throw std::invalid_argument("survival tree: max_depth must be nonnegative");
    if (rows.empty()) throw std::invalid_argument("survival tree: no rows");
    TreeBuilder builder{data, options, rng, {}, {}};
    builder.grow(std::vector<Index>(rows.begin(), rows.end()), 0);
    return SurvivalTree(std::move(builder.nodes), std::move(builder.leaves));
}

SurvivalTree fit_survival_tree(const SurvivalDataset& data, int max_depth, int min_leaf) {
    std::vector<Index> rows(static_cast<std::size_t>(data.size()));
    std::iota(rows.begin(), rows.end(), Index{0});
    TreeOptions options;
    options.max_depth = max_depth;
    options.min_leaf = min_leaf;
    return grow_survival_tree(data, rows, options, nullptr);
}

RandomSurvivalForest::RandomSurvivalForest(std::vector<SurvivalTree> trees, VectorXd grid)
    : trees_(std::move(trees)), grid_(std::move(grid)) {
    leaf_values_.reserve(trees_.size());
    for (const auto& tree : trees_) {
        std::vector<VectorXd> values;
        values.reserve(static_cast<std::size_t>(tree.leaf_count()));
        for (Index l = 0; l < tree.leaf_count(); ++l) values.push_back(tree.leaf_curve(l).evaluate_sorted(grid_));
        leaf_values_.push_back(std::move(values));
    }
}

StepCurve RandomSurvivalForest::predict(const Eigen::Ref<const VectorXd>& x) const {
    VectorXd sum = VectorXd::Zero(grid_.size());
    for (std::size_t t = 0; t < trees_.size(); ++t)
        sum += leaf_values_[t][static_cast<std::size_t>(trees_[t].leaf_index(x))];
    sum /= static_cast<double>(trees_.size());
    return StepCurve(grid_, sum.cwiseMin(1.0).cwiseMax(0.0), CurveKind::survival).compressed();
}

RandomSurvivalForest fit_random_survival_forest(const SurvivalDataset& data, const ForestOptions& options) {
    if (options.n_trees < 1) throw std::invalid_argument("forest: n_trees must be at least 1");
    const Index p = data.n_features();
    int mtry = options.mtry;
    if (mtry == 0) mtry = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p))));
    if (mtry < 1 || mtry > p) throw std::invalid_argument("forest: mtry must lie in [1, feature count]");

    TreeOptions tree_options;
    tree_options.max_depth = options.max_depth;
    tree_options.min_leaf = options.min_leaf;
    tree_options.mtry = mtry;

    const Index n = data.size();
    std::vector<SurvivalTree> trees;
    trees.reserve(static_cast<std::size_t>(options.n_trees));
    std::vector<Index> rows(static_cast<std::size_t>(n));
    for (int t = 0; t < options.n_trees; ++t) {
        std::mt19937_64 rng(derive_seed(options.seed, kTreeStream, static_cast<std::uint64_t>(t)));
        if (options.bootstrap) {
            std::uniform_int_distribution<Index> draw(0, n - 1);
            for (auto& r : rows) r = draw(rng);
        } else {
            std::iota(rows.begin(), rows.end(), Index{0});
        }
        trees.push_back(grow_survival_tree(data, rows, tree_options, &rng));
    }

    std::vector<double> grid;
    for (Index i = 0; i < n; ++i)
        if (data.event()[i] == 1) grid.push_back(data.time()[i]);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return RandomSurvivalForest(std::move(trees), Eigen::Map<VectorXd>(grid.data(), static_cast<Index>(grid.size())));
}

}  // namespace cobrasurv
