#include "cobrasurv/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace cobrasurv {

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "data",          "name",           "time_col",         "event_col",          "categorical",
        "synthetic.n",   "synthetic.censor_fraction",          "synthetic.dim",      "roster",
        "tree.max_depth", "tree.min_leaf", "forest.n_trees",   "forest.mtry",        "forest.min_leaf",
        "forest.max_depth", "forest.bootstrap", "cox_lasso.lambda", "cox_ridge.lambda", "knn.k",
        "epsilon",       "alpha",          "l_fraction",       "search.trials",      "search.objective",
        "search.inner_folds", "search.epsilon_min", "search.epsilon_max", "search.epsilon_distribution", "folds",   "queries",
        "seed",          "jobs",           "out"};
    return keys;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end)
        throw DataError("config: '" + key + "' expects a number, got '" + value + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw DataError("config: '" + key + "' expects true or false, got '" + value + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
    if (fixed.has_value() == search.has_value())
        throw DataError("config: give either epsilon/alpha/l_fraction or search.* settings, not both or neither");
    if (folds < 2) throw DataError("config: folds must be >= 2");
    if (inner_folds < 2) throw DataError("config: search.inner_folds must be >= 2");
    if (queries < 1) throw DataError("config: queries must be >= 1");
    if (jobs < 1) throw DataError("config: jobs must be >= 1");
    if (roster.empty()) throw DataError("config: roster is empty");
    try {
        if (is_synthetic()) synthetic.validate();
        for (const auto& spec : roster) spec.validate();
        if (fixed) fixed->validate();
        if (search) search->validate();
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("config: ") + e.what());
    }
}

ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
    std::map<std::string, std::string> kv;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!known_keys().count(key))
            throw DataError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        if (!kv.emplace(key, value).second)
            throw DataError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }

    ExperimentConfig cfg;
    cfg.entries = kv;
    const auto get = [&](const std::string& key) -> const std::string* {
        const auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };

    if (auto v = get("data")) {
        cfg.data = *v;
        if (!cfg.is_synthetic() && !base_dir.empty() && std::filesystem::path(*v).is_relative())
            cfg.data = (base_dir / *v).string();
    }
    if (auto v = get("name")) cfg.name = *v;
    if (cfg.name.empty())
        cfg.name = cfg.is_synthetic() ? "synthetic" : std::filesystem::path(cfg.data).stem().string();
    if (auto v = get("time_col")) cfg.schema.time_col = *v;
    if (auto v = get("event_col")) cfg.schema.event_col = *v;
    if (auto v = get("categorical"))
        for (const auto& c : split_list(*v)) cfg.schema.categorical.insert(c);

    if (auto v = get("synthetic.n")) cfg.synthetic.n = parse_number<Index>("synthetic.n", *v);
    if (auto v = get("synthetic.censor_fraction"))
        cfg.synthetic.censor_fraction = parse_number<double>("synthetic.censor_fraction", *v);
    if (auto v = get("synthetic.dim")) cfg.synthetic.dim = parse_number<Index>("synthetic.dim", *v);

    if (auto v = get("roster")) {
        cfg.roster.clear();
        for (const auto& name : split_list(*v)) {
            LearnerSpec spec;
            try {
                spec.kind = learner_kind_from_string(name);
            } catch (const std::invalid_argument& e) {
                throw DataError(std::string("config: ") + e.what());
            }
            cfg.roster.push_back(spec);
        }
    }
    for (auto& spec : cfg.roster) {
        switch (spec.kind) {
            case LearnerKind::survival_tree:
                if (auto v = get("tree.max_depth")) spec.max_depth = parse_number<int>("tree.max_depth", *v);
                if (auto v = get("tree.min_leaf")) spec.min_leaf = parse_number<int>("tree.min_leaf", *v);
                break;
            case LearnerKind::random_survival_forest:
                if (auto v = get("forest.n_trees")) spec.n_trees = parse_number<int>("forest.n_trees", *v);
                if (auto v = get("forest.mtry")) spec.mtry = parse_number<int>("forest.mtry", *v);
                if (auto v = get("forest.min_leaf")) spec.min_leaf = parse_number<int>("forest.min_leaf", *v);
                if (auto v = get("forest.max_depth")) spec.max_depth = parse_number<int>("forest.max_depth", *v);
                if (auto v = get("forest.bootstrap")) spec.bootstrap = parse_bool("forest.bootstrap", *v);
                break;
            case LearnerKind::cox_lasso:
                if (auto v = get("cox_lasso.lambda")) spec.lambda = parse_number<double>("cox_lasso.lambda", *v);
                break;
            case LearnerKind::cox_ridge:
                if (auto v = get("cox_ridge.lambda")) spec.lambda = parse_number<double>("cox_ridge.lambda", *v);
                break;
            case LearnerKind::knn_survival:
                if (auto v = get("knn.k")) spec.k = parse_number<int>("knn.k", *v);
                break;
        }
    }

    const bool any_fixed = get("epsilon") || get("alpha") || get("l_fraction");
    if (any_fixed) {
        if (!(get("epsilon") && get("alpha") && get("l_fraction")))
            throw DataError("config: fixed parameters need all of epsilon, alpha and l_fraction");
        CobraParams p;
        p.roster = cfg.roster;
        p.epsilon = parse_number<double>("epsilon", *get("epsilon"));
        p.alpha = parse_number<double>("alpha", *get("alpha"));
        p.l_fraction = parse_number<double>("l_fraction", *get("l_fraction"));
        cfg.fixed = p;
    }
    const bool any_search = get("search.trials") || get("search.objective") || get("search.inner_folds") ||
                            get("search.epsilon_min") || get("search.epsilon_max") ||
                            get("search.epsilon_distribution");
    if (any_search) {
        SearchSpace s;
        if (auto v = get("search.trials")) s.trials = parse_number<int>("search.trials", *v);
        if (auto v = get("search.objective")) {
            try {
                s.objective = objective_from_string(*v);
            } catch (const std::invalid_argument& e) {
                throw DataError(std::string("config: ") + e.what());
            }
        }
        if (auto v = get("search.epsilon_distribution")) {
            try {
                s.epsilon_distribution = epsilon_distribution_from_string(*v);
            } catch (const std::invalid_argument& e) {
                throw DataError(std::string("config: ") + e.what());
            }
        }
        if (auto v = get("search.epsilon_min")) s.epsilon_min = parse_number<double>("search.epsilon_min", *v);
        if (auto v = get("search.epsilon_max")) s.epsilon_max = parse_number<double>("search.epsilon_max", *v);
        if (auto v = get("search.inner_folds")) cfg.inner_folds = parse_number<int>("search.inner_folds", *v);
        cfg.search = s;
    }

    if (auto v = get("folds")) cfg.folds = parse_number<int>("folds", *v);
    if (auto v = get("queries")) cfg.queries = parse_number<Index>("queries", *v);
    if (auto v = get("seed")) cfg.seed = parse_number<std::uint64_t>("seed", *v);
    if (auto v = get("jobs")) cfg.jobs = parse_number<int>("jobs", *v);
    if (auto v = get("out")) cfg.out = *v;
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file '" + path.string() + "'");
    return parse_config(in, path.parent_path());
}

}  // namespace cobrasurv
