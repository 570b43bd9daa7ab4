#include "cobrasurv/experiment.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

using namespace cobrasurv;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text, const fs::path& base = {}) {
    std::istringstream in(text);
    return parse_config(in, base);
}

/// A fresh scratch directory under the system temp dir.
fs::path scratch(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    const fs::path dir = fs::temp_directory_path() / ("cobrasurv_" + tag + "_" + std::to_string(rng()));
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(COBRASURV_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kQuickFixed = R"(data = synthetic
synthetic.n = 160
roster = survival_tree, knn_survival, cox_ridge, survival_tree, knn_survival
cox_ridge.lambda = 1
tree.max_depth = 3
knn.k = 6
folds = 2
queries = 20
epsilon = 0.05
alpha = 0.6
l_fraction = 0.5
seed = 3
)";

}  // namespace

TEST_CASE("config parses every setting") {
    const auto cfg = parse(R"(# comment line
data = synthetic   # trailing comment
name = demo
synthetic.n = 300
synthetic.censor_fraction = 0.25
synthetic.dim = 6
roster = survival_tree, random_survival_forest, cox_lasso, cox_ridge, knn_survival
tree.max_depth = 4
tree.min_leaf = 7
forest.n_trees = 20
forest.mtry = 2
forest.min_leaf = 5
forest.max_depth = 6
forest.bootstrap = false
cox_lasso.lambda = 0.5
cox_ridge.lambda = 2
knn.k = 11
search.trials = 40
search.objective = neg_concordance
search.inner_folds = 4
search.epsilon_min = 1e-6
search.epsilon_max = 0.5
search.epsilon_distribution = uniform
folds = 3
queries = 50
seed = 99
jobs = 2
out = results
)");
    CHECK(cfg.is_synthetic());
    CHECK(cfg.name == "demo");
    CHECK(cfg.synthetic.n == 300);
    CHECK(cfg.synthetic.censor_fraction == 0.25);
    CHECK(cfg.synthetic.dim == 6);
    REQUIRE(cfg.roster.size() == 5);
    CHECK(cfg.roster[0].max_depth == 4);
    CHECK(cfg.roster[0].min_leaf == 7);
    CHECK(cfg.roster[1].n_trees == 20);
    CHECK(cfg.roster[1].mtry == 2);
    CHECK(cfg.roster[1].min_leaf == 5);
    CHECK(cfg.roster[1].max_depth == 6);
    CHECK_FALSE(cfg.roster[1].bootstrap);
    CHECK(cfg.roster[2].lambda == 0.5);
    CHECK(cfg.roster[3].lambda == 2.0);
    CHECK(cfg.roster[4].k == 11);
    REQUIRE(cfg.search.has_value());
    CHECK_FALSE(cfg.fixed.has_value());
    CHECK(cfg.search->trials == 40);
    CHECK(cfg.search->objective == Objective::neg_concordance);
    CHECK(cfg.search->epsilon_min == 1e-6);
    CHECK(cfg.search->epsilon_max == 0.5);
    CHECK(cfg.search->epsilon_distribution == EpsilonDistribution::uniform);
    CHECK(cfg.inner_folds == 4);
    CHECK(cfg.folds == 3);
    CHECK(cfg.queries == 50);
    CHECK(cfg.seed == 99);
    CHECK(cfg.jobs == 2);
    CHECK(cfg.out == "results");
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config defaults") {
    const auto cfg = parse("epsilon = 0.1\nalpha = 0.4\nl_fraction = 0.3\n");
    CHECK(cfg.data == "synthetic");
    CHECK(cfg.roster.size() == 5);
    CHECK(cfg.folds == 5);
    CHECK(cfg.inner_folds == 3);
    CHECK(cfg.fixed->roster.size() == 5);
    CHECK(cfg.fixed->alpha == 0.4);
    CHECK_NOTHROW(cfg.validate());
    const auto searched = parse("search.trials = 5\n");
    CHECK(searched.search->epsilon_distribution == EpsilonDistribution::log_uniform);
    CHECK(searched.search->objective == Objective::ibs);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse("colour = red\n"), DataError);
    CHECK_THROWS_AS(parse("seed = 1\nseed = 2\n"), DataError);
    CHECK_THROWS_AS(parse("seed\n"), DataError);
    CHECK_THROWS_AS(parse("seed = one\n"), DataError);
    CHECK_THROWS_AS(parse("roster = svm\n"), DataError);
    CHECK_THROWS_AS(parse("forest.bootstrap = maybe\n"), DataError);
    CHECK_THROWS_AS(parse("epsilon = 0.1\n"), DataError);  // fixed parameters come as a set
    CHECK_THROWS_AS(parse("search.objective = auc\n"), DataError);

    CHECK_THROWS_AS(parse("seed = 1\n").validate(), DataError);  // neither
    CHECK_THROWS_AS(parse("epsilon = 0.1\nalpha = 0.4\nl_fraction = 0.3\nsearch.trials = 3\n").validate(),
                    DataError);  // both
    CHECK_THROWS_AS(parse("epsilon = 0.1\nalpha = 0.5\nl_fraction = 0.3\n").validate(), DataError);
    CHECK_THROWS_AS(parse("search.trials = 0\n").validate(), DataError);
    CHECK_THROWS_AS(parse("search.trials = 3\nfolds = 1\n").validate(), DataError);
    CHECK_THROWS_AS(load_config("/nonexistent/dir/x.conf"), DataError);
}

TEST_CASE("data paths resolve against the config directory") {
    const auto dir = scratch("paths");
    write_file(dir / "a.conf", "data = table.csv\nepsilon = 0.1\nalpha = 0.4\nl_fraction = 0.3\n");
    const auto cfg = load_config(dir / "a.conf");
    CHECK(fs::path(cfg.data) == dir / "table.csv");
    CHECK(cfg.name == "table");
    fs::remove_all(dir);
}

TEST_CASE("bench, tune and relevance write their reports") {
    const auto dir = scratch("runs");
    auto cfg = parse(kQuickFixed);
    cfg.out = dir;

    const auto bench = run_bench(cfg);
    for (const auto* name : {"fold_metrics.csv", "concordance.csv", "ibs.csv", "dcalibration.csv", "run.json"})
        CHECK(bench.count(name) == 1);
    CHECK(bench.at("fold_metrics.csv").rfind("dataset,model,fold,concordance,ibs,dcal_pass,dcal_pvalue\n", 0) == 0);
    CHECK(bench.at("ibs.csv").find("synthetic,proposed,") != std::string::npos);
    // header plus (5 learners + proposed) x 2 folds
    const auto lines = std::count(bench.at("fold_metrics.csv").begin(), bench.at("fold_metrics.csv").end(), '\n');
    CHECK(lines == 13);
    CHECK(run_bench(cfg) == bench);

    const auto rel = run_relevance(cfg);
    CHECK(rel.at("relevance.csv").rfind("covariate,aggregate_score,rank\n", 0) == 0);
    CHECK(rel.at("relevance_per_query.csv").rfind("query,degenerate,intercept,", 0) == 0);
    CHECK(rel.at("curves.csv").rfind("query,time,survival\n", 0) == 0);
    const auto meta = nlohmann::json::parse(rel.at("run.json"));
    CHECK(meta.at("command") == "relevance");

    auto tcfg = parse(std::string(kQuickFixed).substr(0, std::string(kQuickFixed).find("epsilon")) +
                      "search.trials = 6\nsearch.inner_folds = 2\nsearch.epsilon_distribution = uniform\n");
    const auto tune = run_tune(tcfg);
    const auto best = nlohmann::json::parse(tune.at("best_params.json"));
    for (const auto* key : {"epsilon", "alpha", "l_fraction", "trial", "objective", "objective_value"})
        CHECK(best.contains(key));
    CHECK(std::count(tune.at("trace.csv").begin(), tune.at("trace.csv").end(), '\n') == 7);
    CHECK_THROWS_AS(run_tune(cfg), DataError);

    write_outputs(dir / "bench", bench);
    CHECK(read_file(dir / "bench" / "ibs.csv") == bench.at("ibs.csv"));
    fs::remove_all(dir);
}

TEST_CASE("cli exit codes and no partial outputs") {
    const auto dir = scratch("cli");
    write_file(dir / "ok.conf", std::string(kQuickFixed) + "out = ok_out\n");
    write_file(dir / "bad_key.conf", "colour = red\n");
    write_file(dir / "too_many.conf", std::string(kQuickFixed) + "queries = 500\n");
    write_file(dir / "missing.conf", "data = nowhere.csv\nepsilon = 0.1\nalpha = 0.4\nl_fraction = 0.3\n");

    CHECK(run_cli("bench --config " + (dir / "ok.conf").string() + " --out " + (dir / "b1").string()) == 0);
    CHECK(run_cli("bench --config " + (dir / "ok.conf").string() + " --out " + (dir / "b2").string()) == 0);
    for (const auto* name : {"fold_metrics.csv", "concordance.csv", "ibs.csv", "dcalibration.csv", "run.json"})
        CHECK(read_file(dir / "b1" / name) == read_file(dir / "b2" / name));

    CHECK(run_cli("bench") == 1);
    CHECK(run_cli("unknown --config x") == 1);
    CHECK(run_cli("bench --config " + (dir / "bad_key.conf").string() + " --out " + (dir / "o1").string()) == 1);
    CHECK(run_cli("tune --config " + (dir / "ok.conf").string() + " --out " + (dir / "o2").string()) == 1);
    CHECK(run_cli("bench --config " + (dir / "missing.conf").string() + " --out " + (dir / "o3").string()) == 1);
    // duplicate key: queries appears twice
    CHECK(run_cli("relevance --config " + (dir / "too_many.conf").string() + " --out " + (dir / "o4").string()) == 1);
    for (const auto* name : {"o1", "o2", "o3", "o4"}) CHECK_FALSE(fs::exists(dir / name));

    write_file(dir / "few.conf", std::string(kQuickFixed).replace(std::string(kQuickFixed).find("queries = 20"), 12,
                                                                  "queries = 500"));
    CHECK(run_cli("relevance --config " + (dir / "few.conf").string() + " --out " + (dir / "o5").string()) == 1);
    CHECK_FALSE(fs::exists(dir / "o5"));
    fs::remove_all(dir);
}
