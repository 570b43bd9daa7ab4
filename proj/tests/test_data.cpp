#include "helpers.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace cobrasurv;

namespace {

RawTable table_from(const std::string& text) {
    std::istringstream in(text);
    return parse_csv_table(in);
}

}  // namespace

TEST_CASE("dataset invariants are checked") {
    MatrixXd x(2, 1);
    x << 1, 2;
    VectorXd t(2);
    VectorXi e(2);
    t << 1, 2;
    e << 1, 0;
    CHECK_NOTHROW(SurvivalDataset(x, t, e));
    VectorXd bad_t(2);
    bad_t << 0, 2;
    CHECK_THROWS_AS(SurvivalDataset(x, bad_t, e), DataError);
    VectorXi bad_e(2);
    bad_e << 2, 0;
    CHECK_THROWS_AS(SurvivalDataset(x, t, bad_e), DataError);
    CHECK_THROWS_AS(SurvivalDataset(x, t, VectorXi::Zero(2)), DataError);
    MatrixXd nan_x = x;
    nan_x(0, 0) = std::nan("");
    CHECK_THROWS_AS(SurvivalDataset(nan_x, t, e), DataError);
    const SurvivalDataset d(x, t, e);
    CHECK(d.feature_names() == std::vector<std::string>{"x0"});
    CHECK(d.event_count() == 1);
    CHECK(d.max_time() == 2.0);
}

TEST_CASE("subset keeps rows in the given order") {
    std::mt19937_64 rng(1);
    const auto d = testutil::random_dataset(rng, 10, 2);
    const std::vector<Index> rows{3, 0, 7};
    const auto s = d.subset(rows);
    REQUIRE(s.size() == 3);
    for (Index i = 0; i < 3; ++i) {
        CHECK(s.time()[i] == d.time()[rows[static_cast<std::size_t>(i)]]);
        CHECK(s.covariates().row(i) == d.covariates().row(rows[static_cast<std::size_t>(i)]));
    }
}

TEST_CASE("csv parsing and conversion") {
    const auto table = table_from("\xEF\xBB\xBF" "age,\"grade\",time,event\r\n50,1,3.5,1\r\n61,2,7,0\r\n");
    CHECK(table.header == std::vector<std::string>{"age", "grade", "time", "event"});
    const auto d = table_to_dataset(table, "time", "event");
    CHECK(d.size() == 2);
    CHECK(d.n_features() == 2);
    CHECK(d.feature_names() == std::vector<std::string>{"age", "grade"});
    CHECK(d.time()[0] == 3.5);
    CHECK(d.event()[1] == 0);
}

TEST_CASE("csv errors name the offending row") {
    CHECK_THROWS_AS(table_from("a,b\n1\n"), DataError);
    CHECK_THROWS_WITH_AS(table_to_dataset(table_from("a,time,event\n1,2,1\n1,x,1\n"), "time", "event"),
                         doctest::Contains("row 2"), DataError);
    CHECK_THROWS_AS(table_to_dataset(table_from("a,time,event\n1,-2,1\n"), "time", "event"), DataError);
    CHECK_THROWS_AS(table_to_dataset(table_from("a,time,event\n1,2,3\n"), "time", "event"), DataError);
    CHECK_THROWS_WITH_AS(table_to_dataset(table_from("a,t,event\n1,2,1\n"), "time", "event"),
                         doctest::Contains("time"), DataError);
    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", "time", "event"), DataError);
}

TEST_CASE("preprocess imputes and one-hot codes") {
    const auto raw = table_from(
        "age,stage,site,time,event\n"
        "10,b,x,1,1\n"
        "NA,a,x,2,0\n"
        "30,,x,3,1\n"
        "20,b,x,4,1\n");
    TableSchema schema;
    schema.categorical = {"stage", "site"};
    const auto pre = preprocess(raw, schema);
    const auto& d = pre.data;
    CHECK(d.feature_names() == std::vector<std::string>{"age", "stage=a", "stage=b"});
    CHECK(d.covariates()(1, 0) == doctest::Approx(20.0));  // mean of 10, 30, 20
    CHECK(d.covariates()(2, 2) == 1.0);                     // mode "b"
    CHECK(d.covariates()(1, 1) == 1.0);
    REQUIRE(pre.warnings.size() == 1);
    CHECK(pre.warnings[0].find("site") != std::string::npos);

    const auto missing = table_from("age,time,event\nNA,1,1\n?,2,1\n");
    CHECK_THROWS_AS(preprocess(missing, TableSchema{}), DataError);
}

TEST_CASE("preprocess mode ties go to the smallest level") {
    const auto raw = table_from("g,time,event\nz,1,1\na,2,1\n,3,0\n");
    TableSchema schema;
    schema.categorical = {"g"};
    const auto d = preprocess(raw, schema).data;
    CHECK(d.feature_names() == std::vector<std::string>{"g=a", "g=z"});
    CHECK(d.covariates()(2, 0) == 1.0);
}

TEST_CASE("kfold indices partition the rows") {
    for (const Index n : {10, 11, 17}) {
        const auto folds = kfold_indices(n, 5, 42);
        REQUIRE(folds.size() == 5);
        std::set<Index> seen;
        for (std::size_t f = 0; f < folds.size(); ++f) {
            CHECK(std::is_sorted(folds[f].begin(), folds[f].end()));
            const auto expected = n / 5 + (static_cast<Index>(f) < n % 5 ? 1 : 0);
            CHECK(static_cast<Index>(folds[f].size()) == expected);
            seen.insert(folds[f].begin(), folds[f].end());
        }
        CHECK(static_cast<Index>(seen.size()) == n);
    }
    CHECK(kfold_indices(20, 4, 1) == kfold_indices(20, 4, 1));
    CHECK(kfold_indices(20, 4, 1) != kfold_indices(20, 4, 2));
    CHECK_THROWS_AS(kfold_indices(3, 5, 1), std::invalid_argument);
}

TEST_CASE("cobra split sizes and disjointness") {
    std::mt19937_64 rng(2);
    const auto d = testutil::random_dataset(rng, 50, 2);
    const auto s = cobra_split(d, 0.3, 9);
    CHECK(s.d_l.size() == 15);
    CHECK(s.d_k.size() == 35);
    std::set<Index> all(s.k_rows.begin(), s.k_rows.end());
    all.insert(s.l_rows.begin(), s.l_rows.end());
    CHECK(all.size() == 50);
    CHECK_THROWS_AS(cobra_split(d, 0.001, 9), std::invalid_argument);
}

TEST_CASE("synthetic sample follows the design") {
    SyntheticConfig cfg;
    cfg.n = 2000;
    cfg.seed = 4;
    const auto s = generate_synthetic_sample(cfg);
    const auto& d = s.data;
    CHECK(d.size() == 2000);
    CHECK(d.n_features() == 9);
    CHECK(d.size() - d.event_count() == 800);
    CHECK(d.covariates().minCoeff() > 0.0);
    CHECK(d.covariates().maxCoeff() <= 1.0);
    for (Index i = 0; i < d.size(); ++i) {
        if (d.event()[i] == 1) CHECK(d.time()[i] == s.latent_time[i]);
        else CHECK(d.time()[i] < s.latent_time[i]);
    }
    // Weibull(2, scale): E[T^2] = scale^2
    double ratio = 0.0;
    for (Index i = 0; i < d.size(); ++i) {
        const double lambda = synthetic_scale(d.covariates().row(i).transpose());
        ratio += s.latent_time[i] * s.latent_time[i] / (lambda * lambda);
    }
    CHECK(ratio / d.size() == doctest::Approx(1.0).epsilon(0.1));

    const auto again = generate_synthetic(cfg);
    CHECK(again.time() == d.time());
    SyntheticConfig small = cfg;
    small.dim = 3;
    CHECK_THROWS(small.validate());
}

TEST_CASE("synthetic scale formula") {
    VectorXd x(4);
    x << 0.5, 0.2, 0.1, 0.3;
    CHECK(synthetic_scale(x) == doctest::Approx(2.0 + std::log(6.5 + 1.0 + 0.7) + 0.3));
}
