#include "cobrasurv/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace cobrasurv {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::uint64_t kDataStream = 0xDA7AULL;
constexpr std::uint64_t kOuterFoldStream = 0x0F01DULL;
constexpr std::uint64_t kLearnerStream = 0x1EA2ULL;
constexpr std::uint64_t kCobraStream = 0xC0B2AEULL;
constexpr std::uint64_t kSearchStream = 0x5EA2C4ULL;
constexpr std::uint64_t kQueryStream = 0x0E2FULL;

const std::string kProposed = "proposed";

CobraParams choose_params(const SurvivalDataset& train, const ExperimentConfig& cfg, std::uint64_t search_seed,
                          std::optional<SearchResult>* search_out, double* objective_out) {
    if (cfg.fixed) {
        if (objective_out) *objective_out = std::numeric_limits<double>::quiet_NaN();
        return *cfg.fixed;
    }
    SearchSpace space = *cfg.search;
    space.seed = search_seed;
    SearchResult result = random_search(space, train, cfg.inner_folds, cfg.roster, cfg.jobs);
    if (objective_out) *objective_out = result.best.objective_value;
    CobraParams best = result.best.params;
    if (search_out) *search_out = std::move(result);
    return best;
}

ordered_json params_json(const CobraParams& p) {
    ordered_json j;
    j["epsilon"] = p.epsilon;
    j["alpha"] = p.alpha;
    j["l_fraction"] = p.l_fraction;
    return j;
}

ordered_json run_header(const std::string& command, const ExperimentConfig& cfg, const LoadedData& loaded) {
    ordered_json j;
    j["command"] = command;
    j["dataset"] = cfg.name;
    j["records"] = loaded.data.size();
    j["events"] = loaded.data.event_count();
    j["features"] = loaded.data.feature_names();
    j["seed"] = cfg.seed;
    j["jobs"] = cfg.jobs;
    ordered_json roster = ordered_json::array();
    for (const auto& spec : cfg.roster) roster.push_back(spec.label());
    j["roster"] = roster;
    ordered_json entries = ordered_json::object();
    for (const auto& [k, v] : cfg.entries) entries[k] = v;
    j["config"] = entries;
    j["warnings"] = loaded.warnings;
    return j;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (const double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

OutputFiles relevance_outputs(const std::string& command, const ExperimentConfig& cfg, const LoadedData& loaded,
                              const RelevanceRun& run) {
    const auto& names = loaded.data.feature_names();
    const auto& rel = run.relevance;
    OutputFiles files;

    std::ostringstream table;
    table << "covariate,aggregate_score,rank\n";
    for (std::size_t j = 0; j < names.size(); ++j)
        table << names[j] << ',' << format_number(rel.aggregate[static_cast<Index>(j)]) << ','
              << rel.rank_of(static_cast<Index>(j)) << '\n';
    files["relevance.csv"] = table.str();

    std::ostringstream per_query;
    per_query << "query,degenerate,intercept";
    for (const auto& n : names) per_query << ',' << n;
    per_query << '\n';
    for (Index q = 0; q < rel.per_query.rows(); ++q) {
        per_query << q << ',' << (rel.degenerate[static_cast<std::size_t>(q)] ? 1 : 0);
        for (Index c = 0; c < rel.per_query.cols(); ++c) per_query << ',' << format_number(rel.per_query(q, c));
        per_query << '\n';
    }
    files["relevance_per_query.csv"] = per_query.str();

    std::ostringstream curves;
    curves << "query,time,survival\n";
    for (std::size_t q = 0; q < run.query_curves.size(); ++q) {
        const auto& c = run.query_curves[q];
        curves << q << ",0,1\n";
        for (Index i = 0; i < c.size(); ++i)
            curves << q << ',' << format_number(c.times()[i]) << ',' << format_number(c.values()[i]) << '\n';
    }
    files["curves.csv"] = curves.str();

    ordered_json j = run_header(command, cfg, loaded);
    j["params"] = params_json(run.params);
    if (run.search) {
        j["search"] = {{"objective", to_string(cfg.search->objective)},
                       {"trials", cfg.search->trials},
                       {"inner_folds", cfg.inner_folds},
                       {"best_trial", run.search->best.trial},
                       {"best_objective", run.search->best.objective_value}};
    }
    j["queries"] = rel.query_count;
    j["non_degenerate_queries"] = rel.used_queries;
    ordered_json ranking = ordered_json::array();
    for (const Index r : rel.ranking) ranking.push_back(names[static_cast<std::size_t>(r)]);
    j["ranking"] = ranking;
    files["run.json"] = dump(j);
    return files;
}

}  // namespace

void write_outputs(const std::filesystem::path& dir, const OutputFiles& files) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory '" + dir.string() + "': " + ec.message());
    for (const auto& [name, contents] : files) {
        std::ofstream out(dir / name, std::ios::binary);
        out << contents;
        if (!out) throw DataError("cannot write '" + (dir / name).string() + "'");
    }
}

LoadedData load_dataset(const ExperimentConfig& cfg) {
    if (cfg.is_synthetic()) {
        SyntheticConfig s = cfg.synthetic;
        s.seed = derive_seed(cfg.seed, kDataStream, 0);
        return {generate_synthetic(s), {}};
    }
    auto pre = preprocess(read_csv_table(cfg.data), cfg.schema);
    return {std::move(pre.data), std::move(pre.warnings)};
}

BenchResult bench(const SurvivalDataset& data, const ExperimentConfig& cfg) {
    const auto folds = kfold_indices(data.size(), cfg.folds, derive_seed(cfg.seed, kOuterFoldStream, 0));
    BenchResult result;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        const SurvivalDataset train = data.subset(complement_rows(folds[f], data.size()));
        const SurvivalDataset test = data.subset(folds[f]);
        const auto fold_id = static_cast<Index>(f);

        std::vector<FoldRow> rows(cfg.roster.size());
        parallel_for(static_cast<Index>(cfg.roster.size()), cfg.jobs, [&](Index m) {
            LearnerSpec spec = cfg.roster[static_cast<std::size_t>(m)];
            spec.seed = derive_seed(cfg.seed, kLearnerStream + static_cast<std::uint64_t>(m), f);
            const FittedLearner learner = fit(spec, train);
            std::vector<StepCurve> curves;
            curves.reserve(static_cast<std::size_t>(test.size()));
            for (Index i = 0; i < test.size(); ++i)
                curves.push_back(learner.predict_curve(test.covariates().row(i).transpose()));
            rows[static_cast<std::size_t>(m)] = {spec.label(), evaluate_fold(curves, test, fold_id)};
        });
        for (auto& r : rows) result.rows.push_back(std::move(r));

        double objective = 0.0;
        const CobraParams params = choose_params(train, cfg, derive_seed(cfg.seed, kSearchStream, f), nullptr, &objective);
        const CobraModel model = fit_cobra(train, params, derive_seed(cfg.seed, kCobraStream, f));
        const auto curves = predict_cobra_batch(model, test.covariates(), cfg.jobs);
        result.rows.push_back({kProposed, evaluate_fold(curves, test, fold_id)});
        result.fold_params.push_back(params);
        result.fold_objectives.push_back(objective);
    }
    return result;
}

RelevanceRun relevance_experiment(const SurvivalDataset& data, const ExperimentConfig& cfg) {
    if (cfg.queries >= data.size())
        throw DataError("queries (" + std::to_string(cfg.queries) + ") must be fewer than the " +
                        std::to_string(data.size()) + " records");
    std::vector<Index> order(static_cast<std::size_t>(data.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::mt19937_64 rng(derive_seed(cfg.seed, kQueryStream, 0));
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Index> query_rows(order.begin(), order.begin() + cfg.queries);
    std::sort(query_rows.begin(), query_rows.end());
    const auto train_rows = complement_rows(query_rows, data.size());

    RelevanceRun run{CobraParams{}, std::nullopt, data.subset(query_rows), RelevanceResult{}, {}};
    const SurvivalDataset train = data.subset(train_rows);
    run.params = choose_params(train, cfg, derive_seed(cfg.seed, kSearchStream, 0), &run.search, nullptr);
    const CobraModel model = fit_cobra(train, run.params, derive_seed(cfg.seed, kCobraStream, 0));
    run.relevance = relevance_study(model, run.queries.covariates(), kDefaultRelevanceL2, cfg.jobs);
    run.query_curves = predict_cobra_batch(model, run.queries.covariates(), cfg.jobs);
    return run;
}

OutputFiles run_bench(const ExperimentConfig& cfg) {
    cfg.validate();
    const LoadedData loaded = load_dataset(cfg);
    const BenchResult result = bench(loaded.data, cfg);

    std::vector<std::string> models;
    for (const auto& spec : cfg.roster) models.push_back(spec.label());
    models.push_back(kProposed);

    OutputFiles files;
    std::ostringstream fold_csv;
    fold_csv << "dataset,model,fold,concordance,ibs,dcal_pass,dcal_pvalue\n";
    for (const auto& row : result.rows) {
        const auto& r = row.report;
        fold_csv << cfg.name << ',' << row.model << ',' << r.fold_id << ',' << format_number(r.concordance) << ','
                 << format_number(r.ibs) << ',' << (r.dcal_pass ? 1 : 0) << ',' << format_number(r.dcal_pvalue)
                 << '\n';
    }
    files["fold_metrics.csv"] = fold_csv.str();

    std::ostringstream conc, ibs, dcal;
    conc << "dataset,model,mean,sd,folds\n";
    ibs << "dataset,model,mean,sd,folds\n";
    dcal << "dataset,model,passed,folds\n";
    for (const auto& model : models) {
        std::vector<double> c, b;
        int passed = 0;
        for (const auto& row : result.rows) {
            if (row.model != model) continue;
            c.push_back(row.report.concordance);
            b.push_back(row.report.ibs);
            passed += row.report.dcal_pass ? 1 : 0;
        }
        conc << cfg.name << ',' << model << ',' << format_number(mean_of(c)) << ',' << format_number(sd_of(c)) << ','
             << c.size() << '\n';
        ibs << cfg.name << ',' << model << ',' << format_number(mean_of(b)) << ',' << format_number(sd_of(b)) << ','
            << b.size() << '\n';
        dcal << cfg.name << ',' << model << ',' << passed << ',' << c.size() << '\n';
    }
    files["concordance.csv"] = conc.str();
    files["ibs.csv"] = ibs.str();
    files["dcalibration.csv"] = dcal.str();

    ordered_json j = run_header("bench", cfg, loaded);
    j["folds"] = cfg.folds;
    ordered_json per_fold = ordered_json::array();
    for (std::size_t f = 0; f < result.fold_params.size(); ++f) {
        ordered_json p = params_json(result.fold_params[f]);
        p["fold"] = f;
        if (!std::isnan(result.fold_objectives[f])) p["inner_objective"] = result.fold_objectives[f];
        per_fold.push_back(p);
    }
    j["cobra_params"] = per_fold;
    files["run.json"] = dump(j);
    return files;
}

OutputFiles run_relevance(const ExperimentConfig& cfg) {
    cfg.validate();
    const LoadedData loaded = load_dataset(cfg);
    return relevance_outputs("relevance", cfg, loaded, relevance_experiment(loaded.data, cfg));
}

OutputFiles run_simulate(const ExperimentConfig& cfg) {
    if (!cfg.is_synthetic()) throw DataError("simulate generates its own data; set data = synthetic");
    cfg.validate();
    const LoadedData loaded = load_dataset(cfg);
    return relevance_outputs("simulate", cfg, loaded, relevance_experiment(loaded.data, cfg));
}

OutputFiles run_tune(const ExperimentConfig& cfg) {
    cfg.validate();
    if (!cfg.search) throw DataError("tune needs search.* settings instead of fixed epsilon/alpha/l_fraction");
    const LoadedData loaded = load_dataset(cfg);
    std::optional<SearchResult> search;
    choose_params(loaded.data, cfg, derive_seed(cfg.seed, kSearchStream, 0), &search, nullptr);

    OutputFiles files;
    std::ostringstream trace;
    write_trace_csv(trace, search->trace);
    files["trace.csv"] = trace.str();

    ordered_json best = params_json(search->best.params);
    best["trial"] = search->best.trial;
    best["objective"] = to_string(cfg.search->objective);
    best["objective_value"] = search->best.objective_value;
    files["best_params.json"] = dump(best);

    ordered_json j = run_header("tune", cfg, loaded);
    j["trials"] = cfg.search->trials;
    j["inner_folds"] = cfg.inner_folds;
    j["failed_trials"] = std::count_if(search->trace.begin(), search->trace.end(),
                                       [](const TrialResult& r) { return r.failed; });
    files["run.json"] = dump(j);
    return files;
}

}  // namespace cobrasurv
