#include "cobrasurv/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Options& opts) {
    cmd->add_option("--config", opts.config, "experiment config file")->required();
    cmd->add_option("--seed", opts.seed, "master seed (overrides the config)");
    cmd->add_option("--jobs", opts.jobs, "worker threads (overrides the config)");
    cmd->add_option("--out", opts.out, "output directory (overrides the config)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"COBRA survival ensemble: benchmarks, simulation study, relevance and tuning"};
    app.require_subcommand(1);
    Options opts;
    auto* bench = app.add_subcommand("bench", "outer k-fold comparison of the learners and the ensemble");
    auto* simulate = app.add_subcommand("simulate", "synthetic simulation study with covariate relevance");
    auto* tune = app.add_subcommand("tune", "random search over epsilon, alpha and l_fraction");
    auto* relevance = app.add_subcommand("relevance", "covariate relevance on the configured dataset");
    for (auto* cmd : {bench, simulate, tune, relevance}) add_common(cmd, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        auto cfg = cobrasurv::load_config(opts.config);
        if (opts.seed) cfg.seed = *opts.seed;
        if (opts.jobs) cfg.jobs = *opts.jobs;
        if (opts.out) cfg.out = *opts.out;

        cobrasurv::OutputFiles files;
        if (bench->parsed()) files = cobrasurv::run_bench(cfg);
        else if (simulate->parsed()) files = cobrasurv::run_simulate(cfg);
        else if (tune->parsed()) files = cobrasurv::run_tune(cfg);
        else files = cobrasurv::run_relevance(cfg);
        cobrasurv::write_outputs(cfg.out, files);
        for (const auto& [name, contents] : files) std::cout << (cfg.out / name).string() << '\n';
        return 0;
    } catch (const cobrasurv::DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
}
