#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kancast/pipeline.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::vector<std::string> datasets;
    std::vector<int> periods;
    std::int64_t seed = -1;
    std::string out_dir;
    int threads = 0;
};

void add_common(CLI::App* sub, CommonFlags& flags, bool needs_config) {
    auto* opt = sub->add_option("-c,--config", flags.config_path, "JSON config file");
    if (needs_config) opt->required();
    sub->add_option("--dataset", flags.datasets, "restrict to these datasets (d1/d2/d3)");
    sub->add_option("--period", flags.periods, "restrict to these periods (1/2/3)");
    sub->add_option("--seed", flags.seed, "override the training seed");
    sub->add_option("--out", flags.out_dir, "override the output directory");
    sub->add_option("--threads", flags.threads, "cells trained in parallel");
}

kancast::ExperimentConfig resolve(const CommonFlags& flags) {
    kancast::ExperimentConfig config = kancast::load_config(flags.config_path);
    if (!flags.datasets.empty()) config.datasets = flags.datasets;
    if (!flags.periods.empty()) config.periods = flags.periods;
    if (flags.seed >= 0) config.train.seed = static_cast<std::uint64_t>(flags.seed);
    if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
    if (flags.threads > 0) config.threads = flags.threads;
    for (const auto& name : config.datasets)
        kancast::DatasetSpec::from_name(name); // validates early, before any work
    for (int p : config.periods)
        if (p < 1 || p > 3) throw kancast::ConfigError("period must be 1, 2 or 3");
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interpretable spline-network VIX forecasting toolkit"};
    app.set_version_flag("--version", std::string("kancast ") + kancast::kVersion);
    app.require_subcommand(1);

    CommonFlags train_flags, bench_flags, lev_flags, sim_flags;
    std::string report_path;

    auto* train = app.add_subcommand("train", "train, prune and symbolify forecasters");
    add_common(train, train_flags, true);
    auto* bench = app.add_subcommand("benchmark", "fit classical baselines");
    add_common(bench, bench_flags, true);
    auto* lev = app.add_subcommand("leverage", "augment forecasts with lagged returns");
    add_common(lev, lev_flags, true);
    auto* sim = app.add_subcommand("simulate", "generate a synthetic mean-reverting series");
    add_common(sim, sim_flags, true);
    auto* rep = app.add_subcommand("report", "pretty-print a JSON report");
    rep->add_option("report_file", report_path, "report JSON to print")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (train->parsed()) return kancast::cmd_train(resolve(train_flags));
        if (bench->parsed()) return kancast::cmd_benchmark(resolve(bench_flags));
        if (lev->parsed()) return kancast::cmd_leverage(resolve(lev_flags));
        if (sim->parsed()) return kancast::cmd_simulate(resolve(sim_flags));
        if (rep->parsed()) return kancast::cmd_report(report_path);
    } catch (const kancast::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kancast::exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
