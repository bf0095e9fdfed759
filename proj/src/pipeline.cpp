#include "kancast/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

namespace kancast {

namespace {

using json = nlohmann::ordered_json;

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

json metrics_json(const MetricsReport& m) {
    return {{"mse", m.mse},   {"mae", m.mae},     {"mape", m.mape},
            {"r2", m.r2},     {"qlike", m.qlike}, {"n_test", m.n_test}};
}

MetricsReport metrics_of(const std::vector<double>& actual,
                         const std::vector<double>& forecast) {
    return compute_metrics(actual, forecast);
}

SplitSpec split_spec_for(const ExperimentConfig& config, int period) {
    SplitSpec spec = SplitSpec::from_period(period);
    const auto it = config.period_boundaries.find(period);
    if (it != config.period_boundaries.end()) {
        spec.train_end = it->second.first;
        spec.valid_end = it->second.second;
    }
    return spec;
}

std::string cell_tag(const std::string& dataset, int period) {
    return dataset + "_p" + std::to_string(period);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream file(path);
    if (!file) throw FileNotFound("cannot write '" + path + "'");
    file << content;
}

void write_activation_samples(const KanNetwork& net, const FeatureMatrix& train,
                              const std::string& path) {
    ForwardTrace trace;
    net.forward_batch(train.rows, trace);
    std::ostringstream out;
    out.precision(17);
    out << "layer,q,p,x,phi\n";
    for (size_t l = 0; l < net.layers().size(); ++l) {
        const auto& layer = net.layers()[l];
        for (int q = 0; q < layer.n_in; ++q)
            for (int p = 0; p < layer.n_out; ++p) {
                const size_t idx = static_cast<size_t>(q) * layer.n_out + p;
                if (!layer.edges[idx].active) continue;
                for (size_t s = 0; s < train.size(); ++s)
                    out << l << ',' << q << ',' << p << ','
                        << trace.node_inputs[l][s][static_cast<size_t>(q)] << ','
                        << trace.activations[l][s][idx] << '\n';
            }
    }
    write_text_file(path, out.str());
}

} // namespace

std::string ExperimentConfig::hash() const { return hex64(fnv1a64(raw.dump())); }

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig config;
    config.raw = j;

    auto get = [&](const json& node, const char* key, auto& out) {
        if (node.contains(key)) node.at(key).get_to(out);
    };

    if (j.contains("data")) {
        const auto& d = j.at("data");
        get(d, "vix_csv", config.vix_csv);
        get(d, "sp500_csv", config.sp500_csv);
        get(d, "rf_csv", config.rf_csv);
        get(d, "date_column", config.date_column);
        get(d, "vix_value_column", config.vix_value_column);
        get(d, "sp500_value_column", config.sp500_value_column);
        get(d, "rf_value_column", config.rf_value_column);
    }
    get(j, "datasets", config.datasets);
    get(j, "periods", config.periods);
    if (j.contains("period_boundaries"))
        for (const auto& [key, value] : j.at("period_boundaries").items())
            config.period_boundaries[std::stoi(key)] = {
                Date::parse(value.at("train_end").get<std::string>()),
                Date::parse(value.at("valid_end").get<std::string>())};

    get(j, "hidden", config.hidden);
    get(j, "grid_size", config.grid_size);
    get(j, "order", config.order);
    get(j, "prune_threshold", config.prune_threshold);
    get(j, "out_dir", config.out_dir);
    get(j, "threads", config.threads);

    if (j.contains("train")) {
        const auto& t = j.at("train");
        get(t, "learning_rate", config.train.learning_rate);
        get(t, "decay_factor", config.train.decay_factor);
        get(t, "patience_decay", config.train.patience_decay);
        get(t, "patience_stop", config.train.patience_stop);
        get(t, "lbfgs_history", config.train.lbfgs_history);
        get(t, "max_epochs", config.train.max_epochs);
        get(t, "iterations_per_epoch", config.train.iterations_per_epoch);
        get(t, "lambda", config.train.lambda);
        get(t, "mu1", config.train.mu1);
        get(t, "mu2", config.train.mu2);
        get(t, "seed", config.train.seed);
    }
    if (j.contains("finetune")) {
        const auto& f = j.at("finetune");
        get(f, "epochs", config.finetune.epochs);
        get(f, "learning_rate", config.finetune.learning_rate);
        get(f, "iterations_per_epoch", config.finetune.iterations_per_epoch);
    }
    if (j.contains("synthetic")) {
        const auto& s = j.at("synthetic");
        get(s, "kappa", config.ou.kappa);
        get(s, "theta", config.ou.theta);
        get(s, "noise_scale", config.ou.noise_scale);
        get(s, "n", config.ou.n);
        get(s, "seed", config.ou.seed);
        get(s, "v0", config.ou.v0);
    }
    config.train.validate();
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw FileNotFound("config file '" + path + "' does not exist");
    json j;
    try {
        file >> j;
    } catch (const std::exception& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

TrainCellResult run_train_cell(const ExperimentConfig& config, const TimeSeries& vix,
                               const std::string& dataset, int period) {
    const DatasetSpec spec = DatasetSpec::from_name(dataset);
    const FeatureMatrix fm = build_features(vix, spec);
    const Split parts = split(fm, split_spec_for(config, period));

    std::vector<int> shape;
    shape.push_back(fm.feature_count());
    shape.insert(shape.end(), config.hidden.begin(), config.hidden.end());
    shape.push_back(1);

    GridSpec grid;
    grid.grid_size = config.grid_size;
    grid.order = config.order;
    KanNetwork net = KanNetwork::make(shape, grid, config.train.seed);
    net.calibrate_grids(parts.train.rows);

    TrainResult trained = fit(std::move(net), parts.train, parts.valid, config.train);

    // Pre-symbolification test forecasts.
    ForwardTrace trace;
    const auto pre_forecasts = trained.net.forward_batch(parts.test.rows, trace);
    const MetricsReport pre_metrics = metrics_of(parts.test.targets, pre_forecasts);

    const ImportanceReport importance = score(trained.net, parts.train);
    const KanNetwork pruned = prune(trained.net, importance, config.prune_threshold);

    SymbolicNetwork snet = symbolify(pruned, parts.train, vix_candidates());
    snet = finetune_affine(snet, parts.train, parts.valid, config.finetune);

    const auto post_forecasts = snet.forward_batch(parts.test.rows);
    const MetricsReport post_metrics = metrics_of(parts.test.targets, post_forecasts);

    ClosedForm cf = collapse(snet);
    cf.input_names = fm.feature_names;

    const MzResult mz = mincer_zarnowitz(parts.test.targets, post_forecasts);
    std::vector<double> residuals(parts.test.size());
    for (size_t i = 0; i < residuals.size(); ++i)
        residuals[i] = parts.test.targets[i] - post_forecasts[i];
    const DwResult dw = durbin_watson(residuals);

    json report;
    report["config"] = {{"hash", config.hash()},
                        {"version", kVersion},
                        {"dataset", dataset},
                        {"period", period},
                        {"shape", shape},
                        {"seed", config.train.seed}};
    {
        const char* reason =
            trained.stop_reason == StopReason::EarlyStopped ? "early_stopped" : "max_epochs";
        report["training"] = {{"epochs", trained.epochs},
                              {"stop_reason", reason},
                              {"best_valid_loss", trained.best_valid_loss},
                              {"train_loss_history", trained.train_loss_history},
                              {"valid_loss_history", trained.valid_loss_history}};
    }
    {
        json pruning;
        pruning["threshold"] = config.prune_threshold;
        pruning["edge_importance"] = importance.edge_importance;
        pruning["node_importance"] = importance.node_importance;
        int active = 0, total = 0;
        for (const auto& layer : pruned.layers())
            for (const auto& e : layer.edges) {
                ++total;
                if (e.active) ++active;
            }
        pruning["active_edges"] = active;
        pruning["total_edges"] = total;
        report["pruning"] = std::move(pruning);
    }
    report["symbolic"] = snet.to_json();
    report["closed_form"] = {{"inputs", cf.input_names},
                             {"coefficients", cf.coefficients},
                             {"intercept", cf.intercept},
                             {"formula", cf.render("V̂_t", 6)},
                             {"formula_full", cf.render("V̂_t", 17)}};
    report["metrics"] = {{"pre_symbolification", metrics_json(pre_metrics)},
                         {"post_symbolification", metrics_json(post_metrics)}};
    report["statistics"] = {{"mincer_zarnowitz",
                             {{"alpha", mz.alpha_hat},
                              {"beta", mz.beta_hat},
                              {"f_statistic", mz.f_statistic},
                              {"p_value", mz.p_value},
                              {"n", mz.n}}},
                            {"durbin_watson", dw.statistic}};
    report["parameters"] = {{"unpruned", trained.net.param_count_unpruned()},
                            {"post_pruning", pruned.param_count()}};

    if (spec.kind == DatasetSpec::Kind::D3) {
        try {
            const MeanReversionReport mr = mean_reversion_report(cf, parts.train);
            report["mean_reversion"] = {{"kappa", mr.kappa},
                                        {"residual_mean", mr.residual_mean},
                                        {"training_vix_mean", mr.vix_mean}};
        } catch (const MissingFeature&) {
            report["mean_reversion"] = nullptr;
        }
    }

    TrainCellResult result;
    result.report = std::move(report);
    result.test_forecasts.reserve(parts.test.size());
    for (size_t i = 0; i < parts.test.size(); ++i)
        result.test_forecasts.push_back(
            {parts.test.dates[i], parts.test.targets[i], post_forecasts[i]});

    // Exported for plotting the learned activations.
    std::filesystem::create_directories(config.out_dir);
    write_activation_samples(trained.net, parts.train,
                             config.out_dir + "/activations_" + cell_tag(dataset, period) +
                                 ".csv");
    return result;
}

nlohmann::ordered_json run_benchmark_period(const ExperimentConfig& config,
                                            const TimeSeries& vix, int period) {
    const DatasetSpec d3{DatasetSpec::Kind::D3, {}};
    const FeatureMatrix fm = build_features(vix, d3);
    const Split parts = split(fm, split_spec_for(config, period));
    if (parts.test.size() == 0) throw EmptySegment("empty test segment");

    // Map feature rows back to level-series indices: row i targets series
    // index lookback + i.
    const size_t lookback = static_cast<size_t>(d3.max_lookback());
    const size_t test_begin = lookback + parts.train.size() + parts.valid.size();
    const size_t test_end = test_begin + parts.test.size();
    const std::vector<double> train_levels(vix.values.begin(),
                                           vix.values.begin() +
                                               static_cast<long>(test_begin));

    json rows = json::array();
    auto add_row = [&](const std::string& model, const json& detail,
                       const std::vector<double>& forecasts, json param_count) {
        const MetricsReport m = metrics_of(parts.test.targets, forecasts);
        json row = {{"model", model}, {"detail", detail}};
        row.update(metrics_json(m));
        row["param_count"] = param_count;
        rows.push_back(std::move(row));
    };

    add_row("forward_filling", json::object(),
            forward_fill_forecast(vix.values, test_begin, test_end), nullptr);

    // HAR models fit on everything before the test segment.
    FeatureMatrix in_sample = parts.train;
    in_sample.rows.insert(in_sample.rows.end(), parts.valid.rows.begin(),
                          parts.valid.rows.end());
    in_sample.targets.insert(in_sample.targets.end(), parts.valid.targets.begin(),
                             parts.valid.targets.end());
    in_sample.dates.insert(in_sample.dates.end(), parts.valid.dates.begin(),
                           parts.valid.dates.end());
    for (bool quarterly : {false, true}) {
        const HarModel har = fit_har(in_sample, quarterly);
        add_row(quarterly ? "HAR(4)" : "HAR(3)",
                {{"c", har.c}, {"b1", har.b1}, {"b2", har.b2}, {"b3", har.b3},
                 {"b4", har.b4}},
                har_rolling_forecast(har, parts.test), har.param_count());
    }

    // ARMA: AIC grid at d = 0. ARIMA: d from the KPSS rule.
    const OrderSelection arima_sel = select_order(train_levels);
    std::vector<ArimaOrder> orders;
    {
        OrderSelection arma_sel;
        if (arima_sel.order.d == 0) {
            arma_sel = arima_sel;
        } else {
            double best_aic = std::numeric_limits<double>::infinity();
            for (int p = 0; p <= 5; ++p)
                for (int q = 0; q <= 5; ++q) {
                    try {
                        const auto m = fit_arma(train_levels, ArimaOrder{p, 0, q});
                        const double aic = 2.0 * (p + q + 2) - 2.0 * m.loglik;
                        if (aic < best_aic) {
                            best_aic = aic;
                            arma_sel.order = ArimaOrder{p, 0, q};
                            arma_sel.aic = aic;
                        }
                    } catch (const Error&) {
                    }
                }
        }
        orders.push_back(arma_sel.order);
        if (arima_sel.order.d != 0) orders.push_back(arima_sel.order);
    }
    for (const auto& order : orders) {
        const ArimaModel model = fit_arma(train_levels, order);
        add_row(order.name(),
                {{"intercept", model.intercept},
                 {"ar", model.ar},
                 {"ma", model.ma},
                 {"sigma2", model.sigma2},
                 {"aic", 2.0 * (order.p + order.q + 2) - 2.0 * model.loglik}},
                arima_rolling_forecast(model, vix.values, test_begin, test_end),
                model.param_count());
    }

    json report;
    report["config"] = {{"hash", config.hash()}, {"version", kVersion}, {"period", period}};
    report["benchmarks"] = std::move(rows);
    report["kpss_selected_d"] = arima_sel.order.d;
    return report;
}

nlohmann::ordered_json run_leverage_cell(const ExperimentConfig& config,
                                         const std::vector<ForecastRecord>& base,
                                         const TimeSeries& excess_rets,
                                         const std::string& dataset, int period) {
    std::vector<Date> dates;
    std::vector<double> forecasts, actuals;
    for (const auto& r : base) {
        dates.push_back(r.date);
        forecasts.push_back(r.forecast);
        actuals.push_back(r.actual);
    }
    const LeverageDataset ds =
        build_leverage_dataset(dates, forecasts, lag_one_step(excess_rets), actuals);

    LeverageConfig lconfig;
    lconfig.train = config.train;
    lconfig.finetune = config.finetune;
    const LeverageFit lfit = fit_leverage(ds, lconfig);

    json report;
    report["config"] = {{"hash", config.hash()},
                        {"version", kVersion},
                        {"dataset", dataset},
                        {"period", period}};
    report["leverage"] = {
        {"rows", ds.data.size()},
        {"dropped_rows", ds.dropped_rows},
        {"formula", lfit.closed_form.render("Ṽ_t", 6)},
        {"formula_full", lfit.closed_form.render("Ṽ_t", 17)},
        {"coefficients", lfit.closed_form.coefficients},
        {"intercept", lfit.closed_form.intercept},
        {"base_r2", lfit.base_r2},
        {"augmented_r2", lfit.metrics.r2},
        {"r2_improvement", lfit.r2_improvement},
        {"non_linear_fit_warning", lfit.non_linear_fit_warning},
        {"metrics", metrics_json(lfit.metrics)}};
    return report;
}

void write_forecast_csv(const std::vector<ForecastRecord>& records,
                        const std::string& path) {
    std::ostringstream out;
    out.precision(17);
    out << "date,actual,forecast,residual\n";
    for (const auto& r : records)
        out << r.date.to_string() << ',' << r.actual << ',' << r.forecast << ','
            << r.actual - r.forecast << '\n';
    write_text_file(path, out.str());
}

std::vector<ForecastRecord> read_forecast_csv(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw MissingBaseReport("forecast file '" + path + "' does not exist");
    std::string line;
    std::getline(file, line); // header
    std::vector<ForecastRecord> records;
    while (std::getline(file, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string date, actual, forecast;
        std::getline(ss, date, ',');
        std::getline(ss, actual, ',');
        std::getline(ss, forecast, ',');
        records.push_back({Date::parse(date), std::stod(actual), std::stod(forecast)});
    }
    return records;
}

int cmd_train(const ExperimentConfig& config) {
    const TimeSeries vix =
        load_csv(config.vix_csv, config.date_column, config.vix_value_column);
    std::filesystem::create_directories(config.out_dir);

    struct Cell {
        std::string dataset;
        int period;
    };
    std::vector<Cell> cells;
    for (const auto& dataset : config.datasets)
        for (int period : config.periods) cells.push_back({dataset, period});

    auto run_cell = [&](const Cell& cell) {
        const TrainCellResult result = run_train_cell(config, vix, cell.dataset, cell.period);
        const std::string tag = cell_tag(cell.dataset, cell.period);
        write_text_file(config.out_dir + "/report_" + tag + ".json",
                        result.report.dump(2) + "\n");
        write_forecast_csv(result.test_forecasts,
                           config.out_dir + "/forecast_" + tag + ".csv");
    };

    if (config.threads > 1) {
        std::vector<std::future<void>> futures;
        size_t next = 0;
        while (next < cells.size()) {
            futures.clear();
            for (int t = 0; t < config.threads && next < cells.size(); ++t, ++next)
                futures.push_back(std::async(std::launch::async, run_cell, cells[next]));
            for (auto& f : futures) f.get();
        }
    } else {
        for (const auto& cell : cells) run_cell(cell);
    }
    return 0;
}

int cmd_benchmark(const ExperimentConfig& config) {
    const TimeSeries vix =
        load_csv(config.vix_csv, config.date_column, config.vix_value_column);
    std::filesystem::create_directories(config.out_dir);
    for (int period : config.periods) {
        const json report = run_benchmark_period(config, vix, period);
        write_text_file(config.out_dir + "/benchmark_p" + std::to_string(period) + ".json",
                        report.dump(2) + "\n");
        // Table-shaped CSV next to the JSON.
        std::ostringstream csv;
        csv << "model,mse,mae,mape,r2,qlike,param_count\n";
        csv.precision(17);
        for (const auto& row : report.at("benchmarks")) {
            csv << row.at("model").get<std::string>() << ','
                << row.at("mse").get<double>() << ',' << row.at("mae").get<double>() << ','
                << row.at("mape").get<double>() << ',' << row.at("r2").get<double>() << ','
                << row.at("qlike").get<double>() << ',';
            if (row.at("param_count").is_null())
                csv << "-";
            else
                csv << row.at("param_count").get<int>();
            csv << '\n';
        }
        write_text_file(config.out_dir + "/benchmark_p" + std::to_string(period) + ".csv",
                        csv.str());
    }
    return 0;
}

int cmd_leverage(const ExperimentConfig& config) {
    const TimeSeries sp500 =
        load_csv(config.sp500_csv, config.date_column, config.sp500_value_column);
    const TimeSeries rf = load_csv(config.rf_csv, config.date_column, config.rf_value_column);
    const TimeSeries rets = excess_returns(sp500, rf);
    std::filesystem::create_directories(config.out_dir);

    for (const auto& dataset : config.datasets)
        for (int period : config.periods) {
            const std::string tag = cell_tag(dataset, period);
            const auto base = read_forecast_csv(config.out_dir + "/forecast_" + tag + ".csv");
            const json report = run_leverage_cell(config, base, rets, dataset, period);
            write_text_file(config.out_dir + "/leverage_" + tag + ".json",
                            report.dump(2) + "\n");
        }
    return 0;
}

int cmd_simulate(const ExperimentConfig& config) {
    std::filesystem::create_directories(config.out_dir);
    const TimeSeries series = simulate_ou(config.ou);
    write_series_csv(series, config.out_dir + "/synthetic_vix.csv",
                     config.vix_value_column.empty() ? "close" : config.vix_value_column);
    return 0;
}

int cmd_report(const std::string& report_path) {
    std::ifstream file(report_path);
    if (!file) throw FileNotFound("report '" + report_path + "' does not exist");
    json j;
    file >> j;

    auto print_kv = [](const std::string& key, const json& value, int indent) {
        std::cout << std::string(static_cast<size_t>(indent), ' ') << key << ": ";
        if (value.is_structured())
            std::cout << value.dump();
        else
            std::cout << value.dump();
        std::cout << '\n';
    };

    for (const auto& [section, value] : j.items()) {
        std::cout << "== " << section << " ==\n";
        if (section == "benchmarks" && value.is_array()) {
            std::cout << "model            mse       mae       mape      r2        qlike\n";
            for (const auto& row : value) {
                char line[256];
                std::snprintf(line, sizeof(line), "%-16s %-9.4f %-9.4f %-9.4f %-9.4f %-9.4f",
                              row.at("model").get<std::string>().c_str(),
                              row.at("mse").get<double>(), row.at("mae").get<double>(),
                              row.at("mape").get<double>(), row.at("r2").get<double>(),
                              row.at("qlike").get<double>());
                std::cout << line << '\n';
            }
        } else if (value.is_object()) {
            for (const auto& [key, inner] : value.items()) print_kv(key, inner, 2);
        } else {
            print_kv(section, value, 2);
        }
        std::cout << '\n';
    }
    return 0;
}

int exit_code_for(const Error& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 1;
    if (dynamic_cast<const NonFiniteObjective*>(&e) ||
        dynamic_cast<const NonConvergence*>(&e) || dynamic_cast<const SingularFit*>(&e) ||
        dynamic_cast<const SingularDesign*>(&e) || dynamic_cast<const AllPruned*>(&e) ||
        dynamic_cast<const ZeroVariance*>(&e) || dynamic_cast<const ZeroNorm*>(&e) ||
        dynamic_cast<const PerfectForecast*>(&e) ||
        dynamic_cast<const DegenerateForecast*>(&e))
        return 3;
    return 2; // data and IO errors
}

} // namespace kancast
