#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kancast/benchmarks.hpp"
#include "kancast/data.hpp"
#include "kancast/leverage.hpp"
#include "kancast/metrics.hpp"
#include "kancast/symbolic.hpp"
#include "kancast/train.hpp"

namespace kancast {

inline constexpr const char* kVersion = "0.1.0";

// Experiment settings, loaded from a JSON config file; CLI flags override
// individual keys before the run starts.
struct ExperimentConfig {
    std::string vix_csv;
    std::string sp500_csv;
    std::string rf_csv;
    std::string date_column = "date";
    std::string vix_value_column = "close";
    std::string sp500_value_column = "close";
    std::string rf_value_column = "annualized_percent";

    std::vector<std::string> datasets = {"d1", "d2", "d3"};
    std::vector<int> periods = {1, 2, 3};
    // Optional calendar boundaries per period; ratio split otherwise.
    std::map<int, std::pair<Date, Date>> period_boundaries;

    std::vector<int> hidden = {2}; // network shape = [n_in, hidden..., 1]
    int grid_size = 3;
    int order = 3;
    TrainConfig train;
    FinetuneConfig finetune;
    double prune_threshold = 0.01;

    SyntheticOuConfig ou;
    std::string out_dir = "out";
    int threads = 1;

    nlohmann::ordered_json raw; // canonical form used for the config hash

    std::string hash() const; // FNV-1a 64 over the canonical dump
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json(const nlohmann::ordered_json& j);

// Per-date forecast record written to the forecast CSVs.
struct ForecastRecord {
    Date date;
    double actual = 0.0;
    double forecast = 0.0;
};

struct TrainCellResult {
    nlohmann::ordered_json report;
    std::vector<ForecastRecord> test_forecasts; // post-symbolification
};

// Full Algorithm-1 pipeline for one (dataset, period) cell: features, split,
// train, prune, symbolify, fine-tune, collapse, metrics and tests.
TrainCellResult run_train_cell(const ExperimentConfig& config, const TimeSeries& vix,
                               const std::string& dataset, int period);

// Classical baselines for one period: forward filling, HAR(3), HAR(4),
// ARMA (AIC grid at d=0) and ARIMA (AIC grid at the KPSS-selected d).
nlohmann::ordered_json run_benchmark_period(const ExperimentConfig& config,
                                            const TimeSeries& vix, int period);

nlohmann::ordered_json run_leverage_cell(const ExperimentConfig& config,
                                         const std::vector<ForecastRecord>& base,
                                         const TimeSeries& excess_returns,
                                         const std::string& dataset, int period);

// Subcommand entry points; these write report files under out_dir.
int cmd_train(const ExperimentConfig& config);
int cmd_benchmark(const ExperimentConfig& config);
int cmd_leverage(const ExperimentConfig& config);
int cmd_simulate(const ExperimentConfig& config);
int cmd_report(const std::string& report_path); // pretty-print a report

// Maps library errors to the CLI exit-code contract:
// 1 config, 2 data, 3 numerical.
int exit_code_for(const Error& e);

std::vector<ForecastRecord> read_forecast_csv(const std::string& path);
void write_forecast_csv(const std::vector<ForecastRecord>& records,
                        const std::string& path);

} // namespace kancast
