#include "kancast/leverage.hpp"

#include <cmath>
#include <map>

namespace kancast {

TimeSeries lag_one_step(const TimeSeries& series) {
    TimeSeries out;
    for (size_t i = 1; i < series.size(); ++i) {
        out.dates.push_back(series.dates[i]);
        out.values.push_back(series.values[i - 1]);
    }
    return out;
}

LeverageDataset build_leverage_dataset(const std::vector<Date>& forecast_dates,
                                       const std::vector<double>& forecasts,
                                       const TimeSeries& lagged_excess_returns,
                                       const std::vector<double>& actuals) {
    if (forecast_dates.size() != forecasts.size() || forecasts.size() != actuals.size())
        throw ShapeMismatch("forecasts, dates and actuals must align");

    std::map<Date, double> returns;
    for (size_t i = 0; i < lagged_excess_returns.size(); ++i)
        returns[lagged_excess_returns.dates[i]] = lagged_excess_returns.values[i];

    LeverageDataset ds;
    ds.data.feature_names = {"V̂_t", "R^e_{t-1}"};
    for (size_t i = 0; i < forecasts.size(); ++i) {
        const auto it = returns.find(forecast_dates[i]);
        if (it == returns.end()) {
            ++ds.dropped_rows;
            continue;
        }
        ds.data.rows.push_back({forecasts[i], it->second});
        ds.data.targets.push_back(actuals[i]);
        ds.data.dates.push_back(forecast_dates[i]);
    }
    if (ds.data.size() == 0)
        throw EmptyJoin("no common dates between forecasts and excess returns");
    return ds;
}

namespace {

double r2_of(const std::vector<double>& actual, const std::vector<double>& forecast) {
    double mean = 0.0;
    for (double v : actual) mean += v;
    mean /= static_cast<double>(actual.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (size_t i = 0; i < actual.size(); ++i) {
        ss_res += (actual[i] - forecast[i]) * (actual[i] - forecast[i]);
        ss_tot += (actual[i] - mean) * (actual[i] - mean);
    }
    return ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
}

} // namespace

LeverageFit fit_leverage(const LeverageDataset& ds, const LeverageConfig& config) {
    if (ds.data.size() == 0) throw EmptyBatch("empty leverage dataset");

    LeverageFit fit;
    std::vector<double> base_forecasts;
    base_forecasts.reserve(ds.data.size());
    for (const auto& row : ds.data.rows) base_forecasts.push_back(row[0]);
    fit.base_r2 = r2_of(ds.data.targets, base_forecasts);

    // One-layer KAN over (V_hat, R^e); the augmentation is evaluated on the
    // pairs it is trained on, so validation is the training set itself.
    GridSpec grid;
    KanNetwork net = KanNetwork::make({2, 1}, grid, config.train.seed);
    net.calibrate_grids(ds.data.rows);
    TrainResult trained = kancast::fit(std::move(net), ds.data, ds.data, config.train);
    fit.spline_model = std::move(trained.net);

    const auto report = score(fit.spline_model, ds.data);
    KanNetwork pruned = config.prune_threshold > 0.0
                            ? prune(fit.spline_model, report, config.prune_threshold)
                            : fit.spline_model;

    SymbolicNetwork snet = symbolify(pruned, ds.data, leverage_candidates());
    snet = finetune_affine(snet, ds.data, ds.data, config.finetune);

    // Warn when the spline edges were not actually close to affine.
    for (const auto& layer : snet.layers)
        for (const auto& e : layer.edges)
            if (e.active && e.fit_r2 < 0.9) fit.non_linear_fit_warning = true;

    fit.symbolic = snet;
    fit.closed_form = collapse(snet);
    fit.closed_form.input_names = ds.data.feature_names;

    const auto augmented = snet.forward_batch(ds.data.rows);
    fit.metrics = compute_metrics(ds.data.targets, augmented);
    fit.r2_improvement = fit.metrics.r2 - fit.base_r2;
    return fit;
}

} // namespace kancast
