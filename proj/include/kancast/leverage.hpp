#pragma once

#include <cstdint>
#include <vector>

#include "kancast/data.hpp"
#include "kancast/metrics.hpp"
#include "kancast/symbolic.hpp"
#include "kancast/train.hpp"

namespace kancast {

// Rows of (base forecast V_hat_t, lagged excess return R^e_{t-1}) against
// the realized V_t, inner-joined on date.
struct LeverageDataset {
    FeatureMatrix data; // features: {"V̂_t", "R^e_{t-1}"}
    size_t dropped_rows = 0;
};

// Inner join on date of base forecasts (dated at t) with the already-lagged
// excess-return series (value at date t is R^e_{t-1}); rows lacking a return
// are dropped and counted.
LeverageDataset build_leverage_dataset(const std::vector<Date>& forecast_dates,
                                       const std::vector<double>& forecasts,
                                       const TimeSeries& lagged_excess_returns,
                                       const std::vector<double>& actuals);

// Shifts a return series one step forward: the output value at date t_{i+1}
// is the input value at date t_i.
TimeSeries lag_one_step(const TimeSeries& series);

struct LeverageFit {
    KanNetwork spline_model;
    SymbolicNetwork symbolic;
    ClosedForm closed_form;
    MetricsReport metrics;       // of the symbolified augmented forecast
    double base_r2 = 0.0;        // R^2 of V_hat alone on the same rows
    double r2_improvement = 0.0; // metrics.r2 - base_r2
    bool non_linear_fit_warning = false; // spline-vs-affine fit R^2 < 0.9
};

struct LeverageConfig {
    TrainConfig train;
    FinetuneConfig finetune;
    double prune_threshold = 0.0; // augmentation keeps both edges by default
};

// One-layer KAN over (V_hat, R^e) trained and symbolified over {x, -x, 0},
// collapsed to a*V_hat + b*R^e + c. Trained in-sample on the supplied pairs,
// mirroring how the augmentation is evaluated.
LeverageFit fit_leverage(const LeverageDataset& ds, const LeverageConfig& config);

} // namespace kancast
