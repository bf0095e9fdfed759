#pragma once

#include <string>
#include <vector>

#include "kancast/data.hpp"

namespace kancast {

// HAR regression V_t = c + b1*V_{t-1} + b2*V_w + b3*V_m (+ b4*V_q).
// HAR(3) keeps b4 structurally zero.
struct HarModel {
    double c = 0.0;
    double b1 = 0.0;
    double b2 = 0.0;
    double b3 = 0.0;
    double b4 = 0.0;
    bool include_quarterly = false;

    double predict(const std::vector<double>& d3_row) const;
    int param_count() const { return include_quarterly ? 5 : 4; }
};

// OLS on Dataset-3 features.
HarModel fit_har(const FeatureMatrix& fm, bool include_quarterly);

struct ArimaOrder {
    int p = 0;
    int d = 0;
    int q = 0;

    std::string name() const; // "ARMA(1,1)" or "ARIMA(1,1,1)"
};

struct ArimaModel {
    ArimaOrder order;
    double intercept = 0.0; // only when d == 0; differenced models carry no constant
    std::vector<double> ar;
    std::vector<double> ma;
    double sigma2 = 0.0;
    double loglik = 0.0;

    int param_count() const { return order.p + order.q + (order.d == 0 ? 1 : 0) + 1; }
};

// Conditional-sum-of-squares fit (pre-sample innovations zero) with
// stationarity and invertibility enforced through a partial-autocorrelation
// reparameterization. `series` is in levels; differencing happens inside.
ArimaModel fit_arma(const std::vector<double>& series, const ArimaOrder& order);

struct KpssResult {
    double statistic = 0.0;
    bool reject_at_5pct = false; // statistic > 0.463
};

// Level-stationarity KPSS with Bartlett-kernel long-run variance,
// bandwidth floor(4 * (n/100)^0.25).
KpssResult kpss_statistic(const std::vector<double>& series);

struct OrderSelection {
    ArimaOrder order;
    double aic = 0.0;
    std::vector<std::string> skipped_cells; // grid cells that failed to fit
};

// d = smallest in {0,1,2} passing KPSS at 5%, then exhaustive AIC search
// over p, q in {0..5}.
OrderSelection select_order(const std::vector<double>& train_series);

// One-step-ahead persistence forecast over [test_begin, test_end).
std::vector<double> forward_fill_forecast(const std::vector<double>& series,
                                          size_t test_begin, size_t test_end);

// One-step-ahead ARIMA forecasts over [test_begin, test_end) using realized
// past values, un-differenced back to levels. No refitting.
std::vector<double> arima_rolling_forecast(const ArimaModel& model,
                                           const std::vector<double>& series,
                                           size_t test_begin, size_t test_end);

// HAR one-step forecasts: the model evaluated on realized Dataset-3 rows.
std::vector<double> har_rolling_forecast(const HarModel& model, const FeatureMatrix& fm);

} // namespace kancast
