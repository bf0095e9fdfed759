#pragma once

#include <vector>

#include "kancast/errors.hpp"

namespace kancast {

struct MetricsReport {
    double mse = 0.0;
    double mae = 0.0;
    double mape = 0.0;  // percent
    double r2 = 0.0;
    double qlike = 0.0;
    int n_test = 0;
};

struct MzResult {
    double alpha_hat = 0.0;
    double beta_hat = 0.0;
    double f_statistic = 0.0;
    double p_value = 1.0;
    int n = 0;
};

struct DwResult {
    double statistic = 2.0;
};

// MSE, MAE, MAPE (x100), R^2 against the test-period mean, and
// QLIKE = mean(V/Vhat - ln(V/Vhat) - 1). Actuals must be positive.
MetricsReport compute_metrics(const std::vector<double>& actual,
                              const std::vector<double>& forecast);

// Joint F-test of (alpha, beta) = (0, 1) in actual = alpha + beta*forecast + u,
// nested-RSS form with p-value from F(2, n-2).
MzResult mincer_zarnowitz(const std::vector<double>& actual,
                          const std::vector<double>& forecast);

DwResult durbin_watson(const std::vector<double>& residuals);

// F(d1, d2) CDF via the regularized incomplete beta function
// (continued-fraction evaluation).
double f_cdf(double x, int d1, int d2);

} // namespace kancast
