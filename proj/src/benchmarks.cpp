#include "kancast/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "kancast/lbfgs.hpp"

namespace kancast {

double HarModel::predict(const std::vector<double>& d3_row) const {
    return c + b1 * d3_row[0] + b2 * d3_row[1] + b3 * d3_row[2] +
           (include_quarterly ? b4 * d3_row[3] : 0.0);
}

HarModel fit_har(const FeatureMatrix& fm, bool include_quarterly) {
    const size_t n = fm.size();
    if (n < 5) throw InsufficientHistory("HAR needs at least 5 rows");
    if (fm.feature_count() < 4)
        throw ShapeMismatch("HAR expects Dataset-3 features (V_{t-1}, V_w, V_m, V_q)");

    const int k = include_quarterly ? 5 : 4;
    Eigen::MatrixXd X(static_cast<long>(n), k);
    Eigen::VectorXd y(static_cast<long>(n));
    for (size_t i = 0; i < n; ++i) {
        X(static_cast<long>(i), 0) = 1.0;
        for (int j = 1; j < k; ++j)
            X(static_cast<long>(i), j) = fm.rows[i][static_cast<size_t>(j - 1)];
        y(static_cast<long>(i)) = fm.targets[i];
    }

    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < k) throw SingularDesign("HAR design matrix is rank-deficient");
    const Eigen::VectorXd beta = qr.solve(y);

    HarModel model;
    model.include_quarterly = include_quarterly;
    model.c = beta(0);
    model.b1 = beta(1);
    model.b2 = beta(2);
    model.b3 = beta(3);
    model.b4 = include_quarterly ? beta(4) : 0.0;
    return model;
}

std::string ArimaOrder::name() const {
    if (d == 0)
        return "ARMA(" + std::to_string(p) + "," + std::to_string(q) + ")";
    return "ARIMA(" + std::to_string(p) + "," + std::to_string(d) + "," +
           std::to_string(q) + ")";
}

namespace {

std::vector<double> difference(std::vector<double> v, int d) {
    for (int i = 0; i < d; ++i) {
        std::vector<double> w(v.size() - 1);
        for (size_t t = 1; t < v.size(); ++t) w[t - 1] = v[t] - v[t - 1];
        v = std::move(w);
    }
    return v;
}

// Durbin-Levinson map from partial autocorrelations to a stationary AR
// coefficient vector.
std::vector<double> pacf_to_ar(const std::vector<double>& pacf) {
    std::vector<double> phi(pacf.size(), 0.0);
    std::vector<double> prev(pacf.size(), 0.0);
    for (size_t k = 0; k < pacf.size(); ++k) {
        phi[k] = pacf[k];
        for (size_t j = 0; j < k; ++j) phi[j] = prev[j] - pacf[k] * prev[k - 1 - j];
        prev = phi;
    }
    return phi;
}

struct CssParams {
    double intercept = 0.0;
    std::vector<double> ar;
    std::vector<double> ma;
};

// Unconstrained vector -> constrained coefficients. Layout:
// [intercept?] [p raw AR pacfs] [q raw MA pacfs], pacf = tanh(raw).
CssParams unpack(const std::vector<double>& theta, const ArimaOrder& order) {
    CssParams out;
    size_t i = 0;
    if (order.d == 0) out.intercept = theta[i++];
    std::vector<double> pacf_ar(static_cast<size_t>(order.p));
    for (auto& v : pacf_ar) v = std::tanh(theta[i++]);
    std::vector<double> pacf_ma(static_cast<size_t>(order.q));
    for (auto& v : pacf_ma) v = std::tanh(theta[i++]);
    out.ar = pacf_to_ar(pacf_ar);
    // The same map gives an invertible MA polynomial after a sign flip
    // (1 + sum theta_j z^j = 1 - sum phi_j z^j).
    out.ma = pacf_to_ar(pacf_ma);
    for (auto& v : out.ma) v = -v;
    return out;
}

double css_sse(const std::vector<double>& w, const CssParams& params, int p, int q) {
    const size_t n = w.size();
    std::vector<double> e(n, 0.0);
    double sse = 0.0;
    for (size_t t = static_cast<size_t>(p); t < n; ++t) {
        double pred = params.intercept;
        for (int i = 1; i <= p; ++i)
            pred += params.ar[static_cast<size_t>(i - 1)] * w[t - static_cast<size_t>(i)];
        for (int j = 1; j <= q; ++j) {
            if (t < static_cast<size_t>(p + j)) continue; // pre-sample innovations are 0
            pred += params.ma[static_cast<size_t>(j - 1)] * e[t - static_cast<size_t>(j)];
        }
        e[t] = w[t] - pred;
        sse += e[t] * e[t];
    }
    return sse;
}

} // namespace

ArimaModel fit_arma(const std::vector<double>& series, const ArimaOrder& order) {
    if (order.p < 0 || order.p > 5 || order.q < 0 || order.q > 5 || order.d < 0 ||
        order.d > 2)
        throw ConfigError("ARIMA order out of range (p,q in 0..5, d in 0..2)");
    const auto w = difference(series, order.d);
    const size_t n = w.size();
    if (static_cast<int>(n) <= 10 * (order.p + order.q + 1))
        throw InsufficientHistory("series too short for " + order.name());

    const size_t n_eff = n - static_cast<size_t>(order.p);
    const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(n);

    ArimaModel model;
    model.order = order;

    if (order.p == 0 && order.q == 0) {
        // Degenerate model: CSS minimized at the sample mean.
        model.intercept = order.d == 0 ? mean : 0.0;
        CssParams params;
        params.intercept = model.intercept;
        const double sse = css_sse(w, params, 0, 0);
        model.sigma2 = sse / static_cast<double>(n_eff);
        model.loglik = -0.5 * static_cast<double>(n_eff) *
                       (std::log(2.0 * M_PI * model.sigma2) + 1.0);
        return model;
    }

    const size_t dim = static_cast<size_t>(order.p + order.q) + (order.d == 0 ? 1 : 0);
    std::vector<double> x0(dim, 0.0);
    if (order.d == 0) x0[0] = mean;

    auto objective = [&](const std::vector<double>& theta,
                         std::vector<double>& grad) -> double {
        const auto params = unpack(theta, order);
        const double sse = css_sse(w, params, order.p, order.q);
        grad.assign(theta.size(), 0.0);
        std::vector<double> t2 = theta;
        for (size_t i = 0; i < theta.size(); ++i) {
            const double h = 1e-6 * std::max(1.0, std::abs(theta[i]));
            t2[i] = theta[i] + h;
            const double fp = css_sse(w, unpack(t2, order), order.p, order.q);
            t2[i] = theta[i] - h;
            const double fm = css_sse(w, unpack(t2, order), order.p, order.q);
            t2[i] = theta[i];
            grad[i] = (fp - fm) / (2.0 * h);
        }
        return sse;
    };

    LbfgsOptions options;
    options.max_iterations = 300;
    options.grad_tolerance = 1e-8;
    const auto result = lbfgs_minimize(objective, x0, options);
    if (!std::isfinite(result.value))
        throw NonConvergence("CSS optimization diverged for " + order.name());

    const auto params = unpack(result.x, order);
    model.intercept = params.intercept;
    model.ar = params.ar;
    model.ma = params.ma;
    const double sse = css_sse(w, params, order.p, order.q);
    if (!(sse > 0.0)) throw SingularFit("zero residual variance for " + order.name());
    model.sigma2 = sse / static_cast<double>(n_eff);
    model.loglik =
        -0.5 * static_cast<double>(n_eff) * (std::log(2.0 * M_PI * model.sigma2) + 1.0);
    return model;
}

KpssResult kpss_statistic(const std::vector<double>& series) {
    const size_t n = series.size();
    if (n < 20) throw InsufficientHistory("KPSS needs at least 20 observations");

    const double mean = std::accumulate(series.begin(), series.end(), 0.0) /
                        static_cast<double>(n);
    std::vector<double> resid(n);
    double var = 0.0;
    for (size_t t = 0; t < n; ++t) {
        resid[t] = series[t] - mean;
        var += resid[t] * resid[t];
    }
    if (var <= 0.0) throw ZeroVariance("KPSS undefined for a constant series");

    double sum_s2 = 0.0;
    double partial = 0.0;
    for (size_t t = 0; t < n; ++t) {
        partial += resid[t];
        sum_s2 += partial * partial;
    }

    // Bartlett-kernel long-run variance.
    const int bandwidth = static_cast<int>(std::floor(
        4.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
    double lrv = var / static_cast<double>(n);
    for (int j = 1; j <= bandwidth; ++j) {
        double gamma = 0.0;
        for (size_t t = static_cast<size_t>(j); t < n; ++t)
            gamma += resid[t] * resid[t - static_cast<size_t>(j)];
        gamma /= static_cast<double>(n);
        lrv += 2.0 * (1.0 - static_cast<double>(j) / (bandwidth + 1.0)) * gamma;
    }
    if (lrv <= 0.0) throw ZeroVariance("nonpositive long-run variance");

    KpssResult result;
    result.statistic = sum_s2 / (static_cast<double>(n) * static_cast<double>(n)) / lrv;
    result.reject_at_5pct = result.statistic > 0.463; // Kwiatkowski et al. 5% level
    return result;
}

OrderSelection select_order(const std::vector<double>& train_series) {
    int d = 2;
    for (int cand = 0; cand <= 2; ++cand) {
        const auto w = difference(train_series, cand);
        if (!kpss_statistic(w).reject_at_5pct) {
            d = cand;
            break;
        }
    }

    OrderSelection selection;
    double best_aic = std::numeric_limits<double>::infinity();
    bool found = false;
    for (int p = 0; p <= 5; ++p)
        for (int q = 0; q <= 5; ++q) {
            const ArimaOrder order{p, d, q};
            try {
                const auto model = fit_arma(train_series, order);
                const double k = static_cast<double>(p + q + 1 + 1);
                const double aic = 2.0 * k - 2.0 * model.loglik;
                if (aic < best_aic) {
                    best_aic = aic;
                    selection.order = order;
                    found = true;
                }
            } catch (const Error& e) {
                selection.skipped_cells.push_back(order.name() + ": " + e.what());
            }
        }
    if (!found) throw NonConvergence("no ARIMA grid cell converged");
    selection.aic = best_aic;
    return selection;
}

std::vector<double> forward_fill_forecast(const std::vector<double>& series,
                                          size_t test_begin, size_t test_end) {
    if (test_begin < 1 || test_end > series.size() || test_begin > test_end)
        throw InsufficientContext("test range outside the series");
    std::vector<double> out;
    out.reserve(test_end - test_begin);
    for (size_t t = test_begin; t < test_end; ++t) out.push_back(series[t - 1]);
    return out;
}

std::vector<double> arima_rolling_forecast(const ArimaModel& model,
                                           const std::vector<double>& series,
                                           size_t test_begin, size_t test_end) {
    const int d = model.order.d;
    const int p = model.order.p;
    const int q = model.order.q;
    if (test_begin < static_cast<size_t>(d + p + 1) || test_end > series.size())
        throw InsufficientContext("test range leaves no room for the ARIMA context");

    const auto w = difference(series, d);
    // Innovations over the realized history with fixed parameters.
    std::vector<double> e(w.size(), 0.0);
    auto predict_w = [&](size_t t) {
        double pred = model.intercept;
        for (int i = 1; i <= p; ++i)
            pred += model.ar[static_cast<size_t>(i - 1)] * w[t - static_cast<size_t>(i)];
        for (int j = 1; j <= q; ++j) {
            if (t < static_cast<size_t>(p + j)) continue;
            pred += model.ma[static_cast<size_t>(j - 1)] * e[t - static_cast<size_t>(j)];
        }
        return pred;
    };
    for (size_t t = static_cast<size_t>(p); t < w.size(); ++t) e[t] = w[t] - predict_w(t);

    std::vector<double> out;
    out.reserve(test_end - test_begin);
    for (size_t t = test_begin; t < test_end; ++t) {
        const size_t tw = t - static_cast<size_t>(d);
        const double w_hat = predict_w(tw);
        double level = w_hat;
        if (d == 1) level += series[t - 1];
        if (d == 2) level += 2.0 * series[t - 1] - series[t - 2];
        out.push_back(level);
    }
    return out;
}

std::vector<double> har_rolling_forecast(const HarModel& model, const FeatureMatrix& fm) {
    std::vector<double> out;
    out.reserve(fm.size());
    for (const auto& row : fm.rows) out.push_back(model.predict(row));
    return out;
}

} // namespace kancast
