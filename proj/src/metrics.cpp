#include "kancast/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace kancast {

namespace {

// Continued fraction for the regularized incomplete beta (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

double regularized_incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

} // namespace

double f_cdf(double x, int d1, int d2) {
    if (x <= 0.0) return 0.0;
    const double u = d1 * x / (d1 * x + d2);
    return regularized_incomplete_beta(d1 / 2.0, d2 / 2.0, u);
}

MetricsReport compute_metrics(const std::vector<double>& actual,
                              const std::vector<double>& forecast) {
    if (actual.size() != forecast.size())
        throw LengthMismatch("actual and forecast lengths differ");
    const size_t n = actual.size();
    if (n < 2) throw LengthMismatch("need at least 2 observations");

    double mean = 0.0;
    for (double v : actual) {
        if (v <= 0.0)
            throw NonPositiveActual("MAPE/QLIKE need positive actuals, got " +
                                    std::to_string(v));
        mean += v;
    }
    mean /= static_cast<double>(n);

    MetricsReport m;
    m.n_test = static_cast<int>(n);
    double ss_tot = 0.0;
    for (size_t t = 0; t < n; ++t) {
        const double err = actual[t] - forecast[t];
        m.mse += err * err;
        m.mae += std::abs(err);
        m.mape += std::abs(err / actual[t]);
        const double ratio = actual[t] / forecast[t];
        if (!(ratio > 0.0))
            throw NonPositiveActual("QLIKE needs positive forecasts");
        m.qlike += ratio - std::log(ratio) - 1.0;
        ss_tot += (actual[t] - mean) * (actual[t] - mean);
    }
    const double dn = static_cast<double>(n);
    m.mse /= dn;
    m.mae /= dn;
    m.mape = m.mape / dn * 100.0;
    m.qlike /= dn;
    m.r2 = ss_tot > 0.0 ? 1.0 - m.mse * dn / ss_tot
                        : (m.mse == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity());
    return m;
}

MzResult mincer_zarnowitz(const std::vector<double>& actual,
                          const std::vector<double>& forecast) {
    if (actual.size() != forecast.size())
        throw LengthMismatch("actual and forecast lengths differ");
    const size_t n = actual.size();
    if (n < 10) throw LengthMismatch("Mincer-Zarnowitz needs n >= 10");

    double xbar = 0.0, ybar = 0.0;
    for (size_t t = 0; t < n; ++t) {
        xbar += forecast[t];
        ybar += actual[t];
    }
    xbar /= static_cast<double>(n);
    ybar /= static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0;
    for (size_t t = 0; t < n; ++t) {
        sxx += (forecast[t] - xbar) * (forecast[t] - xbar);
        sxy += (forecast[t] - xbar) * (actual[t] - ybar);
    }
    if (sxx <= 0.0) throw DegenerateForecast("forecast series is constant");

    MzResult r;
    r.n = static_cast<int>(n);
    r.beta_hat = sxy / sxx;
    r.alpha_hat = ybar - r.beta_hat * xbar;

    double rss_u = 0.0, rss_r = 0.0;
    for (size_t t = 0; t < n; ++t) {
        const double eu = actual[t] - (r.alpha_hat + r.beta_hat * forecast[t]);
        const double er = actual[t] - forecast[t]; // (alpha, beta) = (0, 1)
        rss_u += eu * eu;
        rss_r += er * er;
    }
    if (rss_u <= 0.0)
        throw PerfectForecast("unrestricted regression has zero residual sum of squares");

    const double df = static_cast<double>(n) - 2.0;
    r.f_statistic = ((rss_r - rss_u) / 2.0) / (rss_u / df);
    if (r.f_statistic < 0.0) r.f_statistic = 0.0; // nesting guarantees >= 0 in exact math
    r.p_value = 1.0 - f_cdf(r.f_statistic, 2, static_cast<int>(n) - 2);
    return r;
}

DwResult durbin_watson(const std::vector<double>& residuals) {
    if (residuals.size() < 2) throw LengthMismatch("Durbin-Watson needs n >= 2");
    double num = 0.0, den = 0.0;
    for (size_t t = 0; t < residuals.size(); ++t) {
        den += residuals[t] * residuals[t];
        if (t > 0) {
            const double d = residuals[t] - residuals[t - 1];
            num += d * d;
        }
    }
    if (den <= 0.0) throw ZeroResiduals("all residuals are zero");
    return DwResult{num / den};
}

} // namespace kancast
