#include <doctest.h>

#include <cmath>
#include <random>

#include "kancast/metrics.hpp"

using namespace kancast;

TEST_CASE("metric formulas on small vectors") {
    const std::vector<double> actual{10.0, 20.0};

    const auto perfect = compute_metrics(actual, actual);
    CHECK(perfect.mse == 0.0);
    CHECK(perfect.mae == 0.0);
    CHECK(perfect.mape == 0.0);
    CHECK(perfect.qlike == 0.0);
    CHECK(perfect.r2 == 1.0);
    CHECK(perfect.n_test == 2);

    const auto m = compute_metrics(actual, {12.0, 18.0});
    CHECK(m.mse == doctest::Approx(4.0));
    CHECK(m.mae == doctest::Approx(2.0));
    CHECK(m.mape == doctest::Approx(15.0)); // (20% + 10%) / 2
    CHECK(m.r2 == doctest::Approx(1.0 - 8.0 / 50.0));

    CHECK_THROWS_AS(compute_metrics({10.0, -1.0}, {10.0, 1.0}), NonPositiveActual);
    CHECK_THROWS_AS(compute_metrics({10.0}, {10.0, 1.0}), LengthMismatch);
}

TEST_CASE("QLIKE is nonnegative and zero only at equality") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.5, 40.0);
    std::vector<double> actual, forecast;
    for (int i = 0; i < 100000; ++i) {
        actual.push_back(u(rng));
        forecast.push_back(u(rng));
    }
    const auto m = compute_metrics(actual, forecast);
    CHECK(m.qlike > 0.0);
    CHECK(compute_metrics(actual, actual).qlike == 0.0);
}

TEST_CASE("R^2 identity against the MSE form") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(5.0, 30.0);
    std::vector<double> actual, forecast;
    for (int i = 0; i < 500; ++i) {
        actual.push_back(u(rng));
        forecast.push_back(actual.back() + 0.1 * u(rng) - 1.5);
    }
    const auto m = compute_metrics(actual, forecast);
    double mean = 0.0;
    for (double v : actual) mean += v;
    mean /= static_cast<double>(actual.size());
    double ss_tot = 0.0;
    for (double v : actual) ss_tot += (v - mean) * (v - mean);
    const double n = static_cast<double>(actual.size());
    CHECK(std::abs(m.r2 - (1.0 - m.mse * n / ss_tot)) < 1e-12);
}

TEST_CASE("Mincer-Zarnowitz joint test") {
    std::vector<double> actual{10.0, 11.0, 12.0, 13.0, 14.0, 15.0, 16.0, 17.0, 18.0,
                               19.0};
    CHECK_THROWS_AS(mincer_zarnowitz(actual, actual), PerfectForecast);
    CHECK_THROWS_AS(mincer_zarnowitz(actual, std::vector<double>(10, 3.0)),
                    DegenerateForecast);

    // Unbiased noisy forecasts: p above 0.05 for most seeds.
    int size_ok = 0;
    const int trials = 100;
    for (int seed = 0; seed < trials; ++seed) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
        std::normal_distribution<double> eps(0.0, 1.0);
        std::uniform_real_distribution<double> u(10.0, 30.0);
        std::vector<double> f, a;
        for (int i = 0; i < 1000; ++i) {
            f.push_back(u(rng));
            a.push_back(f.back() + eps(rng));
        }
        if (mincer_zarnowitz(a, f).p_value > 0.05) ++size_ok;
    }
    CHECK(size_ok >= 90);

    // A constant bias is flagged decisively.
    std::mt19937_64 rng(77);
    std::normal_distribution<double> eps(0.0, 1.0);
    std::uniform_real_distribution<double> u(10.0, 30.0);
    std::vector<double> f, a;
    for (int i = 0; i < 1000; ++i) {
        f.push_back(u(rng));
        a.push_back(f.back() + 5.0 + eps(rng));
    }
    const auto biased = mincer_zarnowitz(a, f);
    CHECK(biased.p_value < 0.01);
    CHECK(biased.f_statistic > 0.0);
}

TEST_CASE("Durbin-Watson statistic") {
    CHECK(durbin_watson({1.0, 1.0, 1.0}).statistic == 0.0);
    CHECK(durbin_watson({1.0, -1.0, 1.0, -1.0}).statistic == doctest::Approx(3.0));
    CHECK_THROWS_AS(durbin_watson({0.0, 0.0}), ZeroResiduals);

    std::mt19937_64 rng(9);
    std::normal_distribution<double> eps(0.0, 1.0);
    std::vector<double> e;
    for (int i = 0; i < 10000; ++i) e.push_back(eps(rng));
    const auto dw = durbin_watson(e);
    CHECK(std::abs(dw.statistic - 2.0) < 0.05);
    CHECK(dw.statistic >= 0.0);
    CHECK(dw.statistic <= 4.0);
}

namespace {

// F(d1, d2) density, integrated by Simpson's rule on a fine grid as an
// independent check of the closed-form CDF.
double f_density(double x, double d1, double d2) {
    const double lg = std::lgamma((d1 + d2) / 2.0) - std::lgamma(d1 / 2.0) -
                      std::lgamma(d2 / 2.0);
    if (x == 0.0) // finite and nonzero only for d1 == 2
        return d1 == 2.0 ? std::exp(lg + std::log(d1 / d2)) : 0.0;
    const double log_num = (d1 / 2.0) * std::log(d1 / d2) +
                           (d1 / 2.0 - 1.0) * std::log(x) -
                           ((d1 + d2) / 2.0) * std::log(1.0 + d1 * x / d2);
    return std::exp(lg + log_num);
}

double simpson_cdf(double x, int d1, int d2, int panels) {
    const double h = x / panels;
    double sum = 0.0;
    for (int i = 0; i < panels; ++i) {
        const double a = i * h, b = a + h, mid = a + h / 2.0;
        const double fa = f_density(a, d1, d2);
        sum += h / 6.0 * (fa + 4.0 * f_density(mid, d1, d2) + f_density(b, d1, d2));
    }
    return sum;
}

} // namespace

TEST_CASE("F distribution CDF") {
    CHECK(f_cdf(0.0, 2, 10) == 0.0);
    CHECK(std::abs(f_cdf(1.0, 2, 10) - simpson_cdf(1.0, 2, 10, 20000)) < 1e-8);
    CHECK(std::abs(f_cdf(3.7, 2, 998) - simpson_cdf(3.7, 2, 998, 20000)) < 1e-8);
    CHECK(std::abs(f_cdf(0.5, 5, 7) - simpson_cdf(0.5, 5, 7, 20000)) < 1e-8);

    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 20.0);
    for (int i = 0; i < 200; ++i) {
        double x1 = u(rng), x2 = u(rng);
        if (x1 > x2) std::swap(x1, x2);
        CHECK(f_cdf(x1, 2, 30) <= f_cdf(x2, 2, 30) + 1e-15);
    }
}
