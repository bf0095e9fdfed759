#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "helpers.hpp"
#include "kancast/benchmarks.hpp"

using namespace kancast;

namespace {

FeatureMatrix d3_matrix(const std::vector<double>& series) {
    TimeSeries ts;
    Date d{2004, 1, 2};
    for (double v : series) {
        ts.dates.push_back(d);
        ts.values.push_back(v);
        d = d.next_weekday();
    }
    return build_features(ts, DatasetSpec::from_name("d3"));
}

std::vector<double> simulate_arma11(double phi, double theta, double mu, int n,
                                    std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> eps(0.0, 1.0);
    std::vector<double> x(static_cast<size_t>(n));
    double prev_e = 0.0, prev_x = mu;
    for (int t = 0; t < n; ++t) {
        const double e = eps(rng);
        x[static_cast<size_t>(t)] =
            mu + phi * (prev_x - mu) + e + theta * prev_e;
        prev_x = x[static_cast<size_t>(t)];
        prev_e = e;
    }
    return x;
}

} // namespace

TEST_CASE("HAR ordinary least squares") {
    // Build a series, then synthesize targets exactly from the HAR(3) rule.
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(10.0, 30.0);
    std::vector<double> series;
    for (int i = 0; i < 400; ++i) series.push_back(u(rng));
    FeatureMatrix fm = d3_matrix(series);
    for (size_t i = 0; i < fm.size(); ++i)
        fm.targets[i] = 0.1 + 0.8 * fm.rows[i][0] + 0.15 * fm.rows[i][1] +
                        0.03 * fm.rows[i][2];

    const HarModel exact = fit_har(fm, false);
    CHECK(exact.c == doctest::Approx(0.1).epsilon(1e-10));
    CHECK(exact.b1 == doctest::Approx(0.8).epsilon(1e-10));
    CHECK(exact.b2 == doctest::Approx(0.15).epsilon(1e-10));
    CHECK(exact.b3 == doctest::Approx(0.03).epsilon(1e-10));
    CHECK(exact.b4 == 0.0);
    CHECK(exact.param_count() == 4);

    // Noisy targets: agree with an independent normal-equations solve and
    // leave residuals orthogonal to the regressors.
    std::normal_distribution<double> eps(0.0, 0.7);
    for (auto& t : fm.targets) t += eps(rng);
    const HarModel noisy = fit_har(fm, true);
    CHECK(noisy.param_count() == 5);

    std::vector<std::vector<double>> design;
    for (const auto& row : fm.rows)
        design.push_back({1.0, row[0], row[1], row[2], row[3]});
    const auto oracle = testutil::normal_equations(design, fm.targets);
    CHECK(std::abs(noisy.c - oracle[0]) < 1e-8);
    CHECK(std::abs(noisy.b1 - oracle[1]) < 1e-8);
    CHECK(std::abs(noisy.b2 - oracle[2]) < 1e-8);
    CHECK(std::abs(noisy.b3 - oracle[3]) < 1e-8);
    CHECK(std::abs(noisy.b4 - oracle[4]) < 1e-8);

    double ynorm = 0.0;
    for (double t : fm.targets) ynorm += t * t;
    ynorm = std::sqrt(ynorm);
    for (size_t col = 0; col < 5; ++col) {
        double dot = 0.0;
        for (size_t i = 0; i < fm.size(); ++i)
            dot += design[i][col] * (fm.targets[i] - noisy.predict(fm.rows[i]));
        CHECK(std::abs(dot) < 1e-8 * ynorm);
    }

    // Constant regressors are rank-deficient.
    FeatureMatrix degenerate = fm;
    for (auto& row : degenerate.rows) row = {1.0, 1.0, 1.0, 1.0};
    CHECK_THROWS_AS(fit_har(degenerate, false), SingularDesign);
}

TEST_CASE("HAR persistence embedding equals forward filling") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(10.0, 30.0);
    std::vector<double> series;
    for (int i = 0; i < 200; ++i) series.push_back(u(rng));
    const auto fm = d3_matrix(series);

    HarModel persist;
    persist.b1 = 1.0;
    const auto har = har_rolling_forecast(persist, fm);
    const auto naive = forward_fill_forecast(series, 63, series.size());
    REQUIRE(har.size() == naive.size());
    for (size_t i = 0; i < har.size(); ++i) CHECK(har[i] == naive[i]);
}

TEST_CASE("forward filling basics") {
    const std::vector<double> s{1.0, 2.0, 3.0};
    const auto f = forward_fill_forecast(s, 1, 3);
    CHECK(f == std::vector<double>{1.0, 2.0});
    const std::vector<double> c(10, 7.0);
    for (double v : forward_fill_forecast(c, 5, 10)) CHECK(v == 7.0);
}

TEST_CASE("ARMA estimation") {
    SUBCASE("degenerate order is the sample mean") {
        std::vector<double> s;
        for (int i = 1; i <= 16; ++i) s.push_back(static_cast<double>(i));
        const auto m = fit_arma(s, ArimaOrder{0, 0, 0});
        CHECK(m.intercept == 8.5); // exact sample mean
        CHECK(m.ar.empty());
        CHECK(m.ma.empty());
        CHECK(m.param_count() == 2);
    }

    SUBCASE("white noise fits near-zero coefficients") {
        std::mt19937_64 rng(44);
        std::normal_distribution<double> eps(0.0, 1.0);
        std::vector<double> s;
        for (int i = 0; i < 5000; ++i) s.push_back(eps(rng));
        const auto m = fit_arma(s, ArimaOrder{1, 0, 1});
        CHECK(std::abs(m.ar[0]) < 0.05);
        CHECK(std::abs(m.ma[0]) < 0.05);
    }

    SUBCASE("ARMA(1,1) simulation recovery") {
        const auto s = simulate_arma11(0.7, 0.3, 5.0, 5000, 10);
        const auto m = fit_arma(s, ArimaOrder{1, 0, 1});
        CHECK(std::abs(m.ar[0] - 0.7) < 0.05);
        CHECK(std::abs(m.ma[0] - 0.3) < 0.05);
        // The constant is c = mu * (1 - phi); compare the implied mean.
        CHECK(std::abs(m.intercept / (1.0 - m.ar[0]) - 5.0) < 0.3);
        CHECK(std::abs(m.ar[0]) < 1.0); // stationarity enforced
    }
}

TEST_CASE("rolling ARIMA forecasts") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(10.0, 30.0);
    std::vector<double> s;
    for (int i = 0; i < 300; ++i) s.push_back(u(rng));

    // Random walk model: identical to forward filling, element-wise.
    const auto rw = fit_arma(std::vector<double>(s.begin(), s.begin() + 200),
                             ArimaOrder{0, 1, 0});
    const auto ff = forward_fill_forecast(s, 200, 300);
    const auto rolled = arima_rolling_forecast(rw, s, 200, 300);
    REQUIRE(rolled.size() == ff.size());
    for (size_t i = 0; i < ff.size(); ++i) CHECK(rolled[i] == ff[i]);

    // Mean model: constant forecast at the training mean.
    const std::vector<double> train(s.begin(), s.begin() + 200);
    const auto mean_model = fit_arma(train, ArimaOrder{0, 0, 0});
    const double mean =
        std::accumulate(train.begin(), train.end(), 0.0) / 200.0;
    for (double v : arima_rolling_forecast(mean_model, s, 200, 300))
        CHECK(v == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("KPSS stationarity statistic") {
    CHECK_THROWS_AS(kpss_statistic(std::vector<double>(50, 3.0)), ZeroVariance);

    int noise_pass = 0, walk_reject = 0;
    const int trials = 20;
    for (int seed = 0; seed < trials; ++seed) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(seed) + 100);
        std::normal_distribution<double> eps(0.0, 1.0);
        std::vector<double> noise, walk;
        double level = 0.0;
        for (int i = 0; i < 1000; ++i) {
            noise.push_back(eps(rng));
            level += eps(rng);
            walk.push_back(level);
        }
        if (!kpss_statistic(noise).reject_at_5pct) ++noise_pass;
        if (kpss_statistic(walk).reject_at_5pct) ++walk_reject;
    }
    CHECK(noise_pass >= 18);
    CHECK(walk_reject >= 18);
}

TEST_CASE("order selection by KPSS then AIC") {
    // Stationary AR(1).
    std::mt19937_64 rng(7);
    std::normal_distribution<double> eps(0.0, 1.0);
    std::vector<double> ar1;
    double x = 0.0;
    for (int i = 0; i < 1200; ++i) {
        x = 0.6 * x + eps(rng);
        ar1.push_back(x + 10.0);
    }
    const auto stat_sel = select_order(ar1);
    CHECK(stat_sel.order.d == 0);
    CHECK(stat_sel.order.p >= 1);

    // Random walk needs differencing.
    std::vector<double> walk;
    double level = 0.0;
    for (int i = 0; i < 1200; ++i) {
        level += eps(rng);
        walk.push_back(level);
    }
    const auto walk_sel = select_order(walk);
    CHECK(walk_sel.order.d >= 1);

    CHECK(ArimaOrder{1, 0, 1}.name() == "ARMA(1,1)");
    CHECK(ArimaOrder{1, 1, 1}.name() == "ARIMA(1,1,1)");
}
