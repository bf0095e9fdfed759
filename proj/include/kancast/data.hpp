#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kancast/errors.hpp"

namespace kancast {

// Calendar date. Ordering is lexicographic on (year, month, day).
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date&) const = default;

    static Date parse(const std::string& iso); // "YYYY-MM-DD"
    std::string to_string() const;
    bool is_weekend() const;
    Date next_day() const;
    Date next_weekday() const;
};

// Dated scalar series; dates strictly increasing, values finite.
struct TimeSeries {
    std::vector<Date> dates;
    std::vector<double> values;

    size_t size() const { return values.size(); }
};

// Explanatory-variable layouts built from a single series.
struct DatasetSpec {
    enum class Kind { D1, D2, D3, CustomLags };
    Kind kind = Kind::D3;
    std::vector<int> custom_lags; // used only for CustomLags; positive, sorted

    int max_lookback() const;
    std::vector<std::string> feature_names() const;
    static DatasetSpec from_name(const std::string& name); // "d1" | "d2" | "d3"
};

// Row-aligned features and targets; no row touches data at or after its
// target date.
struct FeatureMatrix {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> rows;
    std::vector<double> targets;
    std::vector<Date> dates; // target dates

    size_t size() const { return rows.size(); }
    int feature_count() const { return static_cast<int>(feature_names.size()); }
};

// Chronological split, either by integer ratios (remainder rows go to the
// earliest segment) or by explicit date boundaries on target dates.
struct SplitSpec {
    int train_parts = 6;
    int valid_parts = 1;
    int test_parts = 3;
    // When set, rows with target date <= train_end go to train, <= valid_end
    // to valid, and the rest to test; ratios are ignored.
    std::optional<Date> train_end;
    std::optional<Date> valid_end;

    static SplitSpec from_period(int period); // 1 -> 6:1:3, 2 -> 7:1:2, 3 -> 8:1:1
};

struct Split {
    FeatureMatrix train;
    FeatureMatrix valid;
    FeatureMatrix test;
};

// Discrete mean-reverting generator: V_t = V_{t-1} + kappa*(theta - V_{t-1})
// + noise_scale * z_t, floored at 0.01.
struct SyntheticOuConfig {
    double kappa = 0.15;
    double theta = 20.0;
    double noise_scale = 1.0;
    int n = 1000;
    std::uint64_t seed = 0;
    double v0 = 20.0;
};

TimeSeries load_csv(const std::string& path, const std::string& date_column,
                    const std::string& value_column);

FeatureMatrix build_features(const TimeSeries& series, const DatasetSpec& spec);

Split split(const FeatureMatrix& fm, const SplitSpec& spec);

// R^e_t = (P_t/P_{t-1} - 1 - rf_daily) * 100 with rf_daily = yield/252/100,
// the yield forward-filled to trading days.
TimeSeries excess_returns(const TimeSeries& prices, const TimeSeries& rf_annualized);

TimeSeries simulate_ou(const SyntheticOuConfig& config);

void write_series_csv(const TimeSeries& series, const std::string& path,
                      const std::string& value_column);
void write_feature_csv(const FeatureMatrix& fm, const std::string& path);

} // namespace kancast
