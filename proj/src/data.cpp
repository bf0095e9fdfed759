#include "kancast/data.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace kancast {

namespace {

std::chrono::sys_days to_sys_days(const Date& d) {
    return std::chrono::sys_days{std::chrono::year{d.year} / d.month / d.day};
}

Date from_sys_days(std::chrono::sys_days sd) {
    const std::chrono::year_month_day ymd{sd};
    return Date{static_cast<int>(ymd.year()), static_cast<int>(unsigned(ymd.month())),
                static_cast<int>(unsigned(ymd.day()))};
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // Trim whitespace and a possible trailing CR.
        while (!field.empty() && (field.back() == '\r' || field.back() == ' '))
            field.pop_back();
        size_t start = field.find_first_not_of(' ');
        out.push_back(start == std::string::npos ? std::string{} : field.substr(start));
    }
    return out;
}

} // namespace

Date Date::parse(const std::string& iso) {
    Date d;
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-')
        throw ParseError("date not in YYYY-MM-DD format: '" + iso + "'");
    auto to_int = [&](size_t pos, size_t len, int& out) {
        auto res = std::from_chars(iso.data() + pos, iso.data() + pos + len, out);
        if (res.ec != std::errc{} || res.ptr != iso.data() + pos + len)
            throw ParseError("date not in YYYY-MM-DD format: '" + iso + "'");
    };
    to_int(0, 4, d.year);
    to_int(5, 2, d.month);
    to_int(8, 2, d.day);
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31)
        throw ParseError("date out of range: '" + iso + "'");
    return d;
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

bool Date::is_weekend() const {
    const std::chrono::weekday wd{to_sys_days(*this)};
    return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
}

Date Date::next_day() const {
    return from_sys_days(to_sys_days(*this) + std::chrono::days{1});
}

Date Date::next_weekday() const {
    Date d = next_day();
    while (d.is_weekend()) d = d.next_day();
    return d;
}

int DatasetSpec::max_lookback() const {
    switch (kind) {
        case Kind::D1: return 5;
        case Kind::D2: return 21;
        case Kind::D3: return 63;
        case Kind::CustomLags:
            return custom_lags.empty() ? 0 : custom_lags.back();
    }
    return 0;
}

std::vector<std::string> DatasetSpec::feature_names() const {
    switch (kind) {
        case Kind::D1: return {"V_{t-1}", "V_{t-2}", "V_{t-3}", "V_{t-4}", "V_{t-5}"};
        case Kind::D2: return {"V_{t-1}", "V_{t-5}", "V_{t-10}", "V_{t-21}"};
        case Kind::D3: return {"V_{t-1}", "V_w", "V_m", "V_q"};
        case Kind::CustomLags: {
            std::vector<std::string> names;
            for (int lag : custom_lags) names.push_back("V_{t-" + std::to_string(lag) + "}");
            return names;
        }
    }
    return {};
}

DatasetSpec DatasetSpec::from_name(const std::string& name) {
    DatasetSpec spec;
    if (name == "d1" || name == "D1") spec.kind = Kind::D1;
    else if (name == "d2" || name == "D2") spec.kind = Kind::D2;
    else if (name == "d3" || name == "D3") spec.kind = Kind::D3;
    else throw ConfigError("unknown dataset '" + name + "' (expected d1, d2 or d3)");
    return spec;
}

SplitSpec SplitSpec::from_period(int period) {
    SplitSpec spec;
    switch (period) {
        case 1: spec.train_parts = 6; spec.valid_parts = 1; spec.test_parts = 3; break;
        case 2: spec.train_parts = 7; spec.valid_parts = 1; spec.test_parts = 2; break;
        case 3: spec.train_parts = 8; spec.valid_parts = 1; spec.test_parts = 1; break;
        default: throw ConfigError("period must be 1, 2 or 3");
    }
    return spec;
}

TimeSeries load_csv(const std::string& path, const std::string& date_column,
                    const std::string& value_column) {
    std::ifstream file(path);
    if (!file) throw FileNotFound("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(file, line)) throw ParseError("'" + path + "' is empty");
    const auto header = split_line(line);
    int date_idx = -1, value_idx = -1;
    for (size_t i = 0; i < header.size(); ++i) {
        if (header[i] == date_column) date_idx = static_cast<int>(i);
        if (header[i] == value_column) value_idx = static_cast<int>(i);
    }
    if (date_idx < 0 || value_idx < 0)
        throw ParseError("'" + path + "': header lacks column '" +
                         (date_idx < 0 ? date_column : value_column) + "'");

    std::map<Date, double> points;
    int row = 1;
    while (std::getline(file, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_line(line);
        if (static_cast<int>(fields.size()) <= std::max(date_idx, value_idx))
            throw ParseError("'" + path + "' row " + std::to_string(row) +
                             ": too few columns");
        Date date;
        try {
            date = Date::parse(fields[static_cast<size_t>(date_idx)]);
        } catch (const ParseError& e) {
            throw ParseError("'" + path + "' row " + std::to_string(row) + ": " + e.what());
        }
        const std::string& raw = fields[static_cast<size_t>(value_idx)];
        double value = 0.0;
        auto res = std::from_chars(raw.data(), raw.data() + raw.size(), value);
        if (res.ec != std::errc{} || res.ptr != raw.data() + raw.size() ||
            !std::isfinite(value))
            throw ParseError("'" + path + "' row " + std::to_string(row) +
                             ": unparseable value '" + raw + "'");
        if (!points.emplace(date, value).second)
            throw DuplicateDate("'" + path + "' row " + std::to_string(row) +
                                ": duplicate date " + date.to_string());
    }

    TimeSeries series;
    series.dates.reserve(points.size());
    series.values.reserve(points.size());
    for (const auto& [date, value] : points) {
        series.dates.push_back(date);
        series.values.push_back(value);
    }
    return series;
}

FeatureMatrix build_features(const TimeSeries& series, const DatasetSpec& spec) {
    const int lookback = spec.max_lookback();
    if (static_cast<int>(series.size()) <= lookback)
        throw InsufficientHistory("series has " + std::to_string(series.size()) +
                                  " points, needs more than " + std::to_string(lookback));

    FeatureMatrix fm;
    fm.feature_names = spec.feature_names();
    const auto& v = series.values;

    auto trailing_mean = [&](size_t t, int window) {
        double sum = 0.0;
        for (int i = 1; i <= window; ++i) sum += v[t - static_cast<size_t>(i)];
        return sum / window;
    };

    for (size_t t = static_cast<size_t>(lookback); t < series.size(); ++t) {
        std::vector<double> row;
        switch (spec.kind) {
            case DatasetSpec::Kind::D1:
                for (int lag = 1; lag <= 5; ++lag) row.push_back(v[t - static_cast<size_t>(lag)]);
                break;
            case DatasetSpec::Kind::D2:
                for (int lag : {1, 5, 10, 21}) row.push_back(v[t - static_cast<size_t>(lag)]);
                break;
            case DatasetSpec::Kind::D3:
                row.push_back(v[t - 1]);
                row.push_back(trailing_mean(t, 5));
                row.push_back(trailing_mean(t, 21));
                row.push_back(trailing_mean(t, 63));
                break;
            case DatasetSpec::Kind::CustomLags:
                for (int lag : spec.custom_lags) row.push_back(v[t - static_cast<size_t>(lag)]);
                break;
        }
        fm.rows.push_back(std::move(row));
        fm.targets.push_back(v[t]);
        fm.dates.push_back(series.dates[t]);
    }
    return fm;
}

namespace {

FeatureMatrix slice(const FeatureMatrix& fm, size_t begin, size_t end) {
    FeatureMatrix out;
    out.feature_names = fm.feature_names;
    out.rows.assign(fm.rows.begin() + static_cast<long>(begin),
                    fm.rows.begin() + static_cast<long>(end));
    out.targets.assign(fm.targets.begin() + static_cast<long>(begin),
                       fm.targets.begin() + static_cast<long>(end));
    out.dates.assign(fm.dates.begin() + static_cast<long>(begin),
                     fm.dates.begin() + static_cast<long>(end));
    return out;
}

} // namespace

Split split(const FeatureMatrix& fm, const SplitSpec& spec) {
    const size_t n = fm.size();
    if (n == 0) throw EmptySegment("cannot split an empty feature matrix");

    size_t n_train = 0, n_valid = 0;
    if (spec.train_end && spec.valid_end) {
        for (const auto& d : fm.dates) {
            if (d <= *spec.train_end) ++n_train;
            else if (d <= *spec.valid_end) ++n_valid;
        }
    } else {
        const int parts = spec.train_parts + spec.valid_parts + spec.test_parts;
        if (parts <= 0 || spec.train_parts <= 0 || spec.valid_parts <= 0 ||
            spec.test_parts <= 0)
            throw ConfigError("split ratios must be positive");
        n_valid = n * static_cast<size_t>(spec.valid_parts) / static_cast<size_t>(parts);
        const size_t n_test =
            n * static_cast<size_t>(spec.test_parts) / static_cast<size_t>(parts);
        n_train = n - n_valid - n_test; // remainder goes to the earliest segment
    }
    if (n_train == 0 || n_valid == 0 || n_train + n_valid >= n)
        throw EmptySegment("split leaves an empty segment (n=" + std::to_string(n) + ")");

    Split out;
    out.train = slice(fm, 0, n_train);
    out.valid = slice(fm, n_train, n_train + n_valid);
    out.test = slice(fm, n_train + n_valid, n);
    return out;
}

TimeSeries excess_returns(const TimeSeries& prices, const TimeSeries& rf_annualized) {
    if (prices.size() < 2) throw InsufficientHistory("need at least two prices");

    // Forward-fill the annualized yield onto price dates.
    auto rf_on = [&](const Date& d) {
        auto it = std::upper_bound(rf_annualized.dates.begin(), rf_annualized.dates.end(), d);
        if (it == rf_annualized.dates.begin())
            throw MissingRate("no risk-free rate on or before " + d.to_string());
        return rf_annualized.values[static_cast<size_t>(
            std::distance(rf_annualized.dates.begin(), it) - 1)];
    };

    TimeSeries out;
    for (size_t t = 1; t < prices.size(); ++t) {
        const double rf_daily = rf_on(prices.dates[t]) / 252.0 / 100.0;
        const double r = prices.values[t] / prices.values[t - 1] - 1.0 - rf_daily;
        out.dates.push_back(prices.dates[t]);
        out.values.push_back(r * 100.0);
    }
    return out;
}

TimeSeries simulate_ou(const SyntheticOuConfig& config) {
    if (config.n < 1) throw ConfigError("simulate_ou needs n >= 1");
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    TimeSeries out;
    Date date{2004, 1, 2};
    double v = config.v0;
    for (int t = 0; t < config.n; ++t) {
        if (t > 0) {
            v = v + config.kappa * (config.theta - v) + config.noise_scale * normal(rng);
            v = std::max(v, 0.01);
        }
        out.dates.push_back(date);
        out.values.push_back(v);
        date = date.next_weekday();
    }
    return out;
}

void write_series_csv(const TimeSeries& series, const std::string& path,
                      const std::string& value_column) {
    std::ofstream file(path);
    if (!file) throw FileNotFound("cannot write '" + path + "'");
    file << "date," << value_column << "\n";
    file.precision(17);
    for (size_t i = 0; i < series.size(); ++i)
        file << series.dates[i].to_string() << "," << series.values[i] << "\n";
}

void write_feature_csv(const FeatureMatrix& fm, const std::string& path) {
    std::ofstream file(path);
    if (!file) throw FileNotFound("cannot write '" + path + "'");
    file << "date";
    for (const auto& name : fm.feature_names) file << "," << name;
    file << ",target\n";
    file.precision(17);
    for (size_t i = 0; i < fm.size(); ++i) {
        file << fm.dates[i].to_string();
        for (double v : fm.rows[i]) file << "," << v;
        file << "," << fm.targets[i] << "\n";
    }
}

} // namespace kancast
