#pragma once

// Synthetic zone generator shared by the unit, CLI and acceptance suites:
// an hourly price with a daily AR backbone, y_t = 0.9*y_{t-24} +
// seasonal(hour, weekday) + noise, plus uninformative exogenous state
// columns (reservoir-like weekly fill, daily gas-like price, hourly load
// forecast).

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "epf/csv.hpp"
#include "epf/features.hpp"
#include "epf/panel.hpp"
#include "epf/panel_io.hpp"

namespace epf::testsupport {

inline double seasonal_component(int hour, int weekday) {
    // Joint hour-by-weekday shape: working days carry a sharp double peak,
    // weekends a damped flat profile at a lower level, Monday mornings an
    // extra ramp. The interaction is intentional: an additive
    // first-harmonic-plus-weekend-flag linear model cannot represent it.
    static constexpr double profile[24] = {-6, -7, -8, -8, -7, -4, 2,  9,  12, 8,  5,  4,
                                           3,  2,  2,  3,  5,  8,  10, 9,  6,  2,  -2, -5};
    if (weekday >= 5) return 0.3 * profile[hour] - 9.0;
    const double monday_bump = weekday == 0 && hour >= 6 && hour <= 9 ? 6.0 : 0.0;
    return profile[hour] + monday_bump;
}

struct SyntheticZone {
    HourlyPanel panel;              // finalized (no missing values)
    std::vector<double> reservoir;  // weekly forward-filled level
    std::vector<double> ttf;        // daily forward-filled level
};

inline SyntheticZone make_zone(ZoneId zone, UtcSeconds start, std::size_t hours,
                               std::uint64_t seed, double noise_sd = 2.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sd);
    std::normal_distribution<double> walk(0.0, 1.0);

    SyntheticZone out;
    out.panel.zone = zone;
    out.panel.index = HourlyIndex{start, hours};
    out.panel.target.resize(hours);

    std::vector<double> y(hours);
    for (std::size_t t = 0; t < hours; ++t) {
        const CivilTime c = civil_from_utc(start + static_cast<std::int64_t>(t) * kSecondsPerHour);
        const int wd = weekday_from_days(days_from_civil(c.date.year, c.date.month, c.date.day));
        const double s = seasonal_component(c.hour, wd);
        const double prev = t >= 24 ? y[t - 24] : 40.0;
        y[t] = 0.9 * prev + s + 4.0 + noise(rng);
    }
    out.panel.target = y;

    out.reservoir.resize(hours);
    out.ttf.resize(hours);
    double fill = 60.0, gas = 40.0;
    for (std::size_t t = 0; t < hours; ++t) {
        if (t % (7 * 24) == 0) {
            const double doy = static_cast<double>(
                day_of_year(civil_from_utc(start + static_cast<std::int64_t>(t) * kSecondsPerHour).date));
            fill = 60.0 + 25.0 * std::sin(2.0 * 3.14159265358979 * (doy - 120.0) / 365.25) +
                   3.0 * walk(rng);
        }
        if (t % 24 == 0) gas = std::max(5.0, gas + 1.5 * walk(rng));
        out.reservoir[t] = fill;
        out.ttf[t] = gas;
    }

    std::vector<double> load(hours);
    for (std::size_t t = 0; t < hours; ++t) {
        const CivilTime c = civil_from_utc(start + static_cast<std::int64_t>(t) * kSecondsPerHour);
        load[t] = 100.0 + 10.0 * std::sin(2.0 * 3.14159265358979 * c.hour / 24.0) + walk(rng);
    }

    out.panel.add_column("reservoir_fill", out.reservoir,
                         {Frequency::Weekly, Availability::DayAhead, "percent", ""});
    out.panel.add_column("ttf", out.ttf,
                         {Frequency::Daily, Availability::DayAhead, "EUR/MWh", ""});
    out.panel.add_column("load_forecast", load,
                         {Frequency::Hourly, Availability::DayAhead, "MW", ""});
    return out;
}

inline FeatureSpec synthetic_feature_spec(UtcSeconds anomaly_baseline_end = 0) {
    FeatureSpec spec;
    spec.exogenous_groups["reservoir_fill"] = FeatureGroup::Reservoir;
    spec.exogenous_groups["ttf"] = FeatureGroup::Commodities;
    spec.exogenous_groups["load_forecast"] = FeatureGroup::LoadWsf;
    spec.anomaly_baseline_end = anomaly_baseline_end;
    return spec;
}

// Raw snapshot CSV + schema sidecar for CLI-level tests: weekly and daily
// series only carry values on their publication hours, and a post-delivery
// column is included so ingestion has leakage to remove.
inline void write_zone_snapshot(const SyntheticZone& zone, const std::string& csv_path,
                                const std::string& schema_path) {
    std::ostringstream csv;
    csv << "timestamp,price,reservoir_fill,ttf,load_forecast,actual_load\n";
    const auto& p = zone.panel;
    std::mt19937_64 rng(99);
    std::normal_distribution<double> jitter(0.0, 1.0);
    for (std::size_t t = 0; t < p.rows(); ++t) {
        csv << format_utc_timestamp(p.index.at(t)) << ',' << format_csv_number(p.target[t])
            << ',';
        if (t % (7 * 24) == 0) csv << format_csv_number(zone.reservoir[t]);
        csv << ',';
        if (t % 24 == 0) csv << format_csv_number(zone.ttf[t]);
        csv << ',' << format_csv_number(p.columns[2][t]) << ','
            << format_csv_number(p.columns[2][t] + jitter(rng)) << '\n';
    }
    atomic_write_file(csv_path, csv.str());

    ZoneSchema schema;
    schema.zone = p.zone;
    schema.target_column = "price";
    schema.columns["price"] = {Frequency::Hourly, Availability::DayAhead, "EUR/MWh", ""};
    schema.columns["reservoir_fill"] = {Frequency::Weekly, Availability::DayAhead, "percent",
                                        "published at reference week start"};
    schema.columns["ttf"] = {Frequency::Daily, Availability::DayAhead, "EUR/MWh",
                             "previous-day close"};
    schema.columns["load_forecast"] = {Frequency::Hourly, Availability::DayAhead, "MW", ""};
    schema.columns["actual_load"] = {Frequency::Hourly, Availability::PostDelivery, "MW", ""};
    atomic_write_file(schema_path, schema.to_json());
}

}  // namespace epf::testsupport
