#include "epf/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace epf {

const std::vector<FeatureGroup>& all_feature_groups() {
    static const std::vector<FeatureGroup> groups = {
        FeatureGroup::Lags,      FeatureGroup::Calendar,    FeatureGroup::Weather,
        FeatureGroup::Reservoir, FeatureGroup::Commodities, FeatureGroup::LoadWsf};
    return groups;
}

std::string to_string(FeatureGroup g) {
    switch (g) {
        case FeatureGroup::Lags: return "lags";
        case FeatureGroup::Calendar: return "calendar";
        case FeatureGroup::Weather: return "weather";
        case FeatureGroup::Reservoir: return "reservoir";
        case FeatureGroup::Commodities: return "commodities";
        case FeatureGroup::LoadWsf: return "load_wsf";
    }
    throw std::invalid_argument("invalid FeatureGroup");
}

FeatureGroup feature_group_from_string(const std::string& s) {
    for (FeatureGroup g : all_feature_groups())
        if (to_string(g) == s) return g;
    throw std::invalid_argument("unknown feature group: '" + s + "'");
}

void FeatureSpec::validate() const {
    if (target_lags.empty() && target_rolling.empty() && !hour_of_day &&
        !day_of_week && !day_of_year && !weekend_flag && exogenous_groups.empty())
        throw std::invalid_argument("feature spec selects nothing to build");
    for (int lag : target_lags) {
        if (lag < 24)
            throw std::invalid_argument(
                "target-price lag " + std::to_string(lag) +
                " violates day-ahead availability (minimum 24 h)");
    }
    for (const auto& r : target_rolling)
        if (r.window < 2)
            throw std::invalid_argument("rolling window must be at least 2 hours");
}

std::optional<std::size_t> FeatureMatrix::find_column(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    return std::nullopt;
}

bool FeatureMatrix::has_group(FeatureGroup g) const {
    return std::find(groups.begin(), groups.end(), g) != groups.end();
}

std::pair<double, double> encode_cyclic(double value, double period) {
    if (period < 2.0)
        throw std::invalid_argument("cyclic period must be at least 2");
    if (!(value >= 0.0 && value < period))
        throw std::invalid_argument("cyclic value " + std::to_string(value) +
                                    " outside [0, " + std::to_string(period) + ")");
    const double angle = 2.0 * std::numbers::pi * value / period;
    return {std::sin(angle), std::cos(angle)};
}

std::vector<double> make_lag(const std::vector<double>& series, int lag) {
    if (lag <= 0) throw std::invalid_argument("lag must be positive");
    if (static_cast<std::size_t>(lag) >= series.size())
        throw std::invalid_argument("lag " + std::to_string(lag) +
                                    " is not shorter than the series");
    std::vector<double> out(series.size(), missing_value());
    for (std::size_t t = static_cast<std::size_t>(lag); t < series.size(); ++t)
        out[t] = series[t - lag];
    return out;
}

std::vector<double> make_rolling(const std::vector<double>& series, int window,
                                 RollingStat stat) {
    if (window < 2) throw std::invalid_argument("rolling window must be at least 2");
    const std::size_t w = static_cast<std::size_t>(window);
    if (w >= series.size())
        throw std::invalid_argument("rolling window " + std::to_string(window) +
                                    " is not shorter than the series");
    std::vector<double> out(series.size(), missing_value());
    for (std::size_t t = w; t < series.size(); ++t) {
        double sum = 0.0;
        for (std::size_t i = t - w; i < t; ++i) sum += series[i];
        const double mean = sum / static_cast<double>(w);
        if (stat == RollingStat::Mean) {
            out[t] = mean;
        } else {
            double ss = 0.0;
            for (std::size_t i = t - w; i < t; ++i) {
                const double d = series[i] - mean;
                ss += d * d;
            }
            out[t] = std::sqrt(ss / static_cast<double>(w));
        }
    }
    return out;
}

namespace {

void push_column(FeatureMatrix& m, std::string name, std::vector<double> col,
                 FeatureGroup group) {
    m.names.push_back(std::move(name));
    m.cols.push_back(std::move(col));
    m.groups.push_back(group);
}

// Expanding per-ISO-week mean of `level`, frozen at `baseline_end` (0 = never
// frozen). The value subtracted at hour t only uses observations strictly
// before t, so the anomaly column stays causal even inside the baseline
// window. Weeks with no prior same-week observation (first year of data, or
// weeks the baseline window never saw) fall back to the overall mean of the
// history seen so far; with no history at all the anomaly is 0.
std::vector<double> reservoir_anomaly_column(const std::vector<double>& level,
                                             const HourlyIndex& index,
                                             UtcSeconds baseline_end) {
    std::array<double, 54> week_sum{};
    std::array<std::size_t, 54> week_count{};
    double all_sum = 0.0;
    std::size_t all_count = 0;
    std::vector<double> out(level.size(), 0.0);
    for (std::size_t t = 0; t < level.size(); ++t) {
        const UtcSeconds hour = index.at(t);
        const int week = iso_week(civil_from_utc(hour).date);
        if (week_count[week] > 0)
            out[t] = level[t] - week_sum[week] / static_cast<double>(week_count[week]);
        else if (all_count > 0)
            out[t] = level[t] - all_sum / static_cast<double>(all_count);
        if (baseline_end == 0 || hour < baseline_end) {
            week_sum[week] += level[t];
            ++week_count[week];
            all_sum += level[t];
            ++all_count;
        }
    }
    return out;
}

}  // namespace

FeatureMatrix assemble_matrix(const HourlyPanel& panel, const FeatureSpec& spec) {
    spec.validate();
    panel.validate();

    // Every exogenous panel column must carry a group assignment.
    for (const auto& name : panel.column_names)
        if (!spec.exogenous_groups.count(name))
            throw std::invalid_argument("panel column '" + name +
                                        "' has no feature-group assignment");

    std::size_t warmup = kHoursPerWeek;
    for (int lag : spec.target_lags) warmup = std::max<std::size_t>(warmup, lag);
    for (const auto& r : spec.target_rolling)
        warmup = std::max<std::size_t>(warmup, r.window);
    if (panel.rows() <= warmup)
        throw std::invalid_argument("panel shorter than the warm-up prefix");

    FeatureMatrix full;  // panel-aligned, trimmed at the end
    full.start = panel.index.start;

    for (int lag : spec.target_lags)
        push_column(full, "price_lag" + std::to_string(lag),
                    make_lag(panel.target, lag), FeatureGroup::Lags);
    for (const auto& r : spec.target_rolling) {
        const std::string stat = r.stat == RollingStat::Mean ? "mean" : "std";
        push_column(full, "price_roll" + std::to_string(r.window) + "_" + stat,
                    make_rolling(panel.target, r.window, r.stat), FeatureGroup::Lags);
    }

    const std::size_t n = panel.rows();
    if (spec.hour_of_day || spec.day_of_week || spec.day_of_year || spec.weekend_flag) {
        std::vector<double> hod_sin(n), hod_cos(n), dow_sin(n), dow_cos(n),
            doy_sin(n), doy_cos(n), weekend(n);
        for (std::size_t t = 0; t < n; ++t) {
            const CivilTime local = oslo_civil_from_utc(panel.index.at(t));
            const int wd = weekday_from_days(
                days_from_civil(local.date.year, local.date.month, local.date.day));
            if (spec.hour_of_day) {
                auto [s, c] = encode_cyclic(local.hour, 24.0);
                hod_sin[t] = s;
                hod_cos[t] = c;
            }
            if (spec.day_of_week) {
                auto [s, c] = encode_cyclic(wd, 7.0);
                dow_sin[t] = s;
                dow_cos[t] = c;
            }
            if (spec.day_of_year) {
                auto [s, c] = encode_cyclic(day_of_year(local.date) - 1, 365.25);
                doy_sin[t] = s;
                doy_cos[t] = c;
            }
            if (spec.weekend_flag) weekend[t] = wd >= 5 ? 1.0 : 0.0;
        }
        if (spec.hour_of_day) {
            push_column(full, "hod_sin", std::move(hod_sin), FeatureGroup::Calendar);
            push_column(full, "hod_cos", std::move(hod_cos), FeatureGroup::Calendar);
        }
        if (spec.day_of_week) {
            push_column(full, "dow_sin", std::move(dow_sin), FeatureGroup::Calendar);
            push_column(full, "dow_cos", std::move(dow_cos), FeatureGroup::Calendar);
        }
        if (spec.day_of_year) {
            push_column(full, "doy_sin", std::move(doy_sin), FeatureGroup::Calendar);
            push_column(full, "doy_cos", std::move(doy_cos), FeatureGroup::Calendar);
        }
        if (spec.weekend_flag)
            push_column(full, "is_weekend", std::move(weekend), FeatureGroup::Calendar);
    }

    for (std::size_t c = 0; c < panel.num_columns(); ++c) {
        const auto& name = panel.column_names[c];
        const FeatureGroup group = spec.exogenous_groups.at(name);
        push_column(full, name, panel.columns[c], group);
        if (group == FeatureGroup::Reservoir && spec.reservoir_anomaly)
            push_column(full, name + "_anom",
                        reservoir_anomaly_column(panel.columns[c], panel.index,
                                                 spec.anomaly_baseline_end),
                        FeatureGroup::Reservoir);
    }

    FeatureMatrix out;
    out.start = panel.index.at(warmup);
    out.names = std::move(full.names);
    out.groups = std::move(full.groups);
    out.cols.reserve(full.cols.size());
    for (auto& col : full.cols) {
        std::vector<double> trimmed(col.begin() + static_cast<std::ptrdiff_t>(warmup),
                                    col.end());
        for (double v : trimmed)
            if (is_missing(v))
                throw std::runtime_error("missing value survived warm-up trimming");
        out.cols.push_back(std::move(trimmed));
    }
    out.target.assign(panel.target.begin() + static_cast<std::ptrdiff_t>(warmup),
                      panel.target.end());
    return out;
}

GroupMask group_mask_exclude(const FeatureMatrix& m, std::optional<FeatureGroup> exclude) {
    GroupMask mask;
    if (exclude && !m.has_group(*exclude)) mask.missing_group_warning = true;
    for (std::size_t i = 0; i < m.num_columns(); ++i)
        if (!exclude || m.groups[i] != *exclude) mask.column_indices.push_back(i);
    return mask;
}

GroupMask group_mask_keep(const FeatureMatrix& m, const std::vector<FeatureGroup>& keep) {
    GroupMask mask;
    for (FeatureGroup g : keep)
        if (!m.has_group(g)) mask.missing_group_warning = true;
    for (std::size_t i = 0; i < m.num_columns(); ++i)
        if (std::find(keep.begin(), keep.end(), m.groups[i]) != keep.end())
            mask.column_indices.push_back(i);
    return mask;
}

DataSlice slice(const FeatureMatrix& m, const RowRange& rows,
                const std::vector<std::size_t>& col_idx) {
    if (rows.end > m.rows() || rows.begin > rows.end)
        throw std::invalid_argument("row range outside the feature matrix");
    DataSlice s;
    s.n = rows.size();
    s.y = m.target.data() + rows.begin;
    s.names.reserve(col_idx.size());
    s.cols.reserve(col_idx.size());
    for (std::size_t c : col_idx) {
        if (c >= m.num_columns())
            throw std::invalid_argument("column index outside the feature matrix");
        s.names.push_back(m.names[c]);
        s.cols.push_back(m.cols[c].data() + rows.begin);
    }
    return s;
}

DataSlice slice_all_columns(const FeatureMatrix& m, const RowRange& rows) {
    std::vector<std::size_t> idx(m.num_columns());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return slice(m, rows, idx);
}

}  // namespace epf
