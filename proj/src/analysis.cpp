#include "epf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace epf {

std::vector<double> fixed_round_forecast(const FeatureMatrix& m, const SplitRows& rows,
                                         const std::vector<std::size_t>& columns,
                                         int rounds, GBDTConfig config) {
    if (rounds < 1) throw std::invalid_argument("fixed-round retrain needs rounds >= 1");
    config.early_stopping = false;
    config.max_rounds = rounds;
    const auto train = slice(m, rows.train, columns);
    const auto val = slice(m, rows.val, columns);
    const GBDTModel model = gbdt_fit(train, val, config);
    return model.predict(slice(m, rows.test, columns), rounds);
}

namespace {

std::span<const double> test_actual(const FeatureMatrix& m, const SplitRows& rows) {
    return {m.target.data() + rows.test.begin, rows.test.size()};
}

}  // namespace

std::vector<AblationRow> logo_ablation(const FeatureMatrix& m, const SplitRows& rows,
                                       int full_model_rounds, const GBDTConfig& config,
                                       const MetricReport& full,
                                       std::vector<std::string>* skipped) {
    std::vector<AblationRow> out;
    for (FeatureGroup group : all_feature_groups()) {
        if (!m.has_group(group)) {
            if (skipped) skipped->push_back(to_string(group));
            continue;
        }
        const auto mask = group_mask_exclude(m, group);
        const auto pred = fixed_round_forecast(m, rows, mask.column_indices,
                                               full_model_rounds, config);
        const auto report = metric_report(test_actual(m, rows), pred);
        AblationRow row;
        row.variant = "without-" + to_string(group);
        row.mae = report.mae;
        row.r2 = report.r2;
        row.delta_mae = report.mae - full.mae;
        row.delta_r2 = full.r2 - report.r2;
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<AblationRow> group_only(const FeatureMatrix& m, const SplitRows& rows,
                                    int full_model_rounds, const GBDTConfig& config,
                                    const MetricReport& full,
                                    std::vector<std::string>* skipped) {
    std::vector<AblationRow> out;
    const auto evaluate = [&](const std::string& variant,
                              const std::vector<FeatureGroup>& keep) {
        const auto mask = group_mask_keep(m, keep);
        const auto pred = fixed_round_forecast(m, rows, mask.column_indices,
                                               full_model_rounds, config);
        const auto report = metric_report(test_actual(m, rows), pred);
        AblationRow row;
        row.variant = variant;
        row.mae = report.mae;
        row.r2 = report.r2;
        row.delta_mae = report.mae - full.mae;
        row.delta_r2 = report.r2 - full.r2;
        out.push_back(std::move(row));
    };

    if (!m.has_group(FeatureGroup::Lags))
        throw std::invalid_argument("group-only ablation needs the lag group");
    evaluate("lags-only", {FeatureGroup::Lags});
    for (FeatureGroup group : all_feature_groups()) {
        if (group == FeatureGroup::Lags) continue;
        if (!m.has_group(group)) {
            if (skipped) skipped->push_back(to_string(group));
            continue;
        }
        evaluate("lags-plus-" + to_string(group), {FeatureGroup::Lags, group});
    }
    return out;
}

std::string to_string(RegimeCell cell) {
    switch (cell) {
        case RegimeCell::HighResHighGas: return "HH";
        case RegimeCell::HighResLowGas: return "HL";
        case RegimeCell::LowResHighGas: return "LH";
        case RegimeCell::LowResLowGas: return "LL";
    }
    throw std::invalid_argument("invalid RegimeCell");
}

namespace {

double median_value(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        const double lower =
            *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
        m = lower + (m - lower) / 2.0;
    }
    return m;
}

}  // namespace

RegimeLabels regime_partition(const std::vector<double>& reservoir_anomaly,
                              const std::vector<double>& ttf) {
    if (reservoir_anomaly.size() != ttf.size() || reservoir_anomaly.empty())
        throw std::invalid_argument("regime state columns must be nonempty and equal length");
    const auto degenerate = [](const std::vector<double>& v) {
        return *std::min_element(v.begin(), v.end()) ==
               *std::max_element(v.begin(), v.end());
    };
    if (degenerate(reservoir_anomaly))
        throw std::invalid_argument("reservoir state column is constant; median split degenerate");
    if (degenerate(ttf))
        throw std::invalid_argument("gas state column is constant; median split degenerate");

    RegimeLabels labels;
    labels.reservoir_median = median_value(reservoir_anomaly);
    labels.ttf_median = median_value(ttf);
    labels.cell.resize(ttf.size());
    for (std::size_t i = 0; i < ttf.size(); ++i) {
        const bool res_high = reservoir_anomaly[i] > labels.reservoir_median;
        const bool gas_high = ttf[i] > labels.ttf_median;
        labels.cell[i] = res_high
                             ? (gas_high ? RegimeCell::HighResHighGas : RegimeCell::HighResLowGas)
                             : (gas_high ? RegimeCell::LowResHighGas : RegimeCell::LowResLowGas);
    }
    return labels;
}

RegimeReport regime_metrics(const RegimeLabels& labels, std::span<const double> actual,
                            const std::map<std::string, std::vector<double>>& forecasts) {
    if (labels.cell.size() != actual.size())
        throw std::invalid_argument("regime labels do not cover the evaluated hours");
    RegimeReport report;
    report.reservoir_median = labels.reservoir_median;
    report.ttf_median = labels.ttf_median;

    for (const auto& [name, forecast] : forecasts) {
        if (forecast.size() != actual.size())
            throw std::invalid_argument("forecast '" + name + "' length mismatch");
        RegimeModelReport mr;
        std::map<RegimeCell, std::pair<std::vector<double>, std::vector<double>>> buckets;
        for (std::size_t i = 0; i < actual.size(); ++i) {
            auto& [a, f] = buckets[labels.cell[i]];
            a.push_back(actual[i]);
            f.push_back(forecast[i]);
        }
        for (const auto& [cell, data] : buckets) {
            RegimeCellMetrics cm;
            cm.smape = smape(data.first, data.second);
            cm.rmse = rmse(data.first, data.second);
            cm.n = data.first.size();
            mr.cells[cell] = cm;
        }
        mr.incomplete_cells = mr.cells.size() < 4;

        // Marginals are unweighted means over the available cells on each side.
        const auto side_mean = [&](std::initializer_list<RegimeCell> side) {
            double sum = 0.0;
            int count = 0;
            for (RegimeCell c : side) {
                const auto it = mr.cells.find(c);
                if (it != mr.cells.end()) {
                    sum += it->second.smape;
                    ++count;
                }
            }
            return count > 0 ? sum / count : 0.0;
        };
        mr.marginal_reservoir =
            side_mean({RegimeCell::LowResHighGas, RegimeCell::LowResLowGas}) -
            side_mean({RegimeCell::HighResHighGas, RegimeCell::HighResLowGas});
        mr.marginal_gas =
            side_mean({RegimeCell::HighResHighGas, RegimeCell::LowResHighGas}) -
            side_mean({RegimeCell::HighResLowGas, RegimeCell::LowResLowGas});
        report.models[name] = std::move(mr);
    }
    return report;
}

std::vector<FailureRecord> worst_errors(
    const FeatureMatrix& m, const RowRange& rows, std::span<const double> forecast,
    const std::map<std::string, std::vector<double>>& state_columns, std::size_t k) {
    if (forecast.size() != rows.size())
        throw std::invalid_argument("forecast length does not match the row range");
    if (k > rows.size())
        throw std::invalid_argument("cannot extract more failures than evaluated hours");
    for (const auto& [name, col] : state_columns)
        if (col.size() != rows.size())
            throw std::invalid_argument("state column '" + name + "' length mismatch");

    std::vector<std::size_t> order(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(m.target[rows.begin + a] - forecast[a]) >
               std::abs(m.target[rows.begin + b] - forecast[b]);
    });

    std::vector<FailureRecord> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t r = order[i];
        FailureRecord rec;
        rec.timestamp = m.hour_at(rows.begin + r);
        rec.actual = m.target[rows.begin + r];
        rec.forecast = forecast[r];
        rec.abs_error = std::abs(rec.actual - rec.forecast);
        rec.under_prediction = rec.forecast < rec.actual;
        const CivilTime local = oslo_civil_from_utc(rec.timestamp);
        rec.weekday = weekday_from_days(
            days_from_civil(local.date.year, local.date.month, local.date.day));
        rec.hour_of_day = local.hour;
        for (const auto& [name, col] : state_columns) rec.state[name] = col[r];
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace epf
