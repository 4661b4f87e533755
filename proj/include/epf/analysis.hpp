#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "epf/features.hpp"
#include "epf/gbdt.hpp"
#include "epf/metrics.hpp"
#include "epf/protocol.hpp"
#include "epf/time_utils.hpp"

namespace epf {

struct AblationRow {
    std::string variant;  // "full", "without-<group>", "lags-plus-<group>", "lags-only"
    double mae = 0.0;
    double r2 = 0.0;
    double delta_mae = 0.0;
    double delta_r2 = 0.0;
};

// Leave-one-group-out: retrain with each group removed, boosting rounds
// pinned to the full model's early-stopped count.
//   delta_mae = mae(without) - mae(full); delta_r2 = r2(full) - r2(without).
// Groups absent from the matrix are skipped and reported in `skipped`.
std::vector<AblationRow> logo_ablation(const FeatureMatrix& m, const SplitRows& rows,
                                       int full_model_rounds, const GBDTConfig& config,
                                       const MetricReport& full,
                                       std::vector<std::string>* skipped = nullptr);

// Lags-only plus lags+<each exogenous group>, same fixed-round protocol.
//   delta_mae = mae(variant) - mae(full); delta_r2 = r2(variant) - r2(full).
std::vector<AblationRow> group_only(const FeatureMatrix& m, const SplitRows& rows,
                                    int full_model_rounds, const GBDTConfig& config,
                                    const MetricReport& full,
                                    std::vector<std::string>* skipped = nullptr);

// Fixed-round retrain on a column subset; returns the test forecast.
std::vector<double> fixed_round_forecast(const FeatureMatrix& m, const SplitRows& rows,
                                         const std::vector<std::size_t>& columns,
                                         int rounds, GBDTConfig config);

// Joint market state of one hour: reservoir high/low x gas high/low.
enum class RegimeCell : int { HighResHighGas = 0, HighResLowGas = 1,
                              LowResHighGas = 2, LowResLowGas = 3 };

std::string to_string(RegimeCell cell);  // "HH", "HL", "LH", "LL"

struct RegimeLabels {
    std::vector<RegimeCell> cell;
    double reservoir_median = 0.0;
    double ttf_median = 0.0;
};

// Median split on both state columns; strictly above the median is "high",
// ties go low. Throws on constant state columns.
RegimeLabels regime_partition(const std::vector<double>& reservoir_anomaly,
                              const std::vector<double>& ttf);

struct RegimeCellMetrics {
    double smape = 0.0;
    double rmse = 0.0;
    std::size_t n = 0;
};

struct RegimeModelReport {
    std::map<RegimeCell, RegimeCellMetrics> cells;  // empty cells are absent
    double marginal_reservoir = 0.0;  // mean sMAPE(low res) - mean sMAPE(high res)
    double marginal_gas = 0.0;        // mean sMAPE(high ttf) - mean sMAPE(low ttf)
    bool incomplete_cells = false;
};

struct RegimeReport {
    double reservoir_median = 0.0;
    double ttf_median = 0.0;
    std::map<std::string, RegimeModelReport> models;
};

RegimeReport regime_metrics(const RegimeLabels& labels, std::span<const double> actual,
                            const std::map<std::string, std::vector<double>>& forecasts);

struct FailureRecord {
    UtcSeconds timestamp = 0;
    double actual = 0.0;
    double forecast = 0.0;
    double abs_error = 0.0;
    bool under_prediction = false;
    int weekday = 0;      // Europe/Oslo, 0 = Monday
    int hour_of_day = 0;  // Europe/Oslo
    std::map<std::string, double> state;
};

// Top-k hours by absolute error, descending; ties order by timestamp.
std::vector<FailureRecord> worst_errors(
    const FeatureMatrix& m, const RowRange& rows, std::span<const double> forecast,
    const std::map<std::string, std::vector<double>>& state_columns, std::size_t k);

}  // namespace epf
