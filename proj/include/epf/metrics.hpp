#pragma once

#include <cstddef>
#include <span>

namespace epf {

struct MetricReport {
    double mae = 0.0;    // EUR/MWh
    double rmse = 0.0;   // EUR/MWh
    double smape = 0.0;  // percent, [0, 200]
    double r2 = 0.0;
    std::size_t n = 0;
};

double mae(std::span<const double> actual, std::span<const double> forecast);
double rmse(std::span<const double> actual, std::span<const double> forecast);

// Mean of 2|p - phat| / (|p| + |phat|) * 100; a term with both values exactly
// zero contributes 0.
double smape(std::span<const double> actual, std::span<const double> forecast);

// 1 - SS_res/SS_tot, SS_tot centered on the evaluation-set mean. Throws on
// n < 2 or constant actuals.
double r2(std::span<const double> actual, std::span<const double> forecast);

MetricReport metric_report(std::span<const double> actual, std::span<const double> forecast);

}  // namespace epf
