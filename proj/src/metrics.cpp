#include "epf/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace epf {

namespace {

void check_lengths(std::span<const double> actual, std::span<const double> forecast) {
    if (actual.size() != forecast.size())
        throw std::invalid_argument("metric inputs differ in length: " +
                                    std::to_string(actual.size()) + " vs " +
                                    std::to_string(forecast.size()));
    if (actual.empty())
        throw std::invalid_argument("metric inputs are empty");
}

}  // namespace

double mae(std::span<const double> actual, std::span<const double> forecast) {
    check_lengths(actual, forecast);
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i)
        sum += std::abs(actual[i] - forecast[i]);
    return sum / static_cast<double>(actual.size());
}

double rmse(std::span<const double> actual, std::span<const double> forecast) {
    check_lengths(actual, forecast);
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double e = actual[i] - forecast[i];
        sum += e * e;
    }
    return std::sqrt(sum / static_cast<double>(actual.size()));
}

double smape(std::span<const double> actual, std::span<const double> forecast) {
    check_lengths(actual, forecast);
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double denom = std::abs(actual[i]) + std::abs(forecast[i]);
        if (denom > 0.0) sum += 2.0 * std::abs(actual[i] - forecast[i]) / denom;
    }
    return sum / static_cast<double>(actual.size()) * 100.0;
}

double r2(std::span<const double> actual, std::span<const double> forecast) {
    check_lengths(actual, forecast);
    if (actual.size() < 2)
        throw std::invalid_argument("r2 needs at least 2 observations");
    double mean = 0.0;
    for (double a : actual) mean += a;
    mean /= static_cast<double>(actual.size());
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double d = actual[i] - mean;
        const double e = actual[i] - forecast[i];
        ss_tot += d * d;
        ss_res += e * e;
    }
    if (ss_tot == 0.0)
        throw std::invalid_argument("r2 undefined for constant actuals");
    return 1.0 - ss_res / ss_tot;
}

MetricReport metric_report(std::span<const double> actual, std::span<const double> forecast) {
    MetricReport r;
    r.mae = mae(actual, forecast);
    r.rmse = rmse(actual, forecast);
    r.smape = smape(actual, forecast);
    r.r2 = r2(actual, forecast);
    r.n = actual.size();
    return r;
}

}  // namespace epf
