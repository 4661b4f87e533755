#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "epf/time_utils.hpp"

namespace epf {

enum class ZoneId { NO1, NO2, NO3, NO4, NO5 };

const std::vector<ZoneId>& all_zones();
std::string to_string(ZoneId zone);
ZoneId zone_from_string(const std::string& s);

enum class Frequency { Hourly, Daily, Weekly };
enum class Availability { DayAhead, PostDelivery };

std::string to_string(Frequency f);
Frequency frequency_from_string(const std::string& s);
std::string to_string(Availability a);
Availability availability_from_string(const std::string& s);

inline bool is_missing(double v) { return std::isnan(v); }
inline double missing_value() { return std::nan(""); }

// One source series as published: mixed frequency, timestamps strictly
// increasing, values in source units.
struct RawSeries {
    std::string name;
    Frequency frequency = Frequency::Hourly;
    Availability availability = Availability::DayAhead;
    std::vector<UtcSeconds> timestamps;
    std::vector<double> values;

    void validate() const;  // throws on empty / non-increasing timestamps
};

// Contiguous hourly UTC index: [start, start + 3600*size), step 3600 s by
// construction.
struct HourlyIndex {
    UtcSeconds start = 0;
    std::size_t size = 0;

    UtcSeconds at(std::size_t i) const { return start + static_cast<std::int64_t>(i) * kSecondsPerHour; }
    UtcSeconds end() const { return at(size); }
    std::optional<std::size_t> position(UtcSeconds t) const;
};

// Throws on non-hour-aligned bounds or start >= end.
HourlyIndex build_hourly_index(UtcSeconds start, UtcSeconds end);

struct ColumnMeta {
    Frequency frequency = Frequency::Hourly;
    Availability availability = Availability::DayAhead;
    std::string unit;
    std::string effective;  // free-text note on what the source timestamps mean
};

// Zone-scoped hourly table: target price plus aligned exogenous columns.
// NaN marks a missing cell until fill_edges finalizes the panel.
struct HourlyPanel {
    ZoneId zone = ZoneId::NO1;
    HourlyIndex index;
    std::vector<double> target;  // day-ahead price, EUR/MWh
    std::vector<std::string> column_names;
    std::vector<std::vector<double>> columns;
    std::vector<ColumnMeta> column_meta;

    std::size_t rows() const { return index.size; }
    std::size_t num_columns() const { return columns.size(); }
    std::optional<std::size_t> find_column(const std::string& name) const;
    void add_column(std::string name, std::vector<double> values, ColumnMeta meta);
    void validate() const;
};

// Forward-fill `series` onto `index`: each hour carries the most recent
// prior-or-equal observation; hours before the first observation stay NaN.
std::vector<double> align_forward_fill(const RawSeries& series, const HourlyIndex& index);

// Drops every post-delivery column. Names of removed columns land in
// `removed` when given.
HourlyPanel leakage_filter(const HourlyPanel& panel, std::vector<std::string>* removed = nullptr);

struct SparseDrop {
    std::string name;
    double missing_fraction = 0.0;
};

// Removes columns whose missing fraction strictly exceeds `threshold`.
HourlyPanel drop_sparse_columns(const HourlyPanel& panel, double threshold = 0.5,
                                std::vector<SparseDrop>* dropped = nullptr);

struct FillCounts {
    std::size_t forward = 0;
    std::size_t backward = 0;
};

// Forward-then-back fills all remaining gaps (target included). Throws on an
// all-missing column.
HourlyPanel fill_edges(const HourlyPanel& panel,
                       std::map<std::string, FillCounts>* counts = nullptr);

struct DescriptiveStats {
    double mean = 0.0;
    double stddev = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;  // raw fourth standardized moment, normal = 3
    double negative_share = 0.0;
    std::map<int, double> annual_means;
    std::size_t n = 0;
};

// Target-price moments; throws below 4 observations.
DescriptiveStats descriptive_stats(const HourlyPanel& panel);

}  // namespace epf
