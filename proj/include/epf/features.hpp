#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "epf/panel.hpp"
#include "epf/time_utils.hpp"

namespace epf {

enum class FeatureGroup { Lags, Calendar, Weather, Reservoir, Commodities, LoadWsf };

const std::vector<FeatureGroup>& all_feature_groups();
std::string to_string(FeatureGroup g);
FeatureGroup feature_group_from_string(const std::string& s);

enum class RollingStat { Mean, Std };

struct RollingSpec {
    int window = 24;
    RollingStat stat = RollingStat::Mean;
};

// What to build from a finalized panel. Every exogenous panel column must be
// assigned to exactly one group; columns named here but absent from a given
// zone's panel (e.g. dropped as sparse) are skipped.
struct FeatureSpec {
    std::vector<int> target_lags = {24, 48, 72, 96, 120, 144, 168};
    std::vector<RollingSpec> target_rolling = {{24, RollingStat::Mean},
                                               {24, RollingStat::Std},
                                               {168, RollingStat::Mean},
                                               {168, RollingStat::Std}};
    bool hour_of_day = true;
    bool day_of_week = true;
    bool day_of_year = true;
    bool weekend_flag = true;
    std::map<std::string, FeatureGroup> exogenous_groups;
    bool reservoir_anomaly = true;
    // Seasonal-normal baseline cutoff for reservoir anomaly: observations at
    // or after this instant never enter the per-ISO-week mean. Typically the
    // training window end; 0 means "no cutoff" (purely expanding baseline).
    // The baseline at hour t additionally uses only observations before t,
    // keeping every feature row strictly causal.
    UtcSeconds anomaly_baseline_end = 0;

    void validate() const;  // throws on bad lags/windows or day-ahead violations
};

// Causal design matrix: row r describes hour start + 3600*r, the panel
// warm-up prefix is excluded, every column carries exactly one group tag.
struct FeatureMatrix {
    UtcSeconds start = 0;
    std::vector<std::string> names;
    std::vector<std::vector<double>> cols;
    std::vector<FeatureGroup> groups;
    std::vector<double> target;

    std::size_t rows() const { return target.size(); }
    std::size_t num_columns() const { return cols.size(); }
    UtcSeconds hour_at(std::size_t row) const {
        return start + static_cast<std::int64_t>(row) * kSecondsPerHour;
    }
    std::optional<std::size_t> find_column(const std::string& name) const;
    bool has_group(FeatureGroup g) const;
};

// (sin, cos) of 2*pi*value/period. Throws if value is outside [0, period) or
// period < 2.
std::pair<double, double> encode_cyclic(double value, double period);

// Row t = series[t - lag]; the first `lag` rows are NaN warm-up. Throws when
// lag <= 0 or lag >= series length.
std::vector<double> make_lag(const std::vector<double>& series, int lag);

// Row t = statistic over series[t-window .. t-1]; the current hour is always
// excluded. Std is the population standard deviation. First `window` rows are
// NaN warm-up. Throws when window < 2 or window >= series length.
std::vector<double> make_rolling(const std::vector<double>& series, int window,
                                 RollingStat stat);

// Builds the full group-tagged matrix from a finalized panel. The warm-up
// prefix (at least 168 rows, more if the spec asks for longer lags) is
// dropped so no missing values remain.
FeatureMatrix assemble_matrix(const HourlyPanel& panel, const FeatureSpec& spec);

struct GroupMask {
    std::vector<std::size_t> column_indices;
    bool missing_group_warning = false;
};

// All columns outside `exclude`; with nullopt, the full column set.
GroupMask group_mask_exclude(const FeatureMatrix& m, std::optional<FeatureGroup> exclude);

// Exactly the columns of the listed groups (e.g. lags + one exogenous group).
GroupMask group_mask_keep(const FeatureMatrix& m, const std::vector<FeatureGroup>& keep);

// Half-open row window [begin, end) of a FeatureMatrix.
struct RowRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
    bool empty() const { return end <= begin; }
};

// Column-major view over one row window and a column subset; pointers stay
// valid while the matrix lives.
struct DataSlice {
    std::vector<std::string> names;
    std::vector<const double*> cols;
    const double* y = nullptr;
    std::size_t n = 0;

    std::size_t num_columns() const { return cols.size(); }
};

DataSlice slice(const FeatureMatrix& m, const RowRange& rows,
                const std::vector<std::size_t>& col_idx);
DataSlice slice_all_columns(const FeatureMatrix& m, const RowRange& rows);

}  // namespace epf
